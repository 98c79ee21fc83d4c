#pragma once

// Execution policy for the data-parallel kernels. Every kernel that takes an
// Exec has a plain serial loop kept as the reference; the OpenMP path writes
// into per-index slots so results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dwlab {

enum class Exec { serial, parallel };

/// Worker count used by Exec::parallel. Defaults to the available
/// parallelism; DWLAB_JOBS in the environment overrides any explicit value.
int jobs();
void set_jobs(int n);

/// Calls f(i) for i in [0, n). Exceptions thrown by f are rethrown on the
/// calling thread (the one with the lowest index wins).
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(jobs())
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// splitmix64; used to derive independent per-task seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL)); }

}  // namespace dwlab
