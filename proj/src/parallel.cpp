#include "dwlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace dwlab {

namespace {

int env_jobs() {
  const char* v = std::getenv("DWLAB_JOBS");
  if (v == nullptr || *v == '\0') return 0;
  try {
    return std::max(1, std::stoi(v));
  } catch (...) {
    return 0;
  }
}

int& configured_jobs() {
  static int n = 0;
  return n;
}

}  // namespace

int jobs() {
  if (const int e = env_jobs(); e > 0) return e;
  if (configured_jobs() > 0) return configured_jobs();
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void set_jobs(int n) { configured_jobs() = std::max(0, n); }

}  // namespace dwlab
