#include <doctest.h>

#include <cmath>

#include "dwlab/config.hpp"

using namespace dwlab;

TEST_CASE("config round trip is lossless") {
  RunConfig c;
  c.n = 2;
  c.N = 3;
  c.L = 5;
  c.shifts = 4;
  c.eps1 = 0.1 / 3;
  c.eps2 = 0.2;
  c.eps3 = 1.0 / 7;
  c.lambda = 3.141592653589793;
  c.seed = 18446744073709551557ULL;
  c.partition = 1e-300;
  c.report = "out/r.json";
  c.out_dir = "out";
  const RunConfig back = parse_config(format_config(c));
  CHECK(back == c);
  CHECK(format_config(back) == format_config(c));
  CHECK(config_hash(back) == config_hash(c));
  RunConfig d = c;
  d.eps3 = std::nextafter(d.eps3, 1.0);
  CHECK(config_hash(d) != config_hash(c));
  CHECK(parse_config("") == RunConfig{});
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config errors and validation") {
  CHECK_THROWS_AS(parse_config("[grid]\nn=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nope]\nx=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\n"), ConfigError);
  RunConfig c;
  CHECK_NOTHROW(validate(c, true));
  c.eps3 = c.eps2 * c.eps2 / 4;
  CHECK_NOTHROW(validate(c, false));
  CHECK_THROWS_AS(validate(c, true), ConfigError);
  c = RunConfig{};
  c.lambda = 1;
  CHECK_THROWS_AS(validate(c, false), ConfigError);
  c = RunConfig{};
  c.eps2 = 1;
  CHECK_THROWS_AS(validate(c, false), ConfigError);
}
