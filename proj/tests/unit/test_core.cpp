#include <cstdlib>
#include <limits>
#include <set>
#include <random>
#include <vector>

#include "doctest.h"
#include "settler/core/config.hpp"
#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"
#include "settler/core/parallel.hpp"
#include "settler/core/types.hpp"
#include "support.hpp"

using namespace settler;

TEST_CASE("normalize maps bounds and midpoint") {
  CHECK(normalize(0.071, 0.071, 0.091) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(normalize(0.091, 0.071, 0.091) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(normalize(0.081, 0.071, 0.091)) < 1e-12);
}

TEST_CASE("normalize rejects empty interval") {
  try {
    normalize(0.5, 1.0, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::config);
  }
  CHECK_THROWS_AS(denormalize(0.0, 2.0, 1.0), Error);
}

TEST_CASE("denormalize inverts normalize across the interval") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double lb = -5.0 + 10.0 * u(rng);
    const double ub = lb + 1e-3 + 5.0 * u(rng);
    const double x = lb + (ub - lb) * u(rng);
    const double back = denormalize(normalize(x, lb, ub), lb, ub);
    CHECK(std::abs(back - x) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max({std::abs(lb), std::abs(ub), 1.0}));
  }
}

TEST_CASE("scaling constants") {
  ScalingConstants s;
  CHECK(s.scale_height(0.2) == 1.0);
  CHECK(s.scale_flow(0.001) == 1.0);
  CHECK(s.scale_height(0.0) == 0.0);
  CHECK(s.unscale_height(s.scale_height(0.0731)) == doctest::Approx(0.0731).epsilon(1e-15));
  CHECK(s.unscale_flow(s.scale_flow(3.3e-4)) == doctest::Approx(3.3e-4).epsilon(1e-15));
}

TEST_CASE("default configuration constants") {
  const SettlerConfig c = settler_config_from(ConfigFile{});
  CHECK(c.properties.rho_heavy == 996.0);
  CHECK(c.properties.rho_light == 825.0);
  CHECK(c.properties.delta_rho() == 171.0);
  CHECK(c.properties.eta_heavy == 0.82e-3);
  CHECK(c.properties.gamma == 8.2e-3);
  CHECK(c.geometry.length == 1.0);
  CHECK(c.geometry.radius == 0.1);
  CHECK(c.geometry.height() == 0.2);
  CHECK(c.dispersion.eps_dp == 0.9);
  CHECK(c.dispersion.eps_in == 0.5);
  CHECK(c.dispersion.sigma_selfsimilar == 0.32);
  CHECK(c.dispersion.n_swarm == 2.0);
  CHECK(c.scaling.h_scale == 0.2);
  CHECK(c.scaling.q_scale == 1e-3);
  CHECK(c.bounds.h_hp.interpolation.lb == 0.071);
  CHECK(c.bounds.h_dp.extrapolation.ub == 0.069);
  CHECK(c.bounds.q_in.extrapolation.ub == 0.644e-3);
}

TEST_CASE("state and flow types reject non-finite values") {
  CHECK_THROWS_AS(SettlerState(std::nan(""), 0.01), Error);
  CHECK_THROWS_AS(SettlerState(0.08, std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(ControlInput(std::nan("")), Error);
  CHECK_THROWS_AS(FlowMeasurement(1e-4, std::nan("")), Error);
  CHECK_THROWS_AS(InternalFlows(std::numeric_limits<double>::infinity(), 0.0), Error);
  CHECK_THROWS_AS(SettlerState(-0.01, 0.01), Error);
  CHECK_NOTHROW(SettlerState(0.08, 0.04));
}

TEST_CASE("bounds validation") {
  SettlerConfig c;
  c.bounds.h_hp.interpolation.ub = 0.2;
  CHECK_THROWS_AS(c.validate(), Error);
  SettlerConfig d;
  d.bounds.q_in.extrapolation = {1e-3, 1e-4};
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("config file overrides and errors") {
  const auto f = ConfigFile::parse("[geometry]\nlength = 2.5\n[bounds]\nh_dp_extrap_ub = 0.08\n[x]\nflag = yes\n");
  const SettlerConfig c = settler_config_from(f);
  CHECK(c.geometry.length == 2.5);
  CHECK(c.bounds.h_dp.extrapolation.ub == 0.08);
  CHECK(f.get_bool("x.flag", false));
  CHECK(f.get_int("x.missing", 7) == 7);
  CHECK_THROWS_AS(ConfigFile::parse("[geometry]\nlength = abc\n").get("geometry.length", 1.0), Error);
  CHECK_THROWS_AS(settler_config_from(ConfigFile::parse("[geometry]\nradius = -1\n")), Error);
  CHECK_THROWS_AS(ConfigFile::parse("[broken\n"), Error);
}

TEST_CASE("config resolution prefers the explicit path, then the environment") {
  const auto dir = test::scratch("core-config");
  write_file_atomic(dir / "a.ini", std::string_view("[geometry]\nlength = 3\n"));
  write_file_atomic(dir / "b.ini", std::string_view("[geometry]\nlength = 4\n"));
  setenv("SETTLER_CONFIG", (dir / "b.ini").c_str(), 1);
  CHECK(resolve_config((dir / "a.ini").string()).get("geometry.length", 0.0) == 3.0);
  CHECK(resolve_config("").get("geometry.length", 0.0) == 4.0);
  unsetenv("SETTLER_CONFIG");
  CHECK(resolve_config("").entries().empty());
  CHECK_THROWS_AS(resolve_config((dir / "missing.ini").string()), Error);
}

TEST_CASE("atomic write, read back and sha256") {
  const auto dir = test::scratch("core-fs");
  write_file_atomic(dir / "x.txt", std::string_view("abc"));
  CHECK(read_file(dir / "x.txt") == "abc");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
  CHECK_THROWS_AS(read_file(dir / "nope"), Error);
}

TEST_CASE("parallel_for results do not depend on the thread count") {
  auto run = [](const char* threads) {
    setenv("SETTLER_THREADS", threads, 1);
    std::vector<double> out(257);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = std::sin(static_cast<double>(i)) * 3.0; });
    return out;
  };
  const auto a = run("1");
  const auto b = run("4");
  unsetenv("SETTLER_THREADS");
  CHECK(a == b);
}

TEST_CASE("parallel_for rethrows the first error") {
  setenv("SETTLER_THREADS", "3", 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 5) fail(ErrorCategory::numeric, "boom");
                  }),
                  Error);
  unsetenv("SETTLER_THREADS");
}

TEST_CASE("error categories map to distinct exit codes") {
  std::set<int> codes;
  for (auto c : {ErrorCategory::config, ErrorCategory::domain, ErrorCategory::singularity, ErrorCategory::divergence,
                 ErrorCategory::parse, ErrorCategory::io, ErrorCategory::numeric, ErrorCategory::reproducibility}) {
    codes.insert(exit_code(c));
    CHECK(exit_code(c) != 0);
    CHECK(to_string(c) != "unknown");
  }
  CHECK(codes.size() == 8);
}
