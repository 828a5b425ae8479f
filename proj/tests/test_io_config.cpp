#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "kamtorus/config.hpp"
#include "kamtorus/io.hpp"

using namespace kamtorus;
using fourier::FourierModel;
using fourier::ModelSpec;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ModelSpec vec_spec() {
  ModelSpec s;
  s.dim = 2;
  s.rows = 4;
  s.cols = 1;
  s.cutoff = {5, 5, 0};
  s.grid = {16, 16, 1};
  return s;
}

}  // namespace

TEST_CASE("FMD1 round trip is bit exact") {
  FourierModel m = fourier::random_model(vec_spec(), 3u);
  std::string path = tmp_path("kamtorus_test.fmd");
  io::save_fmd(m, path);
  FourierModel back = io::load_fmd(path);
  REQUIRE(back.spec().dim == m.spec().dim);
  REQUIRE(back.data().size() == m.data().size());
  for (size_t i = 0; i < m.data().size(); ++i) CHECK(back.data()[i] == m.data()[i]);
  std::remove(path.c_str());
}

TEST_CASE("CSV round trip preserves coefficients") {
  FourierModel m = fourier::random_model(vec_spec(), 4u);
  std::string path = tmp_path("kamtorus_test.csv");
  io::save_csv(m, path);
  FourierModel back = io::load_csv(path);
  double worst = 0;
  for (size_t i = 0; i < m.data().size(); ++i)
    worst = std::max(worst, std::abs(m.data()[i] - back.data()[i]));
  CHECK(worst == 0.0);  // 17 significant digits round-trip doubles exactly
  std::remove(path.c_str());
}

TEST_CASE("load_model sniffs the binary magic") {
  FourierModel m = fourier::random_model(vec_spec(), 5u);
  std::string fmd = tmp_path("kamtorus_sniff.fmd");
  std::string csv = tmp_path("kamtorus_sniff.csv");
  io::save_fmd(m, fmd);
  io::save_csv(m, csv);
  CHECK(io::load_model(fmd).data().size() == m.data().size());
  CHECK(io::load_model(csv).data().size() == m.data().size());
  std::remove(fmd.c_str());
  std::remove(csv.c_str());
}

TEST_CASE("load rejects a missing file") {
  CHECK_THROWS_AS(io::load_model(tmp_path("nonexistent_kamtorus.fmd")), Error);
}

TEST_CASE("config parses sections, comments and lists") {
  config::RunConfig cfg = config::RunConfig::from_string(R"(
# run description
[system]
family = oscillator   # inline comment
a = 5.78 9.42
eps = 1e-3

[strips]
rho = 0.1
delta = auto
)");
  CHECK(cfg.get("system", "family", "") == "oscillator");
  CHECK(cfg.get_double("system", "eps", 0) == doctest::Approx(1e-3));
  std::vector<double> a = cfg.get_doubles("system", "a");
  REQUIRE(a.size() == 2);
  CHECK(a[1] == doctest::Approx(9.42));
  CHECK(cfg.get("strips", "delta", "") == "auto");
  CHECK(cfg.get_double("strips", "rho_inf", 0.04) == 0.04);  // fallback
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(config::RunConfig::from_string("[system]\nfamili = x\n"), Error);
  CHECK_THROWS_AS(config::RunConfig::from_string("[wormhole]\nx = 1\n"), Error);
  CHECK_THROWS_AS(config::RunConfig::from_string("key_without_section = 1\n"), Error);
}

TEST_CASE("environment variables override file values") {
  setenv("KAMTORUS_STRIPS_RHO", "0.25", 1);
  config::RunConfig cfg = config::RunConfig::from_string("[strips]\nrho = 0.1\n");
  CHECK(cfg.get_double("strips", "rho", 0) == doctest::Approx(0.25));
  unsetenv("KAMTORUS_STRIPS_RHO");
}

TEST_CASE("typed getters validate their input") {
  config::RunConfig cfg = config::RunConfig::from_string("[solve]\nmax_iter = twelve\n");
  CHECK_THROWS_AS(cfg.get_int("solve", "max_iter", 1), Error);
}
