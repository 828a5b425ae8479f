#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "kamtorus.h"

namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("kamtorus_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

const char* kConfig = R"(
[system]
family = oscillator
a = 5.783185307179586 9.416407384630519
b = 1.0 1.5
eps = 0.0
domain_radius = 2.5

[initial]
radii = 1.0 1.0

[diophantine]
gamma = 0.99
tau = 1.0
kmax = 128

[grid]
size = 32
cutoff = 8

[strips]
rho = 0.5
rho_inf = 0.05
delta = auto

[solve]
tol = 1e-10
max_iter = 4
)";

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(kam_version() != nullptr);
  CHECK(kam_last_error() != nullptr);
}

TEST_CASE("solve through the C API and reload the torus artifact") {
  kam_config* cfg = nullptr;
  REQUIRE(kam_config_parse(kConfig, &cfg) == KAM_OK);
  std::string dir = fresh_dir("solve");
  int code = kam_run(cfg, "solve", dir.c_str(), nullptr, 1, 1);
  CHECK(code == 0);
  CHECK(fs::exists(dir + "/torus.fmd"));

  kam_model* model = nullptr;
  REQUIRE(kam_model_load((dir + "/torus.fmd").c_str(), &model) == KAM_OK);
  int d = 0, rows = 0, cols = 0;
  CHECK(kam_model_info(model, &d, &rows, &cols) == KAM_OK);
  CHECK(d == 2);
  CHECK(rows == 4);
  CHECK(cols == 1);

  // The unperturbed torus is the circle pair: q1(0,0) = r1 = 1.
  double theta[2] = {0.0, 0.0};
  std::vector<double> values(rows * cols, 0.0);
  CHECK(kam_model_eval(model, theta, values.data()) == KAM_OK);
  CHECK(values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(values[2] == doctest::Approx(0.0).epsilon(1e-12));

  std::string copy = dir + "/copy.fmd";
  CHECK(kam_model_save_fmd(model, copy.c_str()) == KAM_OK);
  CHECK(kam_model_save_csv(model, (dir + "/copy.csv").c_str()) == KAM_OK);
  kam_model* back = nullptr;
  REQUIRE(kam_model_load(copy.c_str(), &back) == KAM_OK);
  double v2[4];
  CHECK(kam_model_eval(back, theta, v2) == KAM_OK);
  CHECK(v2[0] == values[0]);

  kam_model_free(model);
  kam_model_free(back);
  kam_config_free(cfg);
}

TEST_CASE("config mutation through the C API changes the run") {
  kam_config* cfg = nullptr;
  REQUIRE(kam_config_parse(kConfig, &cfg) == KAM_OK);
  CHECK(kam_config_set(cfg, "system", "eps", "2.5") == KAM_OK);
  std::string dir = fresh_dir("diverge");
  CHECK(kam_run(cfg, "solve", dir.c_str(), nullptr, 1, 1) == 2);
  CHECK(std::strlen(kam_last_error()) > 0);
  kam_config_free(cfg);
}

TEST_CASE("invalid arguments report KAM_E_INVALID") {
  CHECK(kam_config_open(nullptr, nullptr) == KAM_E_INVALID);
  kam_model* m = nullptr;
  CHECK(kam_model_load(nullptr, &m) == KAM_E_INVALID);
  CHECK(kam_model_info(nullptr, nullptr, nullptr, nullptr) == KAM_E_INVALID);
}

TEST_CASE("missing files and unknown commands map to status codes") {
  kam_config* cfg = nullptr;
  CHECK(kam_config_open("/nonexistent/kamtorus.ini", &cfg) == KAM_E_CONFIG);
  REQUIRE(kam_config_parse(kConfig, &cfg) == KAM_OK);
  std::string dir = fresh_dir("badcmd");
  CHECK(kam_run(cfg, "orbit", dir.c_str(), nullptr, 1, 1) == 3);
  kam_model* m = nullptr;
  CHECK(kam_model_load("/nonexistent/torus.fmd", &m) == KAM_E_IO);
  kam_config_free(cfg);
}
