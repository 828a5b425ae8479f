#include "kamtorus.h"

#include <cstring>
#include <string>

#include "kamtorus/config.hpp"
#include "kamtorus/io.hpp"
#include "kamtorus/runner.hpp"

struct kam_config {
  kamtorus::config::RunConfig cfg;
};

struct kam_model {
  kamtorus::fourier::FourierModel model;
};

namespace {

thread_local std::string t_error = "";

kam_status map_error(const kamtorus::Error& e) {
  t_error = e.what();
  switch (e.code()) {
    case kamtorus::Errc::config_error:
      return KAM_E_CONFIG;
    case kamtorus::Errc::io_error:
      return KAM_E_IO;
    case kamtorus::Errc::invalid_argument:
    case kamtorus::Errc::shape_mismatch:
      return KAM_E_INVALID;
    default:
      return KAM_E_INTERNAL;
  }
}

template <typename Fn>
kam_status guarded(Fn&& fn) {
  try {
    fn();
    return KAM_OK;
  } catch (const kamtorus::Error& e) {
    return map_error(e);
  } catch (const std::exception& e) {
    t_error = e.what();
    return KAM_E_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* kam_version(void) { return "0.1.0"; }

const char* kam_last_error(void) { return t_error.c_str(); }

kam_status kam_config_open(const char* path, kam_config** out) {
  if (!path || !out) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] {
    auto* h = new kam_config{kamtorus::config::RunConfig::from_file(path)};
    *out = h;
  });
}

kam_status kam_config_parse(const char* text, kam_config** out) {
  if (!text || !out) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] {
    auto* h = new kam_config{kamtorus::config::RunConfig::from_string(text)};
    *out = h;
  });
}

kam_status kam_config_set(kam_config* cfg, const char* section, const char* key,
                          const char* value) {
  if (!cfg || !section || !key || !value) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  cfg->cfg.set(section, key, value);
  return KAM_OK;
}

void kam_config_free(kam_config* cfg) { delete cfg; }

int kam_run(kam_config* cfg, const char* command, const char* out_dir, const char* torus_path,
            unsigned seed, int threads) {
  if (!cfg || !command || !out_dir) {
    t_error = "null argument";
    return KAM_E_CONFIG;
  }
  kamtorus::runner::RunContext ctx;
  ctx.cfg = cfg->cfg;
  ctx.out_dir = out_dir;
  ctx.seed = seed;
  ctx.threads = threads;
  int code = kamtorus::runner::run_command(command, ctx, torus_path ? torus_path : "");
  if (code != 0) t_error = kamtorus::runner::last_error();
  return code;
}

kam_status kam_model_load(const char* path, kam_model** out) {
  if (!path || !out) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] {
    auto* h = new kam_model{kamtorus::io::load_model(path)};
    *out = h;
  });
}

kam_status kam_model_save_csv(const kam_model* m, const char* path) {
  if (!m || !path) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] { kamtorus::io::save_csv(m->model, path); });
}

kam_status kam_model_save_fmd(const kam_model* m, const char* path) {
  if (!m || !path) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] { kamtorus::io::save_fmd(m->model, path); });
}

kam_status kam_model_info(const kam_model* m, int* dim, int* rows, int* cols) {
  if (!m) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  if (dim) *dim = m->model.dim();
  if (rows) *rows = m->model.rows();
  if (cols) *cols = m->model.cols();
  return KAM_OK;
}

kam_status kam_model_eval(const kam_model* m, const double* theta, double* values) {
  if (!m || !theta || !values) {
    t_error = "null argument";
    return KAM_E_INVALID;
  }
  return guarded([&] {
    std::array<double, kamtorus::fourier::kMaxDim> point{0.0, 0.0, 0.0};
    for (int l = 0; l < m->model.dim(); ++l) point[l] = theta[l];
    Eigen::MatrixXd v = kamtorus::fourier::synthesize_at(m->model, point);
    for (int r = 0; r < v.rows(); ++r)
      for (int c = 0; c < v.cols(); ++c) values[r * v.cols() + c] = v(r, c);
  });
}

void kam_model_free(kam_model* m) { delete m; }

}  // extern "C"
