#pragma once

// Batch front end: resolve a run configuration into a concrete scenario
// (system, initial torus, Diophantine data, strip schedule) and execute the
// solve / certify / lift / bench / constants commands, writing JSON and CSV
// artifacts. Exit codes: 0 success/converged/pass, 1 certificate fail,
// 2 solver divergence, 3 configuration error.

#include <string>

#include "kamtorus/certificate.hpp"
#include "kamtorus/config.hpp"
#include "kamtorus/newton.hpp"
#include "kamtorus/systems.hpp"

namespace kamtorus::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCertifyFail = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitConfigError = 3;

struct RunContext {
  config::RunConfig cfg;
  std::string out_dir = ".";
  unsigned seed = 1;
  int threads = 1;
};

/// Fully resolved inputs of one run; every "auto" is replaced by its value.
struct Scenario {
  systems::OscillatorParams params;
  geometry::HamiltonianSystem base_sys;
  geometry::HamiltonianSystem solve_sys;  // discounted field for moment systems
  bool discounted = false;
  double omega_p = 0.0;
  std::vector<double> radii;
  fourier::FourierModel K0;
  Eigen::VectorXd omega;
  fourier::DiophantineData dio;
  fourier::StripSchedule schedule;
  fourier::Axis cutoff{0, 0, 0};
  fourier::Axis grid{1, 1, 1};
  fourier::Axis cert_cutoff{0, 0, 0};
  newton::SolveOptions solve_opt;
  cert::ControlConstants control;
  cert::RussmannMode russmann_mode = cert::RussmannMode::sharp;
  int russmann_m = 0;  // 0 = auto
};

Scenario build_scenario(const RunContext& ctx);

int cmd_solve(const RunContext& ctx);
int cmd_certify(const RunContext& ctx, const std::string& torus_path);
int cmd_lift(const RunContext& ctx, const std::string& torus_path);
int cmd_bench(const RunContext& ctx);
int cmd_constants(const RunContext& ctx);

/// Dispatch by command name; maps configuration errors to exit code 3.
int run_command(const std::string& command, const RunContext& ctx,
                const std::string& torus_path = "");

/// Human-readable reason for the most recent nonzero exit in this thread.
const std::string& last_error();

}  // namespace kamtorus::runner
