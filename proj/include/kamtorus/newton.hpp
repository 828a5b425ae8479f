#pragma once

// Modified quasi-Newton method for the invariance equation
// X_h o K + L_omega K = 0: invariance error, tangent/normal projections of
// the error, the two cohomological solves with the twist condition, and both
// update rules (classical additive and modified flow/shift composition).

#include <optional>
#include <vector>

#include "kamtorus/geometry.hpp"

namespace kamtorus::newton {

using fourier::DiophantineData;
using fourier::FourierModel;
using fourier::StripSchedule;
using geometry::FrameBundle;
using geometry::HamiltonianSystem;
using Vec = Eigen::VectorXd;

/// Weighted error epsilon = max{ ||eta^L||_rho, ||eta^N||_rho / (gamma delta^tau) }.
struct WeightedErrorNorm {
  double value = 0.0;
  double etaL_norm = 0.0;
  double etaN_norm = 0.0;
  double rho = 0.0;    // strip at which the norms were measured
  double delta = 0.0;  // bite used in the weighting
};

WeightedErrorNorm weighted_error(const FourierModel& etaL, const FourierModel& etaN, double rho,
                                 const DiophantineData& dio, double delta);

/// One Newton iterate: the parameterization with its error, frames,
/// projections and diagnostics.
struct TorusState {
  FourierModel K;
  FourierModel E;
  FourierModel eta_L;
  FourierModel eta_N;
  FrameBundle bundle;
  WeightedErrorNorm err;
  double rho = 0.0;    // strip bookkeeping (advisory in the solver)
  double delta = 0.0;  // bite scheduled for the step out of this state
  double composition_tail = 0.0;
  double avg_etaN_abs = 0.0;
  int iteration = 0;
};

/// Tangent/normal corrections: L_omega xi^N = eta^N - <eta^N>,
/// <xi^N> = <T>^{-1} <eta^L - T R eta^N>, xi^L = R(eta^L - T xi^N), <xi^L> = 0.
struct CorrectionData {
  FourierModel xi_N;        // n-vector
  FourierModel xi_L;        // n-vector, zero average
  Eigen::VectorXd avg_xi_N;
};

FourierModel invariance_error(const FourierModel& K, const HamiltonianSystem& sys,
                              const Vec& omega, double* tail = nullptr);

/// eta^L = -N^T Omega.K E, eta^N = L^T Omega.K E.
void project_error(const FourierModel& E, const FrameBundle& bundle,
                   const HamiltonianSystem& sys, const FourierModel& K, FourierModel* eta_L,
                   FourierModel* eta_N);

CorrectionData solve_corrections(const FourierModel& eta_L, const FourierModel& eta_N,
                                 const FourierModel& T, const DiophantineData& dio);

/// K + L xi^L + N xi^N.
FourierModel update_classical(const FourierModel& K, const FrameBundle& bundle,
                              const CorrectionData& corr);

/// Phi_{xi^L_Xp} o (K + N xi^N) o (id + xi^L_DK); `bite` is the strip budget
/// that the angular shift must respect, `time_budget` the flow-time budget.
FourierModel update_modified(const FourierModel& K, const FrameBundle& bundle,
                             const CorrectionData& corr, const HamiltonianSystem& sys,
                             double bite, double time_budget);

enum class UpdateRule { modified, classical };

enum class Verdict { converged, exhausted, diverged };

struct SolveOptions {
  int max_iter = 12;
  double tol = 1e-11;
  UpdateRule rule = UpdateRule::modified;
  /// Strip at which the solver measures the weighted error (0 = real torus;
  /// the bookkeeping strips rho_j are reported alongside either way).
  double solver_rho = 0.0;
  /// Fixed-bite weighting: the weighted error always uses delta0 (the
  /// schedule's bites still drive the shift budget). If false the current
  /// schedule bite is used.
  bool fixed_delta_weight = true;
};

struct SolveResult {
  Verdict verdict = Verdict::exhausted;
  std::vector<TorusState> states;  // state 0 is the initial torus
  std::string message;
  int iterations = 0;

  const TorusState& final_state() const { return states.back(); }
};

TorusState make_state(const FourierModel& K, const HamiltonianSystem& sys, const Vec& omega,
                      const DiophantineData& dio, double rho, double delta,
                      const SolveOptions& opt, int iteration);

/// Full loop: steps 1-6 per iteration with the geometric bite schedule.
/// Stops on tol, max_iter, or two consecutive error increases (divergence).
SolveResult iterate(const FourierModel& K0, const HamiltonianSystem& sys, const Vec& omega,
                    const DiophantineData& dio, const StripSchedule& schedule,
                    const SolveOptions& opt);

/// Least-squares slope of log eps_{j+1} vs log eps_j over the strictly
/// decreasing prefix above `floor`; the empirical convergence order.
double fitted_order(const std::vector<double>& errors, double floor = 0.0);

}  // namespace kamtorus::newton
