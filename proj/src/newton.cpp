#include "kamtorus/newton.hpp"

#include <cmath>

namespace kamtorus::newton {

using fourier::Axis;
using fourier::GridData;
using fourier::ModelSpec;

WeightedErrorNorm weighted_error(const FourierModel& etaL, const FourierModel& etaN, double rho,
                                 const DiophantineData& dio, double delta) {
  WeightedErrorNorm w;
  w.rho = rho;
  w.delta = delta;
  w.etaL_norm = fourier::strip_norm(etaL, rho);
  w.etaN_norm = fourier::strip_norm(etaN, rho);
  w.value = std::max(w.etaL_norm, w.etaN_norm / (dio.gamma * std::pow(delta, dio.tau)));
  return w;
}

FourierModel invariance_error(const FourierModel& K, const HamiltonianSystem& sys,
                              const Vec& omega, double* tail) {
  geometry::check_domain(K, sys);
  FourierModel XhK = geometry::compose_system_map(
      K, sys, [&](const geometry::Vec& z) { return geometry::Mat(sys.X_h(z)); }, 2 * sys.n, 1,
      tail);
  return fourier::add(XhK, fourier::lie_derivative(K, omega));
}

void project_error(const FourierModel& E, const FrameBundle& bundle,
                   const HamiltonianSystem& sys, const FourierModel& K, FourierModel* eta_L,
                   FourierModel* eta_N) {
  const Axis M = K.cutoff();
  FourierModel OK = geometry::compose_system_map(K, sys, sys.Omega, 2 * sys.n, 2 * sys.n);
  FourierModel OE = fourier::matmul(OK, E, M);
  *eta_L = fourier::scale(fourier::matmul(fourier::transpose(bundle.N), OE, M), -1.0);
  *eta_N = fourier::matmul(fourier::transpose(bundle.L), OE, M);
}

CorrectionData solve_corrections(const FourierModel& eta_L, const FourierModel& eta_N,
                                 const FourierModel& T, const DiophantineData& dio) {
  Eigen::MatrixXd avgT = T.average();
  double det = avgT.determinant();
  if (!(std::abs(det) >= 1e-12))
    fail(Errc::twist_failure, "twist condition fails: |det<T>| = " + std::to_string(std::abs(det)));

  const Axis M = eta_N.cutoff();
  CorrectionData corr;
  FourierModel RetaN = fourier::solve_cohomological(eta_N, dio);
  FourierModel TReta = fourier::matmul(T, RetaN, M);
  Eigen::MatrixXd rhs = eta_L.average() - TReta.average();
  corr.avg_xi_N = avgT.partialPivLu().solve(rhs.col(0));

  ModelSpec cs = eta_N.spec();
  corr.xi_N = fourier::add(RetaN, fourier::constant(cs, Eigen::MatrixXd(corr.avg_xi_N)));
  FourierModel TxiN = fourier::matmul(T, corr.xi_N, M);
  corr.xi_L = fourier::solve_cohomological(fourier::sub(eta_L, TxiN), dio);
  return corr;
}

FourierModel update_classical(const FourierModel& K, const FrameBundle& bundle,
                              const CorrectionData& corr) {
  const Axis M = K.cutoff();
  FourierModel dK = fourier::add(fourier::matmul(bundle.L, corr.xi_L, M),
                                 fourier::matmul(bundle.N, corr.xi_N, M));
  return fourier::add(K, dK);
}

FourierModel update_modified(const FourierModel& K, const FrameBundle& bundle,
                             const CorrectionData& corr, const HamiltonianSystem& sys,
                             double bite, double time_budget) {
  const int n = sys.n, d = sys.d;
  const Axis M = K.cutoff();
  FourierModel Ki = fourier::add(K, fourier::matmul(bundle.N, corr.xi_N, M));
  FourierModel xiDK = fourier::block(corr.xi_L, 0, 0, d, 1);

  if (sys.has_moment()) {
    FourierModel xiXp = fourier::block(corr.xi_L, d, 0, n - d, 1);
    for (int r = 0; r < n - d; ++r)
      if (fourier::strip_norm(fourier::block(xiXp, r, 0, 1, 1), 0.0) >= time_budget)
        fail(Errc::budget_exceeded, "flow-time correction exceeds the time-domain radius");
    // Sample the composition (K + N xi^N) o (id + xi^L_DK), then flow each
    // node for the time xi^L_Xp(theta); the flow time is taken at the
    // original angle, only the intermediate torus sees the angular shift.
    GridData shift = fourier::to_grid(xiDK, K.grid());
    GridData times = fourier::to_grid(xiXp, K.grid());
    for (int r = 0; r < d; ++r)
      if (fourier::strip_norm(fourier::block(xiDK, r, 0, 1, 1), 0.0) >= bite)
        fail(Errc::budget_exceeded, "angular correction exceeds the strip bite");
    GridData out;
    out.dim = K.dim();
    out.rows = 2 * n;
    out.cols = 1;
    out.grid = K.grid();
    long ntot = shift.node_count();
    out.values.assign(ntot * 2 * n, 0.0);
    Vec s(n - d);
    for (long i = 0; i < ntot; ++i) {
      std::array<double, fourier::kMaxDim> th = shift.theta(i);
      for (int l = 0; l < d; ++l) th[l] += shift.values[i * d + l];
      Eigen::MatrixXd w = fourier::synthesize_at(Ki, th);
      for (int r = 0; r < n - d; ++r) s[r] = times.values[i * (n - d) + r];
      Vec z = sys.Phi(s, w.col(0));
      for (int r = 0; r < 2 * n; ++r) out.values[i * 2 * n + r] = z[r];
    }
    return fourier::analyze(out, M);
  }
  return fourier::compose_shift(Ki, xiDK, bite);
}

TorusState make_state(const FourierModel& K, const HamiltonianSystem& sys, const Vec& omega,
                      const DiophantineData& dio, double rho, double delta,
                      const SolveOptions& opt, int iteration) {
  TorusState st;
  st.K = K;
  st.rho = rho;
  st.delta = delta;
  st.iteration = iteration;
  st.E = invariance_error(K, sys, omega, &st.composition_tail);
  st.bundle = geometry::build_frames(K, sys, omega);
  project_error(st.E, st.bundle, sys, K, &st.eta_L, &st.eta_N);
  st.avg_etaN_abs = st.eta_N.average().cwiseAbs().maxCoeff();
  st.err = weighted_error(st.eta_L, st.eta_N, opt.solver_rho, dio, delta);
  return st;
}

SolveResult iterate(const FourierModel& K0, const HamiltonianSystem& sys, const Vec& omega,
                    const DiophantineData& dio, const StripSchedule& schedule,
                    const SolveOptions& opt) {
  SolveResult res;
  int increases = 0;
  double weight_delta = schedule.delta0;

  TorusState st = make_state(K0, sys, omega, dio, schedule.rho0, schedule.delta0, opt, 0);
  res.states.push_back(st);

  for (int j = 0; j < opt.max_iter; ++j) {
    const TorusState& cur = res.states.back();
    if (cur.err.value <= opt.tol) {
      res.verdict = Verdict::converged;
      res.iterations = j;
      return res;
    }
    double delta_j = schedule.bite(j);
    if (!opt.fixed_delta_weight) weight_delta = delta_j;

    TorusState next;
    try {
      CorrectionData corr = solve_corrections(cur.eta_L, cur.eta_N, cur.bundle.T, dio);
      FourierModel Kn = (opt.rule == UpdateRule::modified)
                            ? update_modified(cur.K, cur.bundle, corr, sys, delta_j,
                                              sys.bounds.time_radius)
                            : update_classical(cur.K, cur.bundle, corr);
      next = make_state(Kn, sys, omega, dio, schedule.strip(j + 1), schedule.bite(j + 1), opt,
                        j + 1);
      next.err = weighted_error(next.eta_L, next.eta_N, opt.solver_rho, dio, weight_delta);
    } catch (const Error& e) {
      res.verdict = Verdict::diverged;
      res.message = e.what();
      res.iterations = j;
      return res;
    }

    // Count only clear growth; fluctuations at the roundoff floor stay benign.
    if (next.err.value > 2.0 * res.states.back().err.value) {
      if (++increases >= 2) {
        res.verdict = Verdict::diverged;
        res.message = "weighted error increased on two consecutive steps";
        res.iterations = j + 1;
        res.states.push_back(std::move(next));
        return res;
      }
    } else {
      increases = 0;
    }
    res.states.push_back(std::move(next));
  }

  res.iterations = opt.max_iter;
  if (res.states.back().err.value <= opt.tol)
    res.verdict = Verdict::converged;
  else
    res.verdict = Verdict::exhausted;
  return res;
}

double fitted_order(const std::vector<double>& errors, double floor) {
  // Use the strictly decreasing prefix with positive entries, stopping once
  // the sequence falls below `floor` (the roundoff plateau breaks the law).
  // If the floor leaves the fit underdetermined, fall back to the whole
  // decreasing prefix.
  std::vector<double> xs, ys;
  for (size_t j = 0; j + 1 < errors.size(); ++j) {
    if (!(errors[j] > 0) || !(errors[j + 1] > 0)) break;
    if (errors[j + 1] >= errors[j]) break;
    if (errors[j + 1] < floor) break;
    xs.push_back(std::log(errors[j]));
    ys.push_back(std::log(errors[j + 1]));
  }
  if (xs.size() < 2 && floor > 0) return fitted_order(errors, 0.0);
  if (xs.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return den > 0 ? num / den : 0.0;
}

}  // namespace kamtorus::newton
