#include "kamtorus/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace kamtorus::geometry {

using fourier::Cplx;
using fourier::ModeIndex;
using fourier::ModelSpec;

namespace {

// Composition grid: fine enough to keep polynomial compositions of degree <= 3
// in the phase-space variables alias-free.
Axis composition_grid(const FourierModel& K) {
  Axis g{1, 1, 1};
  for (int l = 0; l < K.dim(); ++l) g[l] = fourier::next_pow2(2 * (3 * K.cutoff()[l]) + 1);
  return g;
}

Axis triple_cutoff(const FourierModel& K) {
  Axis c{0, 0, 0};
  for (int l = 0; l < K.dim(); ++l) c[l] = 3 * K.cutoff()[l];
  return c;
}

Eigen::MatrixXd omega0(int n) {
  Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  J0.block(0, n, n, n) = -Eigen::MatrixXd::Identity(n, n);
  J0.block(n, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
  return J0;
}

}  // namespace

GridData map_over_torus(const FourierModel& K, const Axis& grid,
                        const std::function<Mat(const Vec&)>& fn, int out_rows, int out_cols) {
  GridData kg = fourier::to_grid(K, grid);
  GridData out;
  out.dim = K.dim();
  out.rows = out_rows;
  out.cols = out_cols;
  out.grid = kg.grid;
  long ntot = kg.node_count();
  out.values.assign(ntot * out_rows * out_cols, 0.0);
  Vec z(K.rows());
  for (long i = 0; i < ntot; ++i) {
    const double* src = kg.node(i);
    for (int r = 0; r < K.rows(); ++r) z[r] = src[r];
    Mat v = fn(z);
    if (v.rows() != out_rows || v.cols() != out_cols)
      fail(Errc::shape_mismatch, "map_over_torus(): callable output shape");
    double* dst = out.node(i);
    for (int r = 0; r < out_rows; ++r)
      for (int c = 0; c < out_cols; ++c) dst[r * out_cols + c] = v(r, c);
  }
  return out;
}

FourierModel compose_system_map(const FourierModel& K, const HamiltonianSystem&,
                                const std::function<Mat(const Vec&)>& fn, int out_rows,
                                int out_cols, double* tail) {
  GridData g = map_over_torus(K, composition_grid(K), fn, out_rows, out_cols);
  FourierModel fine = fourier::analyze(g, triple_cutoff(K));
  double dropped = 0.0;
  FourierModel out = fourier::truncate(fine, K.cutoff(), 0.0, &dropped);
  if (tail) *tail = dropped;
  return out;
}

void check_domain(const FourierModel& K, const HamiltonianSystem& sys) {
  GridData kg = fourier::to_grid(K, K.grid());
  double worst = 0.0;
  for (double v : kg.values) worst = std::max(worst, std::abs(v));
  if (sys.bounds.domain_radius > 0 && worst >= sys.bounds.domain_radius)
    fail(Errc::domain_escape, "parameterization leaves the system domain (|z| = " +
                                  std::to_string(worst) + " >= " +
                                  std::to_string(sys.bounds.domain_radius) + ")");
}

FourierModel tangent_jacobian(const FourierModel& K) {
  FourierModel DK = fourier::derivative(K, 0);
  for (int l = 1; l < K.dim(); ++l) DK = fourier::hcat(DK, fourier::derivative(K, l));
  return DK;
}

FourierModel build_tangent_frame(const FourierModel& K, const HamiltonianSystem& sys,
                                 double rank_tol, double* min_sv) {
  check_domain(K, sys);
  FourierModel L = tangent_jacobian(K);
  if (sys.has_moment()) {
    FourierModel XpK = compose_system_map(K, sys, sys.X_p, 2 * sys.n, sys.n - sys.d);
    L = fourier::hcat(L, XpK);
  }
  GridData lg = fourier::to_grid(L, L.grid());
  double smin = std::numeric_limits<double>::infinity();
  long ntot = lg.node_count();
  for (long i = 0; i < ntot; ++i) {
    Eigen::JacobiSVD<Mat> svd(lg.at(i));
    smin = std::min(smin, svd.singularValues().minCoeff());
  }
  if (min_sv) *min_sv = smin;
  double scale = fourier::strip_norm(L, 0.0);
  if (smin < rank_tol * scale)
    fail(Errc::rank_deficient, "tangent frame is rank deficient (min singular value " +
                                   std::to_string(smin) + ")");
  return L;
}

FourierModel lagrangianity_residual(const FourierModel& K, const FourierModel& L,
                                    const HamiltonianSystem& sys) {
  const int n = sys.n, d = sys.d;
  FourierModel DK = fourier::block(L, 0, 0, 2 * n, d);
  FourierModel OK = compose_system_map(K, sys, sys.Omega, 2 * n, 2 * n);
  FourierModel OmegaDK =
      fourier::matmul(fourier::transpose(DK), fourier::matmul(OK, DK, K.cutoff()), K.cutoff());
  if (!sys.has_moment()) return OmegaDK;

  FourierModel pK = compose_system_map(K, sys, [&](const Vec& z) { return Mat(sys.p(z)); },
                                       n - d, 1);
  FourierModel DpK = fourier::derivative(pK, 0);
  for (int l = 1; l < d; ++l) DpK = fourier::hcat(DpK, fourier::derivative(pK, l));
  ModelSpec zs = pK.spec();
  zs.rows = n - d;
  zs.cols = n - d;
  FourierModel top = fourier::hcat(OmegaDK, fourier::transpose(DpK));
  FourierModel bottom = fourier::hcat(fourier::scale(DpK, -1.0), fourier::zeros(zs));
  return fourier::vcat(top, bottom);
}

FrameBundle build_frames(const FourierModel& K, const HamiltonianSystem& sys,
                         const Eigen::VectorXd& omega) {
  const int n = sys.n;
  const Axis M = K.cutoff();
  FrameBundle fb;
  fb.L = build_tangent_frame(K, sys, 1e-8, &fb.min_singular_L);

  FourierModel OK = compose_system_map(K, sys, sys.Omega, 2 * n, 2 * n);
  FourierModel GK = compose_system_map(K, sys, sys.Ginv_metric, 2 * n, 2 * n);
  FourierModel JK = compose_system_map(K, sys, sys.J, 2 * n, 2 * n);
  FourierModel ThK = compose_system_map(K, sys, sys.T_h, 2 * n, 2 * n);

  FourierModel LT = fourier::transpose(fb.L);
  fb.G_L = fourier::matmul(LT, fourier::matmul(GK, fb.L, M), M);

  // Pointwise inverse of G_L (dense solves per node).
  {
    GridData gl = fourier::to_grid(fb.G_L, fb.G_L.grid());
    GridData binv = gl;
    long ntot = gl.node_count();
    double worst_cond = 0.0;
    for (long i = 0; i < ntot; ++i) {
      Mat m = gl.at(i);
      Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      double smax = svd.singularValues().maxCoeff();
      double smin = svd.singularValues().minCoeff();
      double cond = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
      worst_cond = std::max(worst_cond, cond);
      if (!(cond < 1e12))
        fail(Errc::rank_deficient, "G_L is numerically singular on the grid (cond > 1e12)");
      binv.at(i) = m.partialPivLu().inverse();
    }
    fb.max_cond_GL = worst_cond;
    fb.B = fourier::analyze(binv, M);
  }

  fb.N = fourier::matmul(JK, fourier::matmul(fb.L, fb.B, M), M);
  fb.P = fourier::hcat(fb.L, fb.N);
  FourierModel NT = fourier::transpose(fb.N);
  fb.T = fourier::matmul(NT, fourier::matmul(ThK, fb.N, M), M);

  {
    fourier::ModelSpec zs = fb.T.spec();
    FourierModel zn = fourier::zeros(zs);
    fb.Lambda = fourier::vcat(fourier::hcat(zn, fb.T), fourier::hcat(zn, zn));
  }
  fb.avg_T = fb.T.average();
  double det = fb.avg_T.determinant();
  fb.twist_ok = std::abs(det) >= 1e-12;
  if (fb.twist_ok) {
    Mat inv = fb.avg_T.inverse();
    fb.abs_avg_T_inv = inv.cwiseAbs().rowwise().sum().maxCoeff();
  }

  fb.Omega_L = lagrangianity_residual(K, fb.L, sys);
  fb.Omega_N = fourier::matmul(NT, fourier::matmul(OK, fb.N, M), M);

  FourierModel PT = fourier::transpose(fb.P);
  FourierModel PtOP = fourier::matmul(PT, fourier::matmul(OK, fb.P, M), M);
  ModelSpec cs = PtOP.spec();
  fb.E_sym = fourier::sub(PtOP, fourier::constant(cs, omega0(n)));

  // Reducibility residual: Omega0^{-1} P^T Omega.K (DX_h.K P + L_omega P) - Lambda.
  FourierModel DXhK = compose_system_map(K, sys, sys.DX_h, 2 * n, 2 * n);
  FourierModel XP = fourier::add(fourier::matmul(DXhK, fb.P, M), fourier::lie_derivative(fb.P, omega));
  FourierModel red = fourier::matmul(PT, fourier::matmul(OK, XP, M), M);
  ModelSpec rs = red.spec();
  FourierModel Om0inv = fourier::constant(rs, (-omega0(n)));
  red = fourier::matmul(Om0inv, red, M);
  // Lambda has T in the upper-right block.
  FourierModel LL = fourier::block(red, 0, 0, n, n);
  FourierModel LN = fourier::sub(fourier::block(red, 0, n, n, n), fb.T);
  FourierModel NL = fourier::block(red, n, 0, n, n);
  FourierModel NN = fourier::block(red, n, n, n, n);
  fb.Ered_LL = LL;
  fb.Ered_LN = LN;
  fb.Ered_NL = NL;
  fb.Ered_NN = NN;
  return fb;
}

HamiltonianSystem discounted(const HamiltonianSystem& sys, const Eigen::VectorXd& omega_p) {
  if (!sys.has_moment()) fail(Errc::invalid_argument, "discounted(): system has no moment map");
  if (omega_p.size() != sys.n - sys.d)
    fail(Errc::shape_mismatch, "discounted(): omega_p must have n-d components");
  HamiltonianSystem out = sys;
  out.name = sys.name + "-discounted";
  auto base = std::make_shared<HamiltonianSystem>(sys);
  Eigen::VectorXd wp = omega_p;
  out.H = [base, wp](const Vec& z) { return base->H(z) - wp.dot(base->p(z)); };
  out.DH = [base, wp](const Vec& z) -> Vec { return base->DH(z) - base->Dp(z).transpose() * wp; };
  out.X_h = [base, wp](const Vec& z) -> Vec { return base->X_h(z) - base->X_p(z) * wp; };
  out.DX_h = [base, wp](const Vec& z) -> Mat {
    Mat m = base->DX_h(z);
    int dim = 2 * base->n;
    for (int t = 0; t < dim; ++t) {
      Vec e = Vec::Zero(dim);
      e[t] = 1.0;
      m.col(t) -= base->DX_p(z, e) * wp;
    }
    return m;
  };
  // Shipped moment fields are linear in z, so D2X_h is unchanged.
  out.T_h = [base, wp, DXh = out.DX_h](const Vec& z) -> Mat {
    Mat O = base->Omega(z);
    Mat Jm = base->J(z);
    Mat dx = DXh(z);
    Vec xh = base->X_h(z) - base->X_p(z) * wp;
    return O * (dx + base->DJ(z, xh) * Jm + Jm * dx * Jm);
  };
  out.DT_h = nullptr;  // not needed downstream; audits run on the base system
  double wl1 = omega_p.cwiseAbs().sum();
  out.bounds.c_Xh = sys.bounds.c_Xh + sys.bounds.c_Xp * wl1;
  out.bounds.c_DXh = sys.bounds.c_DXh + sys.bounds.c_DXp * wl1;
  out.bounds.c_DXhT = sys.bounds.c_DXhT + sys.bounds.c_DXpT * wl1;
  out.bounds.c_Th = sys.bounds.c_Th + 2.0 * sys.bounds.c_Omega * sys.bounds.c_DXp * wl1 *
                                          std::max(1.0, sys.bounds.c_J * sys.bounds.c_J);
  return out;
}

LiftResult lift_cylinder(const FourierModel& K, const HamiltonianSystem& sys,
                         const LiftSpec& spec, const Eigen::VectorXd& omega,
                         const std::vector<double>& s_grid) {
  if (!sys.has_moment()) fail(Errc::invalid_argument, "lift_cylinder(): system has no moment map");
  const int n = sys.n, d = sys.d;
  if (spec.omega_p.size() != n - d) fail(Errc::shape_mismatch, "lift_cylinder(): omega_p size");
  for (double s : s_grid)
    if (sys.bounds.time_radius > 0 && std::abs(s) > sys.bounds.time_radius)
      fail(Errc::domain_escape, "lift_cylinder(): s outside the moment-flow time radius");

  LiftResult res;
  FourierModel pK = compose_system_map(K, sys, [&](const Vec& z) { return Mat(sys.p(z)); },
                                       n - d, 1);
  res.p0 = pK.average().col(0);
  FourierModel pdev = fourier::sub(pK, fourier::constant(pK.spec(), Mat(res.p0)));
  res.p_constancy = fourier::strip_norm(pdev, 0.0);

  // D_theta Khat . omega = DzPhi(s, K) (DK omega); DK omega = -L_omega K.
  FourierModel DKw = fourier::scale(fourier::lie_derivative(K, omega), -1.0);
  GridData kg = fourier::to_grid(K, K.grid());
  GridData dg = fourier::to_grid(DKw, K.grid());
  long ntot = kg.node_count();

  res.s_values = s_grid;
  double worst = 0.0;
  Vec s(n - d);
  for (double sv : s_grid) {
    for (int i = 0; i < n - d; ++i) s[i] = sv;  // scalar time per flow direction
    GridData slice;
    slice.dim = K.dim();
    slice.rows = 2 * n;
    slice.cols = 1;
    slice.grid = kg.grid;
    slice.values.assign(ntot * 2 * n, 0.0);
    for (long i = 0; i < ntot; ++i) {
      Vec z(2 * n), dkw(2 * n);
      for (int r = 0; r < 2 * n; ++r) {
        z[r] = kg.node(i)[r];
        dkw[r] = dg.node(i)[r];
      }
      Vec khat = sys.Phi(s, z);
      Vec resid = sys.X_h(khat) - sys.DzPhi(s, z) * dkw - sys.X_p(khat) * spec.omega_p;
      worst = std::max(worst, resid.cwiseAbs().maxCoeff());
      for (int r = 0; r < 2 * n; ++r) slice.values[i * 2 * n + r] = khat[r];
    }
    res.slices.push_back(std::move(slice));
  }
  res.residual_inf = worst;
  return res;
}

}  // namespace kamtorus::geometry
