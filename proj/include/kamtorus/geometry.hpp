#pragma once

// Hamiltonian systems with first integrals in involution on (R^{2n}, Omega),
// with a compatible triple (Omega, G, J), plus the adapted-frame construction
// (tangent frame L, normal frame N, symplectic frame P = [L N]), torsion and
// the geometric diagnostic residuals for a torus parameterization K.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kamtorus/fourier.hpp"

namespace kamtorus::geometry {

using fourier::Axis;
using fourier::FourierModel;
using fourier::GridData;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Global analytic bounds on a complex polydisc {|z_i| < domain_radius},
/// together with the moment-flow time radius; inputs of the certificate.
struct SystemBounds {
  double c_Omega = 0, c_G = 0, c_J = 0, c_JT = 0;
  double c_DOmega = 0, c_DG = 0, c_DJ = 0, c_DJT = 0;
  double c_Xh = 0, c_DXh = 0, c_DXhT = 0, c_D2Xh = 0;
  double c_Th = 0, c_DTh = 0;
  double c_Xp = 0, c_DXp = 0, c_XpT = 0, c_DXpT = 0;
  double c_DPhi = 1;
  double domain_radius = 0;  // B0 = max-norm polydisc of this radius
  double time_radius = 0;    // r,复 width of the moment-flow time domain
};

/// Callable bundle for one Hamiltonian system. Directional derivatives take
/// (z, v) and return the derivative of the parent object along v.
struct HamiltonianSystem {
  std::string name;
  int n = 0;  // degrees of freedom
  int d = 0;  // torus dimension (d <= n); n-d first integrals

  std::function<double(const Vec&)> H;
  std::function<Vec(const Vec&)> DH;  // gradient as a 2n-vector
  std::function<Vec(const Vec&)> X_h;
  std::function<Mat(const Vec&)> DX_h;
  std::function<Mat(const Vec&, const Vec&)> D2X_h;  // D(DX_h)(z)[v]

  std::function<Mat(const Vec&)> Omega;
  std::function<Mat(const Vec&)> Ginv_metric;  // metric G
  std::function<Mat(const Vec&)> J;
  std::function<Mat(const Vec&, const Vec&)> DOmega;  // D(Omega)(z)[v]
  std::function<Mat(const Vec&, const Vec&)> DJ;
  std::function<Vec(const Vec&)> action_form;

  std::function<Mat(const Vec&)> T_h;
  std::function<Mat(const Vec&, const Vec&)> DT_h;

  // Moment block; empty (n == d) members may be null.
  std::function<Vec(const Vec&)> p;    // n-d first integrals
  std::function<Mat(const Vec&)> Dp;   // (n-d) x 2n
  std::function<Mat(const Vec&)> X_p;  // 2n x (n-d)
  std::function<Mat(const Vec&, const Vec&)> DX_p;
  std::function<Vec(const Vec&, const Vec&)> Phi;    // moment flow Phi(s, z)
  std::function<Mat(const Vec&, const Vec&)> DzPhi;  // D_z Phi(s, z)

  SystemBounds bounds;

  int phase_dim() const { return 2 * n; }
  bool has_moment() const { return n > d; }
};

/// Adapted frame and geometric diagnostics attached to a parameterization K.
struct FrameBundle {
  FourierModel L;       // 2n x n
  FourierModel N;       // 2n x n
  FourierModel B;       // n x n, inverse of G_L
  FourierModel P;       // 2n x 2n
  FourierModel G_L;     // n x n
  FourierModel T;       // n x n torsion
  FourierModel Lambda;  // 2n x 2n block-triangular reduced dynamics [[0, T],[0, 0]]
  FourierModel Omega_L; // n x n lagrangianity residual
  FourierModel Omega_N; // n x n
  FourierModel E_sym;   // 2n x 2n symplecticity residual
  FourierModel Ered_LL, Ered_LN, Ered_NL, Ered_NN;  // reducibility residual blocks

  double min_singular_L = 0;   // over the grid
  double max_cond_GL = 0;      // pointwise condition estimate
  Eigen::MatrixXd avg_T;
  double abs_avg_T_inv = 0;    // |<T>^{-1}| (max row sum), 0 if singular
  bool twist_ok = false;
};

/// Evaluate a pointwise map over the samples of K on `grid`.
GridData map_over_torus(const FourierModel& K, const Axis& grid,
                        const std::function<Mat(const Vec&)>& fn, int out_rows, int out_cols);

/// Composition F o K as a model at K's cutoff (tails reported via *tail).
FourierModel compose_system_map(const FourierModel& K, const HamiltonianSystem& sys,
                                const std::function<Mat(const Vec&)>& fn, int out_rows,
                                int out_cols, double* tail = nullptr);

/// Check that every grid sample of K stays inside the system domain.
void check_domain(const FourierModel& K, const HamiltonianSystem& sys);

/// DK, the 2n x d Jacobian of K with respect to the angles.
FourierModel tangent_jacobian(const FourierModel& K);

/// L = [DK | X_p o K]. Fails if the smallest singular value over the grid
/// drops below rank_tol * ||L||.
FourierModel build_tangent_frame(const FourierModel& K, const HamiltonianSystem& sys,
                                 double rank_tol = 1e-8, double* min_sv = nullptr);

/// Full frame bundle: B = (L^T G.K L)^{-1} via pointwise solves, N = J.K L B,
/// P = [L N], torsion T = N^T T_h.K N, plus the diagnostic residuals.
FrameBundle build_frames(const FourierModel& K, const HamiltonianSystem& sys,
                         const Eigen::VectorXd& omega);

/// Lagrangianity residual Omega_L assembled from the blocks Omega_DK and
/// +-D(p o K) (exactness makes the average vanish).
FourierModel lagrangianity_residual(const FourierModel& K, const FourierModel& L,
                                    const HamiltonianSystem& sys);

/// Discounted system X_{H - omega_p . p}; the base system's first integrals
/// remain first integrals of the discount.
HamiltonianSystem discounted(const HamiltonianSystem& sys, const Eigen::VectorXd& omega_p);

/// Moment-frequency data for the cylinder lift: the discount f(p) is
/// omega_p . p, so omega_p = (Df(p0))^T for every p0.
struct LiftSpec {
  Eigen::VectorXd omega_p;
};

struct LiftResult {
  double residual_inf = 0;   // max over the product grid of |X_h.Khat + L_(omega,omega_p) Khat|
  double p_constancy = 0;    // ||p o K - <p o K>|| at rho = 0
  Eigen::VectorXd p0;        // <p o K>
  std::vector<double> s_values;
  // Khat samples, layout [s][node][component]:
  std::vector<GridData> slices;
};

/// Evaluate the lifted cylinder Khat(theta, s) = Phi(s, K(theta)) on a product
/// grid and measure the invariance residual for frequency (omega, omega_p).
LiftResult lift_cylinder(const FourierModel& K, const HamiltonianSystem& sys,
                         const LiftSpec& spec, const Eigen::VectorXd& omega,
                         const std::vector<double>& s_grid);

}  // namespace kamtorus::geometry
