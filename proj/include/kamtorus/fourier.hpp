#pragma once

// Fourier function algebra on the d-torus (d <= 3): truncated series with
// matrix values, FFT grid transforms, spectral calculus (Lie derivative,
// small-divisors solver), exponentially weighted strip norms and Diophantine
// utilities. Models are real-valued on the real torus and store the full
// symmetric mode box; all operations preserve the conjugate symmetry
// coef(-k) == conj(coef(k)).

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kamtorus/errors.hpp"

namespace kamtorus::fourier {

inline constexpr int kMaxDim = 3;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

using Cplx = std::complex<double>;
using Axis = std::array<int, kMaxDim>;
using ModeIndex = std::array<int, kMaxDim>;

/// Shape descriptor: torus dimension, value dimensions, per-axis mode cutoff
/// M (modes -M..M) and per-axis grid size N (powers of two, 2M+1 <= N).
struct ModelSpec {
  int dim = 2;
  int rows = 1;
  int cols = 1;
  Axis cutoff{0, 0, 0};
  Axis grid{1, 1, 1};
};

/// Real samples on a uniform grid, value layout [node][row][col].
struct GridData {
  int dim = 2;
  int rows = 1;
  int cols = 1;
  Axis grid{1, 1, 1};
  std::vector<double> values;

  long node_count() const {
    long n = 1;
    for (int l = 0; l < dim; ++l) n *= grid[l];
    return n;
  }
  double* node(long idx) { return values.data() + idx * rows * cols; }
  const double* node(long idx) const { return values.data() + idx * rows * cols; }
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> at(long idx) {
    return {node(idx), rows, cols};
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> at(
      long idx) const {
    return {node(idx), rows, cols};
  }
  /// Angle of grid node `idx` (row-major over axes), components in [0,1).
  std::array<double, kMaxDim> theta(long idx) const;
};

class FourierModel {
 public:
  FourierModel() = default;
  explicit FourierModel(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int rows() const { return spec_.rows; }
  int cols() const { return spec_.cols; }
  const Axis& cutoff() const { return spec_.cutoff; }
  const Axis& grid() const { return spec_.grid; }
  bool empty() const { return coef_.empty(); }

  long mode_count() const;
  /// Largest |k|_1 representable in the mode box (sum of cutoffs).
  int box_l1_max() const;

  Cplx& at(const ModeIndex& k, int r = 0, int c = 0);
  const Cplx& at(const ModeIndex& k, int r = 0, int c = 0) const;
  Cplx& at_flat(long mode, int r, int c) { return coef_[(mode * spec_.rows + r) * spec_.cols + c]; }
  const Cplx& at_flat(long mode, int r, int c) const {
    return coef_[(mode * spec_.rows + r) * spec_.cols + c];
  }

  ModeIndex mode_of(long flat) const;
  long flat_of(const ModeIndex& k) const;

  std::vector<Cplx>& data() { return coef_; }
  const std::vector<Cplx>& data() const { return coef_; }

  /// Constant (k=0) coefficient as a real matrix; imaginary parts discarded.
  Eigen::MatrixXd average() const;

  /// Enforce coef(-k) = conj(coef(k)) by pairwise averaging.
  void enforce_real_symmetry();
  /// Largest violation |coef(-k) - conj(coef(k))| over the box.
  double real_symmetry_defect() const;

 private:
  ModelSpec spec_;
  std::vector<Cplx> coef_;
};

// ---- construction -----------------------------------------------------------

FourierModel zeros(const ModelSpec& spec);
FourierModel constant(const ModelSpec& spec, const Eigen::MatrixXd& value);
/// Identity-matrix constant model with the given square size.
FourierModel identity(const ModelSpec& spec_like, int size);

// ---- transforms -------------------------------------------------------------

/// FFT analysis of real grid samples; enforces real symmetry. Requires
/// power-of-two grids and 2*M+1 <= N per axis.
FourierModel analyze(const GridData& samples, const Axis& cutoff);

/// Inverse transform onto a uniform grid (zero padding / spectral
/// interpolation). If `imag_max` is given, receives the largest imaginary
/// residue seen before taking real parts.
GridData to_grid(const FourierModel& m, const Axis& grid, double* imag_max = nullptr);

/// Direct evaluation of the series at arbitrary points (possibly off-grid).
std::vector<Eigen::MatrixXd> synthesize(const FourierModel& m,
                                        const std::vector<std::array<double, kMaxDim>>& points);
Eigen::MatrixXd synthesize_at(const FourierModel& m, const std::array<double, kMaxDim>& point);

// ---- spectral calculus ------------------------------------------------------

/// d/dtheta_axis, coefficientwise multiplication by 2*pi*i*k_axis.
FourierModel derivative(const FourierModel& m, int axis);

/// Lie derivative along the constant field -omega: coefficient map
/// k -> -2*pi*i*(k.omega) * coef(k). The result has zero average.
FourierModel lie_derivative(const FourierModel& m, const Eigen::VectorXd& omega);

struct DiophantineData {
  Eigen::VectorXd omega;
  double gamma = 0.0;
  double tau = 1.0;
  int checked_cutoff = 0;
};

struct DiophantineCheck {
  bool ok = false;
  bool resonance = false;
  ModeIndex worst_k{0, 0, 0};   // attains min |k.omega| * |k|_1^tau
  double best_gamma = 0.0;      // largest admissible gamma on the scanned range
  double worst_value = 0.0;     // min |k.omega| over the scanned range
  DiophantineData data;
};

/// Exhaustive check of |k.omega| >= gamma/|k|_1^tau over 0 < |k|_1 <= kmax.
DiophantineCheck verify_diophantine(const Eigen::VectorXd& omega, double gamma, double tau,
                                    int kmax);

/// Unique zero-average solution of L_omega u = v - <v>; refuses modes beyond
/// the verified Diophantine cutoff and exact resonances.
FourierModel solve_cohomological(const FourierModel& v, const DiophantineData& dio);

// ---- norms ------------------------------------------------------------------

/// Fourier norm max_i sum_j sum_k |coef_k(i,j)| e^{2 pi |k|_1 rho}; an upper
/// bound of the sup norm on the closed strip of half-width rho. Returns +inf
/// when the weights overflow.
double strip_norm(const FourierModel& m, double rho);

/// l1-weighted mass of the modes with |k|_infty > keep (per axis), at strip rho.
double tail_mass(const FourierModel& m, const Axis& keep, double rho);

/// Fraction of the rho=0 mass carried by the outer quarter of the mode box;
/// the per-run spectral-quality indicator.
double tail_indicator(const FourierModel& m);

// ---- algebra ----------------------------------------------------------------

FourierModel add(const FourierModel& a, const FourierModel& b);
FourierModel sub(const FourierModel& a, const FourierModel& b);
FourierModel scale(const FourierModel& a, double s);

/// Pointwise matrix product on a dealiased grid; exact convolution when the
/// result cutoff (sum of operand cutoffs) is kept. `out_cutoff` truncates the
/// result (tails can be inspected with tail_mass before truncation).
FourierModel matmul(const FourierModel& a, const FourierModel& b,
                    std::optional<Axis> out_cutoff = std::nullopt);

FourierModel transpose(const FourierModel& a);
FourierModel hcat(const FourierModel& a, const FourierModel& b);
FourierModel vcat(const FourierModel& a, const FourierModel& b);
FourierModel block(const FourierModel& a, int r0, int c0, int nr, int nc);

/// Truncate to a smaller cutoff; if `dropped` is given it receives the
/// rho-weighted l1 mass of the removed coefficients.
FourierModel truncate(const FourierModel& a, const Axis& cutoff, double rho = 0.0,
                      double* dropped = nullptr);

/// Resample onto a different spec (cutoff/grid), preserving coefficients.
FourierModel reshape_spec(const FourierModel& a, const Axis& cutoff, const Axis& grid);

/// f o (id + g) for a d-vector displacement g (g real, periodic). Evaluates f
/// at the displaced grid of f's spec and re-analyzes at f's cutoff. If
/// `budget` is set, requires strip_norm(g_l, 0) < budget for every component
/// (the analyticity-bite guard).
FourierModel compose_shift(const FourierModel& f, const FourierModel& g,
                           std::optional<double> budget = std::nullopt);

// ---- strip schedule ---------------------------------------------------------

/// Geometric schedule of analyticity bites delta_j = delta0 / a^j with
/// a = (rho - rho_inf)/(rho - 3 delta0 - rho_inf), so rho_inf = rho - 3 sum.
struct StripSchedule {
  double rho0 = 0.0;
  double rho_inf = 0.0;
  double delta0 = 0.0;
  double ratio_a = 0.0;

  double bite(int j) const;
  double strip(int j) const;  // rho_j = rho_{j-1} - 3*delta_{j-1}
};

StripSchedule make_schedule(double rho, double rho_inf, double delta0);

// ---- misc -------------------------------------------------------------------

bool is_power_of_two(int n);
Axis padded_grid_for(const Axis& cutoff, int dim);
int next_pow2(int n);

/// Random real trig polynomial with geometric coefficient decay (test helper).
FourierModel random_model(const ModelSpec& spec, unsigned seed, double amplitude = 1.0,
                          double decay = 0.5);

}  // namespace kamtorus::fourier
