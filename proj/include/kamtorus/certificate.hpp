#pragma once

// A-posteriori KAM certificate: Russmann small-divisor constants, the
// dependency-ordered ledger of every constant feeding the existence
// condition, the final constant with its eleven inner terms, the pass/fail
// decision C_theoE * eps / (gamma delta^{tau+1}) < 1, and a Neumann-series
// matrix-inverse control check.

#include <map>
#include <string>
#include <vector>

#include "kamtorus/geometry.hpp"
#include "kamtorus/newton.hpp"
#include "kamtorus/special.hpp"

namespace kamtorus::cert {

using fourier::DiophantineData;
using fourier::FourierModel;
using fourier::StripSchedule;
using geometry::HamiltonianSystem;
using geometry::SystemBounds;

enum class RussmannMode { sharp, uniform };

/// Small-divisor constants of the Russmann estimates:
///   c_R(delta, m)^2 = gamma^2 delta^{2 tau} 2^d sum_{0<|k|_1<=m} e^{-4 pi |k|_1 delta}/(k.w)^2
///                   + 2^{d+1-2 tau} zeta(2, 2^tau) pi^{-2 tau} int_{4 pi delta (m+1)}^inf u^{2 tau} e^-u du
///   c_R_hat^2     = 2^{d+1-2 tau} zeta(2, 2^tau) pi^{-2 tau - 2} Gamma(2 tau + 1)
///   c1_R(delta,m) = ((tau+1)^{tau+1}/tau^tau) c_R(tau delta/(tau+1), m)
struct RussmannConstants {
  double c_R = 0.0;      // c_R(delta, m)
  double c_R_hat = 0.0;
  double c1_R = 0.0;     // c1_R(delta, m)
  double c1_R_hat = 0.0;
  double delta = 0.0;
  int m = 0;
  double finite_sum = 0.0;  // the k-sum term inside the root
  double tail_term = 0.0;   // the integral term inside the root
};

/// Smallest m with tail/finite-sum below `tail_frac`, capped by the verified
/// Diophantine cutoff.
int choose_m(double delta, const DiophantineData& dio, double tail_frac = 1e-2);

RussmannConstants compute_russmann(double delta, int m, const DiophantineData& dio);

/// Bite-dependent access used by the table assembly; `uniform` replaces every
/// c_R(.) by the hat bounds.
class RussmannEvaluator {
 public:
  RussmannEvaluator(const DiophantineData& dio, RussmannMode mode, int m_override = 0);
  double c_R(double bite) const;
  double c1_R(double bite) const;
  double c_R_hat() const { return hat_; }
  double c1_R_hat() const { return hat1_; }
  RussmannMode mode() const { return mode_; }
  int m_used(double bite) const;

 private:
  DiophantineData dio_;
  RussmannMode mode_;
  int m_override_;
  double hat_ = 0.0, hat1_ = 0.0;
};

/// Condition numbers: strict upper bounds claimed for the measured frame norms.
struct ConditionNumbers {
  double sigma_DK = 0, sigma_DKT = 0, sigma_B = 0, sigma_N = 0, sigma_NT = 0, sigma_Tinv = 0;
  double sigma_L(const SystemBounds& b) const { return sigma_DK + b.c_Xp; }
  double sigma_LT(const SystemBounds& b) const { return std::max(sigma_DKT, b.c_XpT); }
};

/// Control constants shaping the certified contraction.
struct ControlConstants {
  double mu = 0.1;       // in (0,1)
  double mu_E = 0.5;     // in (0,1)
  double mu_etaN = 1.0;  // > 0
  void validate() const;
};

/// Strip-rho measurements of one torus, the inputs the certificate binds to.
struct TorusMeasurement {
  double rho = 0.0;
  double norm_DK = 0, norm_DKT = 0, norm_B = 0, norm_N = 0, norm_NT = 0;
  double abs_avg_T_inv = 0;
  double norm_K = 0;
  double dist_boundary = 0;  // domain_radius - ||K||_rho
  double etaL_norm = 0, etaN_norm = 0;
  double norm_L = 0, norm_LT = 0;
  double tail_K = 0;  // rho-weighted mass dropped when truncating to the certificate cutoff
};

/// Truncate K to `cert_cutoff`, rebuild error/frames at that resolution and
/// measure every strip norm at rho.
TorusMeasurement measure_torus(const FourierModel& K, const HamiltonianSystem& sys,
                               const Eigen::VectorXd& omega, double rho,
                               const fourier::Axis& cert_cutoff);

struct LedgerEntry {
  std::string label;
  double value = 0.0;
  std::vector<std::string> deps;
};

/// Every certificate constant, keyed by label, in evaluation order; each
/// entry records the labels it was computed from.
struct ConstantLedger {
  std::vector<LedgerEntry> entries;
  std::map<std::string, double> values;

  double at(const std::string& label) const;
  void push(const std::string& label, double value, std::vector<std::string> deps = {});
};

struct LedgerInputs {
  SystemBounds bounds;
  ConditionNumbers sigma;
  ControlConstants control;
  DiophantineData dio;
  int n = 0;  // degrees of freedom
  double rho = 0.0;
  double delta = 0.0;
  RussmannMode russmann_mode = RussmannMode::sharp;
  int m_override = 0;  // 0 = auto
};

/// The geometric and one-step constant tables (through Q_etanL).
ConstantLedger assemble_tables(const LedgerInputs& in);

struct FinalConstants {
  double a = 0.0;
  double Q_hat = 0.0;
  double Cstar_DeltaK = 0, Cstar_DeltaDK = 0, Cstar_DeltaDKT = 0;
  double Cstar_DeltaB = 0, Cstar_DeltaN = 0, Cstar_DeltaNT = 0, Cstar_DeltaiT = 0;
  double C_theoE = 0.0;
  std::vector<LedgerEntry> terms;  // the eleven inner terms of C_theoE
  std::string binding_term;
};

/// The final constants; requires strictly positive gaps between the claimed
/// condition numbers and the measured norms, else Errc::h2_violation.
FinalConstants final_constants(const ConstantLedger& ledger, const LedgerInputs& in,
                               const StripSchedule& schedule, const TorusMeasurement& m);

struct KamReport {
  double epsilon = 0.0;  // weighted error at the certificate strip
  double condition_value = 0.0;
  bool pass = false;
  std::string binding_term;
  // closeness radii implied on pass
  double radius_K = 0, radius_DK = 0, radius_DKT = 0;
  double radius_B = 0, radius_N = 0, radius_NT = 0, radius_iT = 0;
  FinalConstants final_constants;
};

/// Evaluate the KAM condition for a measured torus; rejects measurements taken
/// at a different strip than the ledger's.
KamReport check_kam(const TorusMeasurement& m, const ConstantLedger& ledger,
                    const FinalConstants& fc, const LedgerInputs& in);

// ---- Neumann-series inverse control ------------------------------------------

enum class NeumannVerdict { invertible, indeterminate };

struct NeumannResult {
  NeumannVerdict verdict = NeumannVerdict::indeterminate;
  double condition = 0.0;      // sigma |M^-1| |Mbar - M| / (sigma - |M^-1|)
  double bound_inverse = 0.0;  // certified |Mbar^-1| < sigma
  double bound_difference = 0.0;
};

/// If sigma |M^-1| |Mbar-M| / (sigma - |M^-1|) < 1, Mbar is invertible with
/// |Mbar^-1| < sigma and |Mbar^-1 - M^-1| < sigma |M^-1| |Mbar-M|.
NeumannResult neumann_inverse_check(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Mbar,
                                    double sigma);

/// Max row sum, the matrix norm used throughout.
double matrix_norm(const Eigen::MatrixXd& M);

}  // namespace kamtorus::cert
