#include "kamtorus/certificate.hpp"

#include <cmath>

namespace kamtorus::cert {

using fourier::kTwoPi;

double matrix_norm(const Eigen::MatrixXd& M) {
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

void ControlConstants::validate() const {
  if (!(mu > 0 && mu < 1)) fail(Errc::invalid_argument, "control constant mu must be in (0,1)");
  if (!(mu_E > 0 && mu_E < 1)) fail(Errc::invalid_argument, "control constant mu_E must be in (0,1)");
  if (!(mu_etaN > 0)) fail(Errc::invalid_argument, "control constant mu_etaN must be positive");
}

namespace {

// Deterministic scan of 0 < |k|_1 <= m (canonical representatives doubled).
double divisor_sum(double delta, int m, const DiophantineData& dio) {
  const int d = int(dio.omega.size());
  double sum = 0.0;
  fourier::ModeIndex k{0, 0, 0};
  for (k[0] = 0; k[0] <= m; ++k[0]) {
    int rem0 = m - k[0];
    int lo1 = (d >= 2) ? ((k[0] == 0) ? 0 : -rem0) : 0;
    int hi1 = (d >= 2) ? rem0 : 0;
    for (k[1] = lo1; k[1] <= hi1; ++k[1]) {
      int rem1 = rem0 - std::abs(k[1]);
      bool lead_zero = (k[0] == 0 && k[1] == 0);
      int lo2 = (d >= 3) ? (lead_zero ? 0 : -rem1) : 0;
      int hi2 = (d >= 3) ? rem1 : 0;
      for (k[2] = lo2; k[2] <= hi2; ++k[2]) {
        int l1 = std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]);
        if (l1 == 0 || l1 > m) continue;
        double kw = 0.0;
        for (int l = 0; l < d; ++l) kw += k[l] * dio.omega[l];
        if (kw == 0.0) fail(Errc::resonance, "divisor sum hit an exact resonance");
        sum += 2.0 * std::exp(-2.0 * kTwoPi * l1 * delta) / (kw * kw);
      }
    }
  }
  return sum;
}

double tail_integral_term(double delta, int m, const DiophantineData& dio) {
  const int d = int(dio.omega.size());
  const double tau = dio.tau;
  double zeta = hurwitz_zeta(2.0, std::pow(2.0, tau));
  double x0 = 2.0 * kTwoPi * delta * (m + 1);
  double integral = upper_incomplete_gamma_integral(x0, 2.0 * tau);
  return std::pow(2.0, d + 1 - 2.0 * tau) * zeta * std::pow(kTwoPi / 2.0, -2.0 * tau) * integral;
}

double cr1_factor(double tau) { return std::pow(tau + 1.0, tau + 1.0) / std::pow(tau, tau); }

}  // namespace

int choose_m(double delta, const DiophantineData& dio, double tail_frac) {
  if (!(delta > 0)) fail(Errc::invalid_argument, "choose_m(): delta must be positive");
  int m = 4;
  while (m < dio.checked_cutoff) {
    double fs = divisor_sum(delta, m, dio) * dio.gamma * dio.gamma *
                std::pow(delta, 2.0 * dio.tau) * std::pow(2.0, dio.omega.size());
    double tl = tail_integral_term(delta, m, dio);
    if (fs > 0 && tl / fs < tail_frac) return m;
    m *= 2;
  }
  return dio.checked_cutoff;
}

RussmannConstants compute_russmann(double delta, int m, const DiophantineData& dio) {
  if (!(delta > 0) || m < 1) fail(Errc::invalid_argument, "compute_russmann(): delta > 0, m >= 1");
  if (m > dio.checked_cutoff)
    fail(Errc::cutoff_exceeded, "compute_russmann(): m exceeds the Diophantine-verified cutoff");
  const int d = int(dio.omega.size());
  const double tau = dio.tau;

  RussmannConstants rc;
  rc.delta = delta;
  rc.m = m;
  rc.finite_sum = dio.gamma * dio.gamma * std::pow(delta, 2.0 * tau) * std::pow(2.0, d) *
                  divisor_sum(delta, m, dio);
  rc.tail_term = tail_integral_term(delta, m, dio);
  rc.c_R = std::sqrt(rc.finite_sum + rc.tail_term);

  double zeta = hurwitz_zeta(2.0, std::pow(2.0, tau));
  rc.c_R_hat = std::sqrt(std::pow(2.0, d + 1 - 2.0 * tau) * zeta *
                         std::pow(kTwoPi / 2.0, -2.0 * tau - 2.0) * std::tgamma(2.0 * tau + 1.0));

  RussmannConstants inner;
  {
    double bite = tau / (tau + 1.0) * delta;
    inner.finite_sum = dio.gamma * dio.gamma * std::pow(bite, 2.0 * tau) * std::pow(2.0, d) *
                       divisor_sum(bite, m, dio);
    inner.tail_term = tail_integral_term(bite, m, dio);
    inner.c_R = std::sqrt(inner.finite_sum + inner.tail_term);
  }
  rc.c1_R = cr1_factor(tau) * inner.c_R;
  rc.c1_R_hat = cr1_factor(tau) * rc.c_R_hat;
  return rc;
}

RussmannEvaluator::RussmannEvaluator(const DiophantineData& dio, RussmannMode mode, int m_override)
    : dio_(dio), mode_(mode), m_override_(m_override) {
  const int d = int(dio.omega.size());
  const double tau = dio.tau;
  double zeta = hurwitz_zeta(2.0, std::pow(2.0, tau));
  hat_ = std::sqrt(std::pow(2.0, d + 1 - 2.0 * tau) * zeta *
                   std::pow(kTwoPi / 2.0, -2.0 * tau - 2.0) * std::tgamma(2.0 * tau + 1.0));
  hat1_ = cr1_factor(tau) * hat_;
}

int RussmannEvaluator::m_used(double bite) const {
  if (m_override_ > 0) return std::min(m_override_, dio_.checked_cutoff);
  return choose_m(bite, dio_);
}

double RussmannEvaluator::c_R(double bite) const {
  if (mode_ == RussmannMode::uniform) return hat_;
  return compute_russmann(bite, m_used(bite), dio_).c_R;
}

double RussmannEvaluator::c1_R(double bite) const {
  if (mode_ == RussmannMode::uniform) return hat1_;
  double inner_bite = dio_.tau / (dio_.tau + 1.0) * bite;
  return cr1_factor(dio_.tau) * compute_russmann(inner_bite, m_used(inner_bite), dio_).c_R;
}

TorusMeasurement measure_torus(const FourierModel& K, const HamiltonianSystem& sys,
                               const Eigen::VectorXd& omega, double rho,
                               const fourier::Axis& cert_cutoff) {
  double dropped = 0.0;
  FourierModel Kc = fourier::truncate(K, cert_cutoff, rho, &dropped);
  geometry::FrameBundle fb = geometry::build_frames(Kc, sys, omega);
  FourierModel E = newton::invariance_error(Kc, sys, omega);
  FourierModel etaL, etaN;
  newton::project_error(E, fb, sys, Kc, &etaL, &etaN);

  TorusMeasurement m;
  m.rho = rho;
  m.tail_K = dropped;
  FourierModel DK = geometry::tangent_jacobian(Kc);
  m.norm_DK = fourier::strip_norm(DK, rho);
  m.norm_DKT = fourier::strip_norm(fourier::transpose(DK), rho);
  m.norm_B = fourier::strip_norm(fb.B, rho);
  m.norm_N = fourier::strip_norm(fb.N, rho);
  m.norm_NT = fourier::strip_norm(fourier::transpose(fb.N), rho);
  m.norm_L = fourier::strip_norm(fb.L, rho);
  m.norm_LT = fourier::strip_norm(fourier::transpose(fb.L), rho);
  m.abs_avg_T_inv = fb.abs_avg_T_inv;
  m.norm_K = fourier::strip_norm(Kc, rho);
  m.dist_boundary = sys.bounds.domain_radius - m.norm_K;
  m.etaL_norm = fourier::strip_norm(etaL, rho);
  m.etaN_norm = fourier::strip_norm(etaN, rho);
  return m;
}

double ConstantLedger::at(const std::string& label) const {
  auto it = values.find(label);
  if (it == values.end()) fail(Errc::internal, "ledger label '" + label + "' missing");
  return it->second;
}

void ConstantLedger::push(const std::string& label, double value, std::vector<std::string> deps) {
  if (!std::isfinite(value) || value < 0)
    fail(Errc::norm_overflow, "ledger constant '" + label + "' is not finite and nonnegative");
  entries.push_back({label, value, std::move(deps)});
  values[label] = value;
}

ConstantLedger assemble_tables(const LedgerInputs& in) {
  in.control.validate();
  const SystemBounds& bd = in.bounds;
  const double tau = in.dio.tau;
  const int d = int(in.dio.omega.size());
  const int n = in.n;
  const double delta = in.delta, rho = in.rho;
  const double mu = in.control.mu, mu_etaN = in.control.mu_etaN;
  const double gdt = in.dio.gamma * std::pow(delta, tau);
  if (!(delta > 0 && rho > 0 && delta <= rho))
    fail(Errc::invalid_argument, "assemble_tables(): need 0 < delta <= rho");

  RussmannEvaluator russ(in.dio, in.russmann_mode, in.m_override);
  const double cRd = russ.c_R(delta);
  const double cR1d = russ.c1_R(delta);
  const double cRr = russ.c_R(rho);

  // Frame-norm constants bound by the claimed condition numbers.
  const double C_L = in.sigma.sigma_L(bd);
  const double C_LT = in.sigma.sigma_LT(bd);
  const double C_N = in.sigma.sigma_N;
  const double C_NT = in.sigma.sigma_NT;
  const double sB = in.sigma.sigma_B, sTi = in.sigma.sigma_Tinv;

  ConstantLedger lg;
  lg.push("c_R(delta)", cRd, {});
  lg.push("c1_R(delta)", cR1d, {});
  lg.push("c_R(rho)", cRr, {});
  lg.push("c_R_hat", russ.c_R_hat(), {});
  lg.push("c1_R_hat", russ.c1_R_hat(), {});
  lg.push("C_L", C_L, {"sigma_DK", "c_Xp"});
  lg.push("C_LT", C_LT, {"sigma_DKT", "c_XpT"});
  lg.push("C_N", C_N, {"sigma_N"});
  lg.push("C_NT", C_NT, {"sigma_NT"});

  // Geometric constants: lagrangianity, symplecticity, error relations,
  // Lie action and reducibility.
  double C_NOmegaL = (d + n - 2) * cR1d;
  lg.push("C_OmegaL_N", C_NOmegaL, {"c1_R(delta)"});
  double C_NOmegaN = sB * sB * C_NOmegaL;
  lg.push("C_OmegaN_N", C_NOmegaN, {"C_OmegaL_N", "sigma_B"});
  double C_sym = std::max(C_NOmegaL, C_NOmegaN);
  lg.push("C_sym", C_sym, {"C_OmegaL_N", "C_OmegaN_N"});

  double C_LE = (C_L + C_N * mu) / (1 - mu * mu);
  double C_NE = (C_N + C_L * mu) / (1 - mu * mu);
  double C_E = C_LE + gdt * C_NE;
  lg.push("C_E_L", C_LE, {"C_L", "C_N", "mu"});
  lg.push("C_E_N", C_NE, {"C_L", "C_N", "mu"});
  lg.push("C_E", C_E, {"C_E_L", "C_E_N"});

  double C_LET = n * (C_LT + mu * C_NT) / (1 - mu * mu);
  double C_NET = n * (C_NT + mu * C_LT) / (1 - mu * mu);
  double C_ET = C_LET + gdt * C_NET;
  lg.push("C_ET_L", C_LET, {"C_LT", "C_NT", "mu"});
  lg.push("C_ET_N", C_NET, {"C_LT", "C_NT", "mu"});
  lg.push("C_ET", C_ET, {"C_ET_L", "C_ET_N"});

  double fDE = d * (1 + bd.c_Omega * (C_NT * C_LE + C_LT * C_NE));
  double C_LDE = fDE * C_LE;
  double C_NDE = fDE * C_NE;
  double C_DE = C_LDE + gdt * C_NDE;
  lg.push("C_DE_L", C_LDE, {"C_E_L", "C_E_N", "C_NT", "C_LT", "c_Omega"});
  lg.push("C_DE_N", C_NDE, {"C_E_L", "C_E_N", "C_NT", "C_LT", "c_Omega"});
  lg.push("C_DE", C_DE, {"C_DE_L", "C_DE_N"});

  double fDET = n * (1 + bd.c_Omega * (C_N * C_LET + C_L * C_NET));
  double C_LDET = fDET * C_LET;
  double C_NDET = fDET * C_NET;
  double C_DET = C_LDET + gdt * C_NDET;
  lg.push("C_DET_L", C_LDET, {"C_ET_L", "C_ET_N", "C_N", "C_L", "c_Omega"});
  lg.push("C_DET_N", C_NDET, {"C_ET_L", "C_ET_N", "C_N", "C_L", "c_Omega"});
  lg.push("C_DET", C_DET, {"C_DET_L", "C_DET_N"});

  double C_LieK = C_E * delta * mu + bd.c_Xh;
  lg.push("C_LieK", C_LieK, {"C_E", "c_Xh", "mu"});
  double C_LieL = C_DE * mu + bd.c_DXp * C_E * delta * mu + bd.c_DXh * C_L;
  lg.push("C_LieL", C_LieL, {"C_DE", "C_E", "C_L", "c_DXp", "c_DXh", "mu"});
  double C_LieLT = std::max(C_DET * mu, bd.c_DXpT * C_E * delta * mu) + C_LT * bd.c_DXhT;
  lg.push("C_LieLT", C_LieLT, {"C_DET", "C_E", "C_LT", "c_DXpT", "c_DXhT", "mu"});
  double C_LieGL = C_LieLT * bd.c_G * C_L + C_LT * bd.c_DG * C_LieK * C_L + C_LT * bd.c_G * C_LieL;
  lg.push("C_LieGL", C_LieGL, {"C_LieLT", "C_LieK", "C_LieL", "C_L", "C_LT", "c_G", "c_DG"});
  double C_LieB = sB * sB * C_LieGL;
  lg.push("C_LieB", C_LieB, {"C_LieGL", "sigma_B"});
  double C_LieN = bd.c_DJ * C_LieK * C_L * sB + bd.c_J * C_LieL * sB + bd.c_J * C_L * C_LieB;
  lg.push("C_LieN", C_LieN, {"C_LieK", "C_LieL", "C_LieB", "C_L", "sigma_B", "c_J", "c_DJ"});

  double C_T = C_NT * bd.c_Th * C_N;
  lg.push("C_T", C_T, {"C_NT", "C_N", "c_Th"});

  double C_LEredLL = d + (d + delta * bd.c_DXp) * C_NT * bd.c_Omega * C_LE;
  double C_NEredLL = (d + delta * bd.c_DXp) * C_NT * bd.c_Omega * C_NE;
  lg.push("C_EredLL_L", C_LEredLL, {"C_E_L", "C_NT", "c_Omega", "c_DXp"});
  lg.push("C_EredLL_N", C_NEredLL, {"C_E_N", "C_NT", "c_Omega", "c_DXp"});
  double C_LEredNL = (d + delta * bd.c_DXp) * C_LT * bd.c_Omega * C_LE;
  double C_NEredNL = d + (d + delta * bd.c_DXp) * C_LT * bd.c_Omega * C_NE;
  lg.push("C_EredNL_L", C_LEredNL, {"C_E_L", "C_LT", "c_Omega", "c_DXp"});
  lg.push("C_EredNL_N", C_NEredNL, {"C_E_N", "C_LT", "c_Omega", "c_DXp"});

  double C_LEredNN = delta * C_LT * bd.c_DOmega * C_LE * C_N +
                     std::max(n + d * C_LE * bd.c_Omega * C_NT,
                              delta * bd.c_DXpT * C_LE * bd.c_Omega * C_N);
  double C_NEredNN = delta * C_LT * bd.c_DOmega * C_NE * C_N +
                     std::max(d * C_NE * bd.c_Omega * C_NT,
                              delta * bd.c_DXpT * C_NE * bd.c_Omega * C_N);
  double C_EredNN = C_LEredNN + gdt * C_NEredNN;
  lg.push("C_EredNN_L", C_LEredNN, {"C_E_L", "C_LT", "C_N", "C_NT", "c_DOmega", "c_Omega", "c_DXpT"});
  lg.push("C_EredNN_N", C_NEredNN, {"C_E_N", "C_LT", "C_N", "C_NT", "c_DOmega", "c_Omega", "c_DXpT"});
  lg.push("C_EredNN", C_EredNN, {"C_EredNN_L", "C_EredNN_N"});

  double C_LEredLN = delta * sB * sB * C_LT * bd.c_G * bd.c_DJ * C_L * C_LE + sB * sB * C_LEredNL;
  double C_NEredLN = in.dio.gamma * std::pow(delta, tau + 1) * sB * sB * C_LT * bd.c_G * bd.c_DJ *
                         C_L * C_NE +
                     gdt * sB * sB * C_NEredNL + sB * C_NOmegaL * C_LieB;
  double C_EredLN = C_LEredLN + C_NEredLN;
  lg.push("C_EredLN_L", C_LEredLN, {"C_EredNL_L", "C_E_L", "C_L", "C_LT", "sigma_B", "c_G", "c_DJ"});
  lg.push("C_EredLN_N", C_NEredLN,
          {"C_EredNL_N", "C_E_N", "C_OmegaL_N", "C_LieB", "C_L", "C_LT", "sigma_B", "c_G", "c_DJ"});
  lg.push("C_EredLN", C_EredLN, {"C_EredLN_L", "C_EredLN_N"});

  // One Newton step, first half: normal correction and intermediate objects.
  double C_LaverxiN = sTi;
  double C_NaverxiN = std::pow(delta / rho, tau) * sTi * C_T * cRr;
  double C_averxiN = C_LaverxiN + C_NaverxiN;
  lg.push("C_averxiN_L", C_LaverxiN, {"sigma_Tinv"});
  lg.push("C_averxiN_N", C_NaverxiN, {"sigma_Tinv", "C_T", "c_R(rho)"});
  lg.push("C_averxiN", C_averxiN, {"C_averxiN_L", "C_averxiN_N"});

  double C_LxiN = C_LaverxiN;
  double C_NxiN = C_NaverxiN + cRd;
  double C_xiN = C_LxiN + C_NxiN;
  lg.push("C_xiN_L", C_LxiN, {"C_averxiN_L"});
  lg.push("C_xiN_N", C_NxiN, {"C_averxiN_N", "c_R(delta)"});
  lg.push("C_xiN", C_xiN, {"C_xiN_L", "C_xiN_N"});

  double C_LDeltaKi = C_N * C_LxiN;
  double C_NDeltaKi = C_N * C_NxiN;
  double C_DeltaKi = C_LDeltaKi + C_NDeltaKi;
  lg.push("C_DeltaKi_L", C_LDeltaKi, {"C_N", "C_xiN_L"});
  lg.push("C_DeltaKi_N", C_NDeltaKi, {"C_N", "C_xiN_N"});
  lg.push("C_DeltaKi", C_DeltaKi, {"C_DeltaKi_L", "C_DeltaKi_N"});

  double C_LDeltaDKi = d * C_N * C_LaverxiN;
  double C_NDeltaDKi = d * C_N * (C_NaverxiN + cR1d);
  double C_DeltaDKi = C_LDeltaDKi + C_NDeltaDKi;
  lg.push("C_DeltaDKi_L", C_LDeltaDKi, {"C_N", "C_averxiN_L"});
  lg.push("C_DeltaDKi_N", C_NDeltaDKi, {"C_N", "C_averxiN_N", "c1_R(delta)"});
  lg.push("C_DeltaDKi", C_DeltaDKi, {"C_DeltaDKi_L", "C_DeltaDKi_N"});

  double C_LDeltaDKiT = n * C_NT * C_LaverxiN;
  double C_NDeltaDKiT = n * C_NT * (C_NaverxiN + cR1d);
  double C_DeltaDKiT = C_LDeltaDKiT + C_NDeltaDKiT;
  lg.push("C_DeltaDKiT_L", C_LDeltaDKiT, {"C_NT", "C_averxiN_L"});
  lg.push("C_DeltaDKiT_N", C_NDeltaDKiT, {"C_NT", "C_averxiN_N", "c1_R(delta)"});
  lg.push("C_DeltaDKiT", C_DeltaDKiT, {"C_DeltaDKiT_L", "C_DeltaDKiT_N"});

  double C_LDeltaLi = C_LDeltaDKi + delta * bd.c_DXp * C_LDeltaKi;
  double C_NDeltaLi = C_NDeltaDKi + delta * bd.c_DXp * C_NDeltaKi;
  double C_DeltaLi = C_LDeltaLi + C_NDeltaLi;
  lg.push("C_DeltaLi_L", C_LDeltaLi, {"C_DeltaDKi_L", "C_DeltaKi_L", "c_DXp"});
  lg.push("C_DeltaLi_N", C_NDeltaLi, {"C_DeltaDKi_N", "C_DeltaKi_N", "c_DXp"});
  lg.push("C_DeltaLi", C_DeltaLi, {"C_DeltaLi_L", "C_DeltaLi_N"});

  double C_LDeltaLiT = std::max(C_LDeltaDKiT, delta * bd.c_DXpT * C_LDeltaKi);
  double C_NDeltaLiT = std::max(C_NDeltaDKiT, delta * bd.c_DXpT * C_NDeltaKi);
  double C_DeltaLiT = C_LDeltaLiT + C_NDeltaLiT;
  lg.push("C_DeltaLiT_L", C_LDeltaLiT, {"C_DeltaDKiT_L", "C_DeltaKi_L", "c_DXpT"});
  lg.push("C_DeltaLiT_N", C_NDeltaLiT, {"C_DeltaDKiT_N", "C_DeltaKi_N", "c_DXpT"});
  lg.push("C_DeltaLiT", C_DeltaLiT, {"C_DeltaLiT_L", "C_DeltaLiT_N"});

  double C_LEi = C_LE + bd.c_DXh * C_LDeltaKi + C_LieN * C_LxiN;
  double C_NEi = gdt * (C_NE + in.sigma.sigma_N) + bd.c_DXh * C_NDeltaKi + C_LieN * C_NxiN;
  double C_Ei = C_LEi + C_NEi;
  lg.push("C_Ei_L", C_LEi, {"C_E_L", "C_DeltaKi_L", "C_LieN", "C_xiN_L", "c_DXh"});
  lg.push("C_Ei_N", C_NEi, {"C_E_N", "C_DeltaKi_N", "C_LieN", "C_xiN_N", "sigma_N", "c_DXh"});
  lg.push("C_Ei", C_Ei, {"C_Ei_L", "C_Ei_N"});

  double Q_etaiN = (C_DeltaLiT * bd.c_Omega + delta * C_LT * bd.c_DOmega * C_DeltaKi) * C_Ei +
                   C_EredNN * C_xiN +
                   delta * C_LT * bd.c_Omega * 0.5 * bd.c_D2Xh * C_DeltaKi * C_DeltaKi;
  lg.push("Q_etaiN", Q_etaiN,
          {"C_DeltaLiT", "C_DeltaKi", "C_Ei", "C_EredNN", "C_xiN", "C_LT", "c_Omega", "c_DOmega",
           "c_D2Xh"});

  // One Newton step, second half: tangent correction, new objects, new errors.
  double C_LxiL = cRd * (1 + C_T * C_LxiN);
  double C_NxiL = cRd * C_T * C_NxiN;
  double C_xiL = C_LxiL + C_NxiL;
  lg.push("C_xiL_L", C_LxiL, {"c_R(delta)", "C_T", "C_xiN_L"});
  lg.push("C_xiL_N", C_NxiL, {"c_R(delta)", "C_T", "C_xiN_N"});
  lg.push("C_xiL", C_xiL, {"C_xiL_L", "C_xiL_N"});

  double C_LDeltaKn = bd.c_DPhi * C_L * C_LxiL + gdt * C_LDeltaKi;
  double C_NDeltaKn = bd.c_DPhi * C_L * C_NxiL + gdt * C_NDeltaKi;
  double C_DeltaKn = C_LDeltaKn + C_NDeltaKn;
  lg.push("C_DeltaKn_L", C_LDeltaKn, {"C_xiL_L", "C_DeltaKi_L", "C_L", "c_DPhi"});
  lg.push("C_DeltaKn_N", C_NDeltaKn, {"C_xiL_N", "C_DeltaKi_N", "C_L", "c_DPhi"});
  lg.push("C_DeltaKn", C_DeltaKn, {"C_DeltaKn_L", "C_DeltaKn_N"});

  double C_LDeltaDKn = d * bd.c_DPhi * C_L * C_LxiL + gdt * C_LDeltaDKi;
  double C_NDeltaDKn = d * bd.c_DPhi * C_L * C_NxiL + gdt * C_NDeltaDKi;
  double C_DeltaDKn = C_LDeltaDKn + C_NDeltaDKn;
  lg.push("C_DeltaDKn_L", C_LDeltaDKn, {"C_xiL_L", "C_DeltaDKi_L", "C_L", "c_DPhi"});
  lg.push("C_DeltaDKn_N", C_NDeltaDKn, {"C_xiL_N", "C_DeltaDKi_N", "C_L", "c_DPhi"});
  lg.push("C_DeltaDKn", C_DeltaDKn, {"C_DeltaDKn_L", "C_DeltaDKn_N"});

  double C_LDeltaDKnT = 2.0 * n * bd.c_DPhi * C_L * C_LxiL + gdt * C_LDeltaDKiT;
  double C_NDeltaDKnT = 2.0 * n * bd.c_DPhi * C_L * C_NxiL + gdt * C_NDeltaDKiT;
  double C_DeltaDKnT = C_LDeltaDKnT + C_NDeltaDKnT;
  lg.push("C_DeltaDKnT_L", C_LDeltaDKnT, {"C_xiL_L", "C_DeltaDKiT_L", "C_L", "c_DPhi"});
  lg.push("C_DeltaDKnT_N", C_NDeltaDKnT, {"C_xiL_N", "C_DeltaDKiT_N", "C_L", "c_DPhi"});
  lg.push("C_DeltaDKnT", C_DeltaDKnT, {"C_DeltaDKnT_L", "C_DeltaDKnT_N"});

  double C_LDeltaLn = C_LDeltaDKn + delta * bd.c_DXp * C_LDeltaKn;
  double C_NDeltaLn = C_NDeltaDKn + delta * bd.c_DXp * C_NDeltaKn;
  double C_DeltaLn = C_LDeltaLn + C_NDeltaLn;
  lg.push("C_DeltaLn_L", C_LDeltaLn, {"C_DeltaDKn_L", "C_DeltaKn_L", "c_DXp"});
  lg.push("C_DeltaLn_N", C_NDeltaLn, {"C_DeltaDKn_N", "C_DeltaKn_N", "c_DXp"});
  lg.push("C_DeltaLn", C_DeltaLn, {"C_DeltaLn_L", "C_DeltaLn_N"});

  double C_LDeltaLnT = std::max(C_LDeltaDKnT, delta * bd.c_DXpT * C_LDeltaKn);
  double C_NDeltaLnT = std::max(C_NDeltaDKnT, delta * bd.c_DXpT * C_NDeltaKn);
  double C_DeltaLnT = C_LDeltaLnT + C_NDeltaLnT;
  lg.push("C_DeltaLnT_L", C_LDeltaLnT, {"C_DeltaDKnT_L", "C_DeltaKn_L", "c_DXpT"});
  lg.push("C_DeltaLnT_N", C_NDeltaLnT, {"C_DeltaDKnT_N", "C_DeltaKn_N", "c_DXpT"});
  lg.push("C_DeltaLnT", C_DeltaLnT, {"C_DeltaLnT_L", "C_DeltaLnT_N"});

  double C_LDeltaGLn = C_LDeltaLnT * bd.c_G * C_L + delta * C_LT * bd.c_DG * C_LDeltaKn * C_L +
                       C_LT * bd.c_G * C_LDeltaLn;
  double C_NDeltaGLn = C_NDeltaLnT * bd.c_G * C_L + delta * C_LT * bd.c_DG * C_NDeltaKn * C_L +
                       C_LT * bd.c_G * C_NDeltaLn;
  double C_DeltaGLn = C_LDeltaGLn + C_NDeltaGLn;
  lg.push("C_DeltaGLn_L", C_LDeltaGLn, {"C_DeltaLnT_L", "C_DeltaKn_L", "C_DeltaLn_L", "C_L", "C_LT", "c_G", "c_DG"});
  lg.push("C_DeltaGLn_N", C_NDeltaGLn, {"C_DeltaLnT_N", "C_DeltaKn_N", "C_DeltaLn_N", "C_L", "C_LT", "c_G", "c_DG"});
  lg.push("C_DeltaGLn", C_DeltaGLn, {"C_DeltaGLn_L", "C_DeltaGLn_N"});

  double C_LDeltaBn = sB * sB * C_LDeltaGLn;
  double C_NDeltaBn = sB * sB * C_NDeltaGLn;
  double C_DeltaBn = sB * sB * C_DeltaGLn;
  lg.push("C_DeltaBn_L", C_LDeltaBn, {"C_DeltaGLn_L", "sigma_B"});
  lg.push("C_DeltaBn_N", C_NDeltaBn, {"C_DeltaGLn_N", "sigma_B"});
  lg.push("C_DeltaBn", C_DeltaBn, {"C_DeltaGLn", "sigma_B"});

  double C_LDeltaNn = delta * bd.c_DJ * C_LDeltaKn * C_L * sB + bd.c_J * C_LDeltaLn * sB +
                      bd.c_J * C_L * C_LDeltaBn;
  double C_NDeltaNn = delta * bd.c_DJ * C_NDeltaKn * C_L * sB + bd.c_J * C_NDeltaLn * sB +
                      bd.c_J * C_L * C_NDeltaBn;
  double C_DeltaNn = C_LDeltaNn + C_NDeltaNn;
  lg.push("C_DeltaNn_L", C_LDeltaNn, {"C_DeltaKn_L", "C_DeltaLn_L", "C_DeltaBn_L", "C_L", "sigma_B", "c_J", "c_DJ"});
  lg.push("C_DeltaNn_N", C_NDeltaNn, {"C_DeltaKn_N", "C_DeltaLn_N", "C_DeltaBn_N", "C_L", "sigma_B", "c_J", "c_DJ"});
  lg.push("C_DeltaNn", C_DeltaNn, {"C_DeltaNn_L", "C_DeltaNn_N"});

  double C_LDeltaNnT = delta * sB * C_L * bd.c_DJT * C_LDeltaKn + sB * C_LDeltaLn * bd.c_JT +
                       C_LDeltaBn * C_L * bd.c_JT;
  double C_NDeltaNnT = delta * sB * C_L * bd.c_DJT * C_NDeltaKn + sB * C_NDeltaLn * bd.c_JT +
                       C_NDeltaBn * C_L * bd.c_JT;
  double C_DeltaNnT = C_LDeltaNnT + C_NDeltaNnT;
  lg.push("C_DeltaNnT_L", C_LDeltaNnT, {"C_DeltaKn_L", "C_DeltaLn_L", "C_DeltaBn_L", "C_L", "sigma_B", "c_JT", "c_DJT"});
  lg.push("C_DeltaNnT_N", C_NDeltaNnT, {"C_DeltaKn_N", "C_DeltaLn_N", "C_DeltaBn_N", "C_L", "sigma_B", "c_JT", "c_DJT"});
  lg.push("C_DeltaNnT", C_DeltaNnT, {"C_DeltaNnT_L", "C_DeltaNnT_N"});

  double C_LDeltaTn = C_LDeltaNnT * bd.c_Th * C_N + delta * C_NT * bd.c_DTh * C_LDeltaKn * C_N +
                      C_NT * bd.c_Th * C_LDeltaNn;
  double C_NDeltaTn = C_NDeltaNnT * bd.c_Th * C_N + delta * C_NT * bd.c_DTh * C_NDeltaKn * C_N +
                      C_NT * bd.c_Th * C_NDeltaNn;
  double C_DeltaTn = C_LDeltaTn + C_NDeltaTn;
  lg.push("C_DeltaTn_L", C_LDeltaTn, {"C_DeltaNnT_L", "C_DeltaKn_L", "C_DeltaNn_L", "C_N", "C_NT", "c_Th", "c_DTh"});
  lg.push("C_DeltaTn_N", C_NDeltaTn, {"C_DeltaNnT_N", "C_DeltaKn_N", "C_DeltaNn_N", "C_N", "C_NT", "c_Th", "c_DTh"});
  lg.push("C_DeltaTn", C_DeltaTn, {"C_DeltaTn_L", "C_DeltaTn_N"});

  double C_LDeltaiTn = sTi * sTi * C_LDeltaTn;
  double C_NDeltaiTn = sTi * sTi * C_NDeltaTn;
  double C_DeltaiTn = sTi * sTi * C_DeltaTn;
  lg.push("C_DeltaiTn_L", C_LDeltaiTn, {"C_DeltaTn_L", "sigma_Tinv"});
  lg.push("C_DeltaiTn_N", C_NDeltaiTn, {"C_DeltaTn_N", "sigma_Tinv"});
  lg.push("C_DeltaiTn", C_DeltaiTn, {"C_DeltaTn", "sigma_Tinv"});

  double C_LLiexiL = 1 + C_T * C_LxiN;
  double C_NLiexiL = C_T * C_NxiN;
  double C_LiexiL = C_LLiexiL + C_NLiexiL;
  lg.push("C_LiexiL_L", C_LLiexiL, {"C_T", "C_xiN_L"});
  lg.push("C_LiexiL_N", C_NLiexiL, {"C_T", "C_xiN_N"});
  lg.push("C_LiexiL", C_LiexiL, {"C_LiexiL_L", "C_LiexiL_N"});

  double C_LEn = bd.c_DPhi * (C_LEi + in.sigma.sigma_L(bd) * C_LLiexiL);
  double C_NEn = bd.c_DPhi * (C_NEi + in.sigma.sigma_L(bd) * C_NLiexiL);
  double C_En = C_LEn + C_NEn;
  lg.push("C_En_L", C_LEn, {"C_Ei_L", "C_LiexiL_L", "sigma_L", "c_DPhi"});
  lg.push("C_En_N", C_NEn, {"C_Ei_N", "C_LiexiL_N", "sigma_L", "c_DPhi"});
  lg.push("C_En", C_En, {"C_En_L", "C_En_N"});

  double Q_etanN = (1 + n) * (1 + C_NOmegaL * C_LiexiL * mu_etaN) * Q_etaiN;
  lg.push("Q_etanN", Q_etanN, {"C_OmegaL_N", "C_LiexiL", "Q_etaiN", "mu_etaN"});

  double Q_etanL1 = C_EredLN * C_xiN + delta * C_NT * bd.c_Omega * 0.5 * bd.c_D2Xh * C_DeltaKi * C_DeltaKi +
                    gdt * C_NOmegaN;
  lg.push("Q_etanL1", Q_etanL1, {"C_EredLN", "C_xiN", "C_DeltaKi", "C_OmegaN_N", "C_NT", "c_Omega", "c_D2Xh"});
  double Q_etanL2 = C_NT * bd.c_Omega * d * C_Ei * C_xiL;
  lg.push("Q_etanL2", Q_etanL2, {"C_Ei", "C_xiL", "C_NT", "c_Omega"});
  double Q_etanL3 = C_NT * bd.c_Omega * (d * in.sigma.sigma_L(bd) * C_xiL + gdt * C_DeltaLi) * C_LiexiL;
  lg.push("Q_etanL3", Q_etanL3, {"C_xiL", "C_DeltaLi", "C_LiexiL", "sigma_L", "C_NT", "c_Omega"});
  double Q_etanL4 = C_NT * bd.c_Omega * bd.c_DXp * bd.c_DPhi * C_xiL *
                    (C_Ei + in.sigma.sigma_L(bd) * C_LiexiL);
  lg.push("Q_etanL4", Q_etanL4, {"C_xiL", "C_Ei", "C_LiexiL", "sigma_L", "C_NT", "c_Omega", "c_DXp", "c_DPhi"});
  double Q_etanL5 = (C_DeltaNnT * bd.c_Omega + delta * C_NT * bd.c_DOmega * C_DeltaKn) * C_En;
  lg.push("Q_etanL5", Q_etanL5, {"C_DeltaNnT", "C_DeltaKn", "C_En", "C_NT", "c_Omega", "c_DOmega"});
  double Q_etanL = gdt * Q_etanL1 + Q_etanL2 + Q_etanL3 + delta * Q_etanL4 + Q_etanL5;
  lg.push("Q_etanL", Q_etanL, {"Q_etanL1", "Q_etanL2", "Q_etanL3", "Q_etanL4", "Q_etanL5"});

  return lg;
}

FinalConstants final_constants(const ConstantLedger& lg, const LedgerInputs& in,
                               const StripSchedule& schedule, const TorusMeasurement& m) {
  const double tau = in.dio.tau;
  const double delta = schedule.delta0;
  const double muE = in.control.mu_E;
  if (std::abs(schedule.rho0 - in.rho) > 1e-15 || std::abs(schedule.delta0 - in.delta) > 1e-15)
    fail(Errc::invalid_argument, "final_constants(): schedule does not match the ledger strips");

  FinalConstants fc;
  fc.a = schedule.ratio_a;
  if (!(fc.a > 1)) fail(Errc::invalid_argument, "final_constants(): need a > 1");
  fc.Q_hat = std::max(lg.at("Q_etanL"), std::pow(fc.a, tau) * lg.at("Q_etanN"));
  fc.Cstar_DeltaK = fc.a / (fc.a - muE) * lg.at("C_DeltaKn");
  fc.Cstar_DeltaDK = 1.0 / (1.0 - muE) * lg.at("C_DeltaDKn");
  fc.Cstar_DeltaDKT = 1.0 / (1.0 - muE) * lg.at("C_DeltaDKnT");
  fc.Cstar_DeltaB = 1.0 / (1.0 - muE) * lg.at("C_DeltaBn");
  fc.Cstar_DeltaN = 1.0 / (1.0 - muE) * lg.at("C_DeltaNn");
  fc.Cstar_DeltaNT = 1.0 / (1.0 - muE) * lg.at("C_DeltaNnT");
  fc.Cstar_DeltaiT = 1.0 / (1.0 - muE) * lg.at("C_DeltaiTn");

  // Strict inequalities: positive gaps between measured norms and sigmas.
  struct Gap {
    const char* name;
    double sigma;
    double measured;
  };
  const Gap gaps[] = {
      {"sigma_DK", in.sigma.sigma_DK, m.norm_DK},
      {"sigma_DKT", in.sigma.sigma_DKT, m.norm_DKT},
      {"sigma_B", in.sigma.sigma_B, m.norm_B},
      {"sigma_N", in.sigma.sigma_N, m.norm_N},
      {"sigma_NT", in.sigma.sigma_NT, m.norm_NT},
      {"sigma_Tinv", in.sigma.sigma_Tinv, m.abs_avg_T_inv},
  };
  for (const Gap& g : gaps)
    if (!(g.measured < g.sigma))
      fail(Errc::h2_violation, std::string("condition number violated: measured norm for ") + g.name + " (" +
                                   std::to_string(g.measured) + ") is not strictly below " +
                                   std::to_string(g.sigma));
  if (!(m.dist_boundary > 0))
    fail(Errc::h2_violation, "domain margin violated: torus does not stay strictly inside the system domain");

  const double gdt = in.dio.gamma * std::pow(delta, tau);
  fc.terms.clear();
  auto term = [&](const std::string& label, double v, std::vector<std::string> deps) {
    fc.terms.push_back({label, v, std::move(deps)});
  };
  term("fake_condition", gdt * std::max(1.0, lg.at("C_sym")) / in.control.mu, {"C_sym", "mu"});
  term("xiL_budget", lg.at("C_xiL"), {"C_xiL"});
  term("domain_distance", delta * fc.Cstar_DeltaK / m.dist_boundary, {"C_DeltaKn", "mu_E"});
  term("gap_DK", fc.Cstar_DeltaDK / (in.sigma.sigma_DK - m.norm_DK), {"C_DeltaDKn", "mu_E"});
  term("gap_DKT", fc.Cstar_DeltaDKT / (in.sigma.sigma_DKT - m.norm_DKT), {"C_DeltaDKnT", "mu_E"});
  term("gap_B", fc.Cstar_DeltaB / (in.sigma.sigma_B - m.norm_B), {"C_DeltaBn", "mu_E"});
  term("gap_N", fc.Cstar_DeltaN / (in.sigma.sigma_N - m.norm_N), {"C_DeltaNn", "mu_E"});
  term("gap_NT", fc.Cstar_DeltaNT / (in.sigma.sigma_NT - m.norm_NT), {"C_DeltaNnT", "mu_E"});
  term("gap_iT", fc.Cstar_DeltaiT / (in.sigma.sigma_Tinv - m.abs_avg_T_inv),
       {"C_DeltaiTn", "mu_E"});
  term("etaN_control", 1.0 / in.control.mu_etaN, {"mu_etaN"});
  term("error_recursion", std::pow(fc.a, tau + 1.0) * fc.Q_hat / muE, {"Q_etanL", "Q_etanN", "mu_E"});

  double best = -1.0;
  for (const LedgerEntry& t : fc.terms)
    if (t.value > best) {
      best = t.value;
      fc.binding_term = t.label;
    }
  fc.C_theoE = best;
  return fc;
}

KamReport check_kam(const TorusMeasurement& m, const ConstantLedger&, const FinalConstants& fc,
                    const LedgerInputs& in) {
  if (std::abs(m.rho - in.rho) > 1e-15)
    fail(Errc::invalid_argument,
         "check_kam(): torus norms were measured at a different strip than the ledger");
  KamReport rep;
  rep.final_constants = fc;
  const double tau = in.dio.tau;
  const double gdt = in.dio.gamma * std::pow(in.delta, tau);
  rep.epsilon = std::max(m.etaL_norm, m.etaN_norm / gdt);
  rep.condition_value = fc.C_theoE / (gdt * in.delta) * rep.epsilon;
  rep.pass = rep.condition_value < 1.0;
  rep.binding_term = fc.binding_term;
  rep.radius_K = fc.Cstar_DeltaK / gdt * rep.epsilon;
  rep.radius_DK = fc.Cstar_DeltaDK / (gdt * in.delta) * rep.epsilon;
  rep.radius_DKT = fc.Cstar_DeltaDKT / (gdt * in.delta) * rep.epsilon;
  rep.radius_B = fc.Cstar_DeltaB / (gdt * in.delta) * rep.epsilon;
  rep.radius_N = fc.Cstar_DeltaN / (gdt * in.delta) * rep.epsilon;
  rep.radius_NT = fc.Cstar_DeltaNT / (gdt * in.delta) * rep.epsilon;
  rep.radius_iT = fc.Cstar_DeltaiT / (gdt * in.delta) * rep.epsilon;
  return rep;
}

NeumannResult neumann_inverse_check(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Mbar,
                                    double sigma) {
  if (M.rows() != M.cols() || Mbar.rows() != Mbar.cols() || M.rows() != Mbar.rows())
    fail(Errc::shape_mismatch, "neumann_inverse_check(): square matrices of equal size required");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) fail(Errc::invalid_argument, "neumann_inverse_check(): singular M");
  double inv_norm = matrix_norm(lu.inverse());
  if (!(inv_norm < sigma))
    fail(Errc::invalid_argument, "neumann_inverse_check(): requires |M^-1| < sigma");
  NeumannResult res;
  double diff = matrix_norm(Mbar - M);
  res.condition = sigma * inv_norm * diff / (sigma - inv_norm);
  if (res.condition < 1.0) {
    res.verdict = NeumannVerdict::invertible;
    res.bound_inverse = sigma;
    res.bound_difference = sigma * inv_norm * diff;
  } else {
    res.verdict = NeumannVerdict::indeterminate;
  }
  return res;
}

}  // namespace kamtorus::cert
