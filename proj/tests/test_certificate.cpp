#include <doctest.h>

#include <cmath>
#include <random>

#include "kamtorus/certificate.hpp"

using namespace kamtorus;
using namespace kamtorus::cert;
using fourier::kTwoPi;

namespace {

// The certificate claims a conservative gamma: the printed uniform bound
// c_R_hat only dominates c_R(delta, m) when gamma sits well below the best
// admissible value (c_R scales linearly in the claimed gamma).
fourier::DiophantineData golden_dio(double gamma = 0.5, int kmax = 2048) {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  Eigen::VectorXd w(2);
  w << 1.0, phi;
  fourier::DiophantineCheck chk = fourier::verify_diophantine(w, gamma, 1.0, kmax);
  REQUIRE(chk.ok);
  return chk.data;
}

LedgerInputs sample_inputs() {
  LedgerInputs in;
  in.bounds.c_Omega = in.bounds.c_G = in.bounds.c_J = in.bounds.c_JT = 1.0;
  in.bounds.c_Xh = 30.0;
  in.bounds.c_DXh = in.bounds.c_DXhT = 25.0;
  in.bounds.c_D2Xh = 16.0;
  in.bounds.c_Th = 50.0;
  in.bounds.c_DTh = 32.0;
  in.bounds.c_DPhi = 1.0;
  in.bounds.domain_radius = 2.5;
  in.sigma.sigma_DK = 13.0;
  in.sigma.sigma_DKT = 14.0;
  in.sigma.sigma_B = 0.05;
  in.sigma.sigma_N = 0.5;
  in.sigma.sigma_NT = 1.0;
  in.sigma.sigma_Tinv = 60.0;
  in.control.mu = 0.1;
  in.control.mu_E = 0.5;
  in.control.mu_etaN = 1.0;
  in.dio = golden_dio();
  in.n = 2;
  in.rho = 0.1;
  in.delta = 0.01;
  in.russmann_mode = RussmannMode::sharp;
  in.m_override = 2000;
  return in;
}

// Spreadsheet-style transcription of the whole constant cascade, written
// independently of the library implementation.
std::map<std::string, double> reevaluate_tables(const LedgerInputs& in) {
  std::map<std::string, double> v;
  const double tau = in.dio.tau, gamma = in.dio.gamma;
  const int d = 2, n = in.n;
  const double dl = in.delta, rho = in.rho, mu = in.control.mu;
  RussmannEvaluator russ(in.dio, in.russmann_mode, in.m_override);
  double cRd = russ.c_R(dl), cR1d = russ.c1_R(dl), cRr = russ.c_R(rho);
  double gdt = gamma * std::pow(dl, tau);
  double CL = in.sigma.sigma_DK + in.bounds.c_Xp;
  double CLT = std::max(in.sigma.sigma_DKT, in.bounds.c_XpT);
  double CN = in.sigma.sigma_N, CNT = in.sigma.sigma_NT;
  double sB = in.sigma.sigma_B, sTi = in.sigma.sigma_Tinv, sL = CL, sN = in.sigma.sigma_N;
  const auto& b = in.bounds;

  double OmL = (d + n - 2) * cR1d, OmN = sB * sB * OmL;
  v["C_sym"] = std::max(OmL, OmN);
  double CEL = (CL + CN * mu) / (1 - mu * mu), CEN = (CN + CL * mu) / (1 - mu * mu);
  v["C_E"] = CEL + gdt * CEN;
  double CETL = n * (CLT + mu * CNT) / (1 - mu * mu), CETN = n * (CNT + mu * CLT) / (1 - mu * mu);
  v["C_ET"] = CETL + gdt * CETN;
  double fde = d * (1 + b.c_Omega * (CNT * CEL + CLT * CEN));
  double CDEL = fde * CEL, CDEN = fde * CEN;
  v["C_DE"] = CDEL + gdt * CDEN;
  double fdet = n * (1 + b.c_Omega * (CN * CETL + CL * CETN));
  double CDETL = fdet * CETL, CDETN = fdet * CETN;
  v["C_DET"] = CDETL + gdt * CDETN;
  double CE = v["C_E"], CDE = v["C_DE"], CDET = v["C_DET"];
  double LieK = CE * dl * mu + b.c_Xh;
  double LieL = CDE * mu + b.c_DXp * CE * dl * mu + b.c_DXh * CL;
  double LieLT = std::max(CDET * mu, b.c_DXpT * CE * dl * mu) + CLT * b.c_DXhT;
  double LieGL = LieLT * b.c_G * CL + CLT * b.c_DG * LieK * CL + CLT * b.c_G * LieL;
  double LieB = sB * sB * LieGL;
  double LieN = b.c_DJ * LieK * CL * sB + b.c_J * LieL * sB + b.c_J * CL * LieB;
  v["C_LieK"] = LieK;
  v["C_LieN"] = LieN;
  double CT = CNT * b.c_Th * CN;
  v["C_T"] = CT;
  double EredLL_L = d + (d + dl * b.c_DXp) * CNT * b.c_Omega * CEL;
  double EredLL_N = (d + dl * b.c_DXp) * CNT * b.c_Omega * CEN;
  double EredNL_L = (d + dl * b.c_DXp) * CLT * b.c_Omega * CEL;
  double EredNL_N = d + (d + dl * b.c_DXp) * CLT * b.c_Omega * CEN;
  v["C_EredLL_L"] = EredLL_L;
  v["C_EredLL_N"] = EredLL_N;
  double EredNN_L = dl * CLT * b.c_DOmega * CEL * CN +
                    std::max(n + d * CEL * b.c_Omega * CNT, dl * b.c_DXpT * CEL * b.c_Omega * CN);
  double EredNN_N = dl * CLT * b.c_DOmega * CEN * CN +
                    std::max(d * CEN * b.c_Omega * CNT, dl * b.c_DXpT * CEN * b.c_Omega * CN);
  double EredNN = EredNN_L + gdt * EredNN_N;
  v["C_EredNN"] = EredNN;
  double EredLN_L = dl * sB * sB * CLT * b.c_G * b.c_DJ * CL * CEL + sB * sB * EredNL_L;
  double EredLN_N = gamma * std::pow(dl, tau + 1) * sB * sB * CLT * b.c_G * b.c_DJ * CL * CEN +
                    gdt * sB * sB * EredNL_N + sB * OmL * LieB;
  double EredLN = EredLN_L + EredLN_N;
  v["C_EredLN"] = EredLN;

  double avL = sTi, avN = std::pow(dl / rho, tau) * sTi * CT * cRr;
  double xiNL = avL, xiNN = avN + cRd, CxiN = xiNL + xiNN;
  v["C_xiN"] = CxiN;
  double dKiL = CN * xiNL, dKiN = CN * xiNN, dKi = dKiL + dKiN;
  double dDKiL = d * CN * avL, dDKiN = d * CN * (avN + cR1d);
  double dDKiTL = n * CNT * avL, dDKiTN = n * CNT * (avN + cR1d);
  double dLiL = dDKiL + dl * b.c_DXp * dKiL, dLiN = dDKiN + dl * b.c_DXp * dKiN;
  double dLiTL = std::max(dDKiTL, dl * b.c_DXpT * dKiL);
  double dLiTN = std::max(dDKiTN, dl * b.c_DXpT * dKiN);
  double dLiT = dLiTL + dLiTN;
  double EiL = CEL + b.c_DXh * dKiL + LieN * xiNL;
  double EiN = gdt * (CEN + sN) + b.c_DXh * dKiN + LieN * xiNN;
  double Ei = EiL + EiN;
  v["C_Ei"] = Ei;
  double QiN = (dLiT * b.c_Omega + dl * CLT * b.c_DOmega * dKi) * Ei + EredNN * CxiN +
               dl * CLT * b.c_Omega * 0.5 * b.c_D2Xh * dKi * dKi;
  v["Q_etaiN"] = QiN;

  double xiLL = cRd * (1 + CT * xiNL), xiLN = cRd * CT * xiNN, CxiL = xiLL + xiLN;
  v["C_xiL"] = CxiL;
  double dKnL = b.c_DPhi * CL * xiLL + gdt * dKiL, dKnN = b.c_DPhi * CL * xiLN + gdt * dKiN;
  double dKn = dKnL + dKnN;
  v["C_DeltaKn"] = dKn;
  double dDKnL = d * b.c_DPhi * CL * xiLL + gdt * dDKiL;
  double dDKnN = d * b.c_DPhi * CL * xiLN + gdt * dDKiN;
  v["C_DeltaDKn"] = dDKnL + dDKnN;
  double dDKnTL = 2 * n * b.c_DPhi * CL * xiLL + gdt * dDKiTL;
  double dDKnTN = 2 * n * b.c_DPhi * CL * xiLN + gdt * dDKiTN;
  v["C_DeltaDKnT"] = dDKnTL + dDKnTN;
  double dLnL = dDKnL + dl * b.c_DXp * dKnL, dLnN = dDKnN + dl * b.c_DXp * dKnN;
  double dLnTL = std::max(dDKnTL, dl * b.c_DXpT * dKnL);
  double dLnTN = std::max(dDKnTN, dl * b.c_DXpT * dKnN);
  double dGLnL = dLnTL * b.c_G * CL + dl * CLT * b.c_DG * dKnL * CL + CLT * b.c_G * dLnL;
  double dGLnN = dLnTN * b.c_G * CL + dl * CLT * b.c_DG * dKnN * CL + CLT * b.c_G * dLnN;
  double dBnL = sB * sB * dGLnL, dBnN = sB * sB * dGLnN;
  v["C_DeltaBn"] = sB * sB * (dGLnL + dGLnN);
  double dNnL = dl * b.c_DJ * dKnL * CL * sB + b.c_J * dLnL * sB + b.c_J * CL * dBnL;
  double dNnN = dl * b.c_DJ * dKnN * CL * sB + b.c_J * dLnN * sB + b.c_J * CL * dBnN;
  v["C_DeltaNn"] = dNnL + dNnN;
  double dNnTL = dl * sB * CL * b.c_DJT * dKnL + sB * dLnL * b.c_JT + dBnL * CL * b.c_JT;
  double dNnTN = dl * sB * CL * b.c_DJT * dKnN + sB * dLnN * b.c_JT + dBnN * CL * b.c_JT;
  double dNnT = dNnTL + dNnTN;
  v["C_DeltaNnT"] = dNnT;
  double dTnL = dNnTL * b.c_Th * CN + dl * CNT * b.c_DTh * dKnL * CN + CNT * b.c_Th * dNnL;
  double dTnN = dNnTN * b.c_Th * CN + dl * CNT * b.c_DTh * dKnN * CN + CNT * b.c_Th * dNnN;
  v["C_DeltaiTn"] = sTi * sTi * (dTnL + dTnN);
  double LxL = 1 + CT * xiNL, LxN = CT * xiNN, Lx = LxL + LxN;
  v["C_LiexiL"] = Lx;
  double EnL = b.c_DPhi * (EiL + sL * LxL), EnN = b.c_DPhi * (EiN + sL * LxN);
  double En = EnL + EnN;
  v["C_En"] = En;
  v["Q_etanN"] = (1 + n) * (1 + OmL * Lx * in.control.mu_etaN) * QiN;
  double q1 = EredLN * CxiN + dl * CNT * b.c_Omega * 0.5 * b.c_D2Xh * dKi * dKi + gdt * OmN;
  double q2 = CNT * b.c_Omega * d * Ei * CxiL;
  double q3 = CNT * b.c_Omega * (d * sL * CxiL + gdt * (dLiL + dLiN)) * Lx;
  double q4 = CNT * b.c_Omega * b.c_DXp * b.c_DPhi * CxiL * (Ei + sL * Lx);
  double q5 = (dNnT * b.c_Omega + dl * CNT * b.c_DOmega * dKn) * En;
  v["Q_etanL"] = gdt * q1 + q2 + q3 + dl * q4 + q5;
  return v;
}

}  // namespace

TEST_CASE("hat Russmann constant closed form at d = 2, tau = 1") {
  fourier::DiophantineData dio = golden_dio();
  RussmannConstants rc = compute_russmann(0.01, 64, dio);
  const double pi = 0.5 * kTwoPi;
  double zeta22 = pi * pi / 6.0 - 1.0;
  double want = std::sqrt(2.0 * zeta22 * 2.0 / std::pow(pi, 4.0));
  CHECK(rc.c_R_hat == doctest::Approx(want).epsilon(1e-12));
  CHECK(rc.c_R_hat == doctest::Approx(0.16274).epsilon(1e-3));
  CHECK(std::abs(rc.c_R_hat - 0.16274) < 1e-4);
  // Russmann-Cauchy bite factor at tau = 1 is exactly 4 (and <= 2^{tau+1}).
  CHECK(rc.c1_R_hat == doctest::Approx(4.0 * rc.c_R_hat));
  CHECK(rc.c1_R_hat <= std::pow(2.0, 2.0) * rc.c_R_hat + 1e-15);
}

TEST_CASE("c_R(delta, m) is nonincreasing in m and below the hat bound") {
  fourier::DiophantineData dio = golden_dio();
  double prev = 1e300;
  for (int m : {10, 40, 200, 1000, 2000}) {
    RussmannConstants rc = compute_russmann(0.01, m, dio);
    CHECK(rc.c_R <= prev + 1e-12);
    prev = rc.c_R;
  }
  RussmannConstants rc = compute_russmann(0.01, 2000, dio);
  CHECK(rc.c_R <= rc.c_R_hat);
  CHECK(rc.c1_R <= rc.c1_R_hat);
}

TEST_CASE("m beyond the verified cutoff is refused") {
  fourier::DiophantineData dio = golden_dio(0.99, 128);
  CHECK_THROWS_AS(compute_russmann(0.01, 256, dio), Error);
}

TEST_CASE("automatic m keeps the tail below a percent of the finite sum") {
  fourier::DiophantineData dio = golden_dio();
  int m = choose_m(0.01, dio);
  RussmannConstants rc = compute_russmann(0.01, m, dio);
  CHECK(rc.tail_term < 1e-2 * rc.finite_sum);
}

TEST_CASE("empirical Russmann bound on random polynomials") {
  fourier::DiophantineData dio = golden_dio();
  fourier::ModelSpec s;
  s.dim = 2;
  s.rows = s.cols = 1;
  s.cutoff = {16, 16, 0};
  s.grid = {64, 64, 1};
  const double rho = 0.1, delta = 0.02;
  RussmannConstants rc = compute_russmann(delta, 2000, dio);
  double gain = rc.c_R / (dio.gamma * std::pow(delta, dio.tau));
  for (unsigned seed = 0; seed < 100; ++seed) {
    fourier::FourierModel v = fourier::random_model(s, 5000 + seed, 1.0, 0.7);
    fourier::FourierModel u = fourier::solve_cohomological(v, dio);
    CHECK(fourier::strip_norm(u, rho - delta) <= gain * fourier::strip_norm(v, rho));
  }
}

TEST_CASE("geometric constant rows evaluate as specified") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  RussmannEvaluator russ(in.dio, in.russmann_mode, in.m_override);
  // C_OmegaL_N = (d + n - 2) c1_R(delta) with d = n = 2.
  CHECK(lg.at("C_OmegaL_N") == doctest::Approx(2.0 * russ.c1_R(0.01)).epsilon(1e-14));
  CHECK(lg.at("C_OmegaL_N") <= 2.0 * 4.0 * russ.c_R_hat());
  CHECK(lg.at("C_OmegaN_N") == doctest::Approx(0.05 * 0.05 * lg.at("C_OmegaL_N")).epsilon(1e-14));
  CHECK(lg.at("C_sym") == std::max(lg.at("C_OmegaL_N"), lg.at("C_OmegaN_N")));
}

TEST_CASE("mu to zero limit collapses the error constants to the frame norms") {
  LedgerInputs in = sample_inputs();
  in.control.mu = 1e-12;
  ConstantLedger lg = assemble_tables(in);
  CHECK(lg.at("C_E_L") == doctest::Approx(lg.at("C_L")).epsilon(1e-9));
  CHECK(lg.at("C_E_N") == doctest::Approx(lg.at("C_N")).epsilon(1e-9));
}

TEST_CASE("ledger evaluation is deterministic") {
  LedgerInputs in = sample_inputs();
  ConstantLedger a = assemble_tables(in);
  ConstantLedger b = assemble_tables(in);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].label == b.entries[i].label);
    CHECK(a.entries[i].value == b.entries[i].value);  // bit identical
  }
}

TEST_CASE("full ledger agrees with an independent re-evaluation") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  std::map<std::string, double> ref = reevaluate_tables(in);
  for (const auto& [label, want] : ref) {
    INFO(label);
    CHECK(lg.at(label) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("every ledger value is finite and nonnegative") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  CHECK(lg.entries.size() > 80);
  for (const auto& e : lg.entries) {
    CHECK(std::isfinite(e.value));
    CHECK(e.value >= 0.0);
  }
}

TEST_CASE("final constants: ratio, hat recursion constant, star factors") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  CHECK(sch.ratio_a == doctest::Approx(2.0));

  TorusMeasurement m;
  m.rho = 0.1;
  m.norm_DK = 12.0;
  m.norm_DKT = 13.0;
  m.norm_B = 0.03;
  m.norm_N = 0.4;
  m.norm_NT = 0.8;
  m.abs_avg_T_inv = 41.0;
  m.norm_K = 1.9;
  m.dist_boundary = 0.6;
  m.etaL_norm = 1e-10;
  m.etaN_norm = 1e-10;
  FinalConstants fc = final_constants(lg, in, sch, m);
  CHECK(fc.a == doctest::Approx(2.0));
  CHECK(fc.Q_hat ==
        doctest::Approx(std::max(lg.at("Q_etanL"), 2.0 * lg.at("Q_etanN"))).epsilon(1e-14));
  CHECK(fc.Cstar_DeltaK ==
        doctest::Approx(2.0 / (2.0 - 0.5) * lg.at("C_DeltaKn")).epsilon(1e-14));
  REQUIRE(fc.terms.size() == 11);

  // mu_E -> 0 turns the star factors into the bare iterative constants.
  LedgerInputs in0 = in;
  in0.control.mu_E = 1e-13;
  ConstantLedger lg0 = assemble_tables(in0);
  FinalConstants fc0 = final_constants(lg0, in0, sch, m);
  CHECK(fc0.Cstar_DeltaK == doctest::Approx(lg0.at("C_DeltaKn")).epsilon(1e-10));
}

TEST_CASE("a/delta is minimized at (rho - rho_inf)/6") {
  const double rho = 0.1, rho_inf = 0.04;
  double best = 1e300, best_delta = 0;
  const int steps = 60;
  for (int i = 1; i <= steps; ++i) {
    double dl = (rho - rho_inf) / 3.0 * i / (steps + 1);
    double a = (rho - rho_inf) / (rho - 3 * dl - rho_inf);
    if (a / dl < best) {
      best = a / dl;
      best_delta = dl;
    }
  }
  double grid_step = (rho - rho_inf) / 3.0 / (steps + 1);
  CHECK(std::abs(best_delta - (rho - rho_inf) / 6.0) <= grid_step);
}

TEST_CASE("check_kam: zero error passes with zero radii") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  TorusMeasurement m;
  m.rho = 0.1;
  m.norm_DK = 12.0;
  m.norm_DKT = 13.0;
  m.norm_B = 0.03;
  m.norm_N = 0.4;
  m.norm_NT = 0.8;
  m.abs_avg_T_inv = 41.0;
  m.dist_boundary = 0.6;
  m.etaL_norm = 0.0;
  m.etaN_norm = 0.0;
  FinalConstants fc = final_constants(lg, in, sch, m);
  KamReport rep = check_kam(m, lg, fc, in);
  CHECK(rep.epsilon == 0.0);
  CHECK(rep.condition_value == 0.0);
  CHECK(rep.pass);
  CHECK(rep.radius_K == 0.0);
  CHECK(rep.radius_iT == 0.0);
}

TEST_CASE("check_kam: large error fails and names the binding term") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  TorusMeasurement m;
  m.rho = 0.1;
  m.norm_DK = 12.0;
  m.norm_DKT = 13.0;
  m.norm_B = 0.03;
  m.norm_N = 0.4;
  m.norm_NT = 0.8;
  m.abs_avg_T_inv = 41.0;
  m.dist_boundary = 0.6;
  m.etaL_norm = 0.1;
  m.etaN_norm = 0.1;
  FinalConstants fc = final_constants(lg, in, sch, m);
  KamReport rep = check_kam(m, lg, fc, in);
  CHECK_FALSE(rep.pass);
  CHECK(rep.condition_value > 1.0);
  CHECK_FALSE(rep.binding_term.empty());
}

TEST_CASE("improving the measured torus never flips a pass into a fail") {
  // Constants held fixed: smaller measured norms and smaller errors only
  // shrink the inner terms and the condition value.
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  std::mt19937_64 rng(77u);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    TorusMeasurement m;
    m.rho = 0.1;
    m.norm_DK = 12.0 * unif(rng);
    m.norm_DKT = 13.0 * unif(rng);
    m.norm_B = 0.03 * unif(rng);
    m.norm_N = 0.4 * unif(rng);
    m.norm_NT = 0.8 * unif(rng);
    m.abs_avg_T_inv = 41.0 * unif(rng);
    m.dist_boundary = 0.2 + 0.4 * unif(rng);
    m.etaL_norm = 1e-8 * unif(rng);
    m.etaN_norm = 1e-8 * unif(rng);
    FinalConstants fc = final_constants(lg, in, sch, m);
    KamReport rep = check_kam(m, lg, fc, in);

    TorusMeasurement better = m;
    better.norm_DK *= 0.9;
    better.norm_DKT *= 0.8;
    better.norm_B *= 0.7;
    better.norm_N *= 0.9;
    better.norm_NT *= 0.9;
    better.abs_avg_T_inv *= 0.85;
    better.dist_boundary *= 1.2;
    better.etaL_norm *= 0.5;
    better.etaN_norm *= 0.5;
    FinalConstants fcb = final_constants(lg, in, sch, better);
    KamReport repb = check_kam(better, lg, fcb, in);
    CHECK(repb.condition_value <= rep.condition_value + 1e-15);
    if (rep.pass) CHECK(repb.pass);
  }
}

TEST_CASE("stale strip measurements are rejected") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  TorusMeasurement m;
  m.rho = 0.08;  // measured elsewhere
  m.norm_DK = 12.0;
  m.norm_DKT = 13.0;
  m.norm_B = 0.03;
  m.norm_N = 0.4;
  m.norm_NT = 0.8;
  m.abs_avg_T_inv = 41.0;
  m.dist_boundary = 0.6;
  FinalConstants fc;
  fc.a = 2.0;
  CHECK_THROWS_AS(check_kam(m, lg, fc, in), Error);
}

TEST_CASE("condition-number equality is rejected as non-strict") {
  LedgerInputs in = sample_inputs();
  ConstantLedger lg = assemble_tables(in);
  fourier::StripSchedule sch = fourier::make_schedule(0.1, 0.04, 0.01);
  TorusMeasurement m;
  m.rho = 0.1;
  m.norm_DK = 12.0;
  m.norm_DKT = 13.0;
  m.norm_B = in.sigma.sigma_B;  // equality is not strict
  m.norm_N = 0.4;
  m.norm_NT = 0.8;
  m.abs_avg_T_inv = 41.0;
  m.dist_boundary = 0.6;
  try {
    final_constants(lg, in, sch, m);
    FAIL("expected a condition-number violation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::h2_violation);
  }
}

TEST_CASE("Neumann check: scaled identity example") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd Mbar = 1.1 * M;
  NeumannResult res = neumann_inverse_check(M, Mbar, 2.0);
  CHECK(res.verdict == NeumannVerdict::invertible);
  CHECK(res.condition == doctest::Approx(2.0 * 1.0 * 0.1 / (2.0 - 1.0)).epsilon(1e-14));
  CHECK(matrix_norm(Mbar.inverse()) < res.bound_inverse);
  CHECK(matrix_norm(Mbar.inverse() - M.inverse()) < res.bound_difference);
}

TEST_CASE("Neumann check: identical matrices collapse the bounds") {
  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 0, 1;
  NeumannResult res = neumann_inverse_check(M, M, 3.0);
  CHECK(res.verdict == NeumannVerdict::invertible);
  CHECK(res.condition == 0.0);
  CHECK(res.bound_difference == 0.0);
}

TEST_CASE("Neumann check is indeterminate, never 'false'") {
  // Perturbations sized near the admissibility boundary: the check may give up
  // even though a direct inverse exists.
  std::mt19937_64 rng(11u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int indeterminate = 0;
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) += 0.2 * unif(rng);
    double inv_norm = matrix_norm(M.inverse());
    double sigma = inv_norm * 1.5;
    Eigen::MatrixXd Mbar = M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Mbar(i, j) += unif(rng) / (1.2 * inv_norm);
    NeumannResult res = neumann_inverse_check(M, Mbar, sigma);
    if (res.verdict == NeumannVerdict::invertible) {
      CHECK(matrix_norm(Mbar.inverse()) < sigma);
    } else {
      ++indeterminate;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Mbar);
      (void)lu;  // a direct inverse may or may not exist; no claim is made
    }
  }
  CHECK(indeterminate > 0);
}

TEST_CASE("uniform mode replaces every c_R by the hat bounds") {
  LedgerInputs in = sample_inputs();
  in.russmann_mode = RussmannMode::uniform;
  ConstantLedger lg = assemble_tables(in);
  RussmannEvaluator russ(in.dio, RussmannMode::uniform);
  CHECK(lg.at("c_R(delta)") == russ.c_R_hat());
  CHECK(lg.at("c1_R(delta)") == russ.c1_R_hat());
  CHECK(lg.at("c_R(rho)") == russ.c_R_hat());
}

#include "kamtorus/systems.hpp"

TEST_CASE("reducibility residual blocks obey their certified bounds") {
  // Perturbed torus: the measured E_red block norms on the narrowed strip
  // stay below the certified (C/delta)-weighted eta-norm combinations.
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  systems::OscillatorParams p;
  p.n = 2;
  p.b = {1.0, 1.5};
  p.a = {kTwoPi * 1.0 - 0.5, kTwoPi * phi - 0.75};
  p.eps = 1e-3;
  p.domain_radius = 2.5;
  geometry::HamiltonianSystem sys = systems::make_oscillator(p);
  fourier::Axis cut{8, 8, 0}, grid{32, 32, 1};
  systems::ExactTorus et = systems::exact_torus(sys, p, {1.0, 1.0}, cut, grid);

  fourier::ModelSpec ps = et.K.spec();
  ps.cutoff = {2, 2, 0};
  ps.grid = {8, 8, 1};
  const double rho = 0.05, delta = 0.02;
  fourier::DiophantineData dio = golden_dio(0.5, 512);

  for (unsigned seed = 0; seed < 5; ++seed) {
    FourierModel noise = fourier::random_model(ps, 600 + seed, 2e-3, 0.4);
    FourierModel K = fourier::add(et.K, fourier::reshape_spec(noise, cut, grid));
    geometry::FrameBundle fb = geometry::build_frames(K, sys, et.omega);
    FourierModel E = newton::invariance_error(K, sys, et.omega);
    FourierModel etaL, etaN;
    newton::project_error(E, fb, sys, K, &etaL, &etaN);
    double nL = fourier::strip_norm(etaL, rho);
    double nN = fourier::strip_norm(etaN, rho);

    LedgerInputs in;
    in.bounds = sys.bounds;
    in.sigma.sigma_DK = 1.2 * fourier::strip_norm(geometry::tangent_jacobian(K), rho);
    in.sigma.sigma_DKT =
        1.2 * fourier::strip_norm(fourier::transpose(geometry::tangent_jacobian(K)), rho);
    in.sigma.sigma_B = 1.2 * fourier::strip_norm(fb.B, rho);
    in.sigma.sigma_N = 1.2 * fourier::strip_norm(fb.N, rho);
    in.sigma.sigma_NT = 1.2 * fourier::strip_norm(fourier::transpose(fb.N), rho);
    in.sigma.sigma_Tinv = 1.2 * fb.abs_avg_T_inv;
    in.control.mu = 0.9;  // large enough to cover the measured eta sizes
    in.control.mu_E = 0.5;
    in.control.mu_etaN = 1.0;
    in.dio = dio;
    in.n = 2;
    in.rho = rho;
    in.delta = delta;
    in.m_override = 400;
    ConstantLedger lg = assemble_tables(in);

    double gdt = dio.gamma * std::pow(delta, dio.tau);
    auto measure = [&](const FourierModel& blk) {
      return fourier::strip_norm(blk, rho - delta);
    };
    CHECK(measure(fb.Ered_LL) <=
          lg.at("C_EredLL_L") / delta * nL + lg.at("C_EredLL_N") / delta * nN);
    CHECK(measure(fb.Ered_NL) <=
          lg.at("C_EredNL_L") / delta * nL + lg.at("C_EredNL_N") / delta * nN);
    CHECK(measure(fb.Ered_NN) <=
          lg.at("C_EredNN_L") / delta * nL + lg.at("C_EredNN_N") / delta * nN);
    CHECK(measure(fb.Ered_LN) <=
          lg.at("C_EredLN_L") / delta * nL +
              lg.at("C_EredLN_N") / (gdt * delta) * nN);
  }
}
