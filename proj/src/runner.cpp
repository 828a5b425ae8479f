#include "kamtorus/runner.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "kamtorus/io.hpp"

namespace kamtorus::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using fourier::Axis;
using fourier::FourierModel;

namespace {

thread_local std::string t_last_error;

json make_header() {
  auto now = std::chrono::system_clock::now();
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  // The timestamp is the only nondeterministic field; it stays isolated here.
  return json{{"tool", "kamtorus"}, {"version", "0.1.0"}, {"timestamp", secs}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_error, "cannot write '" + path + "'");
  os << j.dump(2) << "\n";
}

Axis parse_axis(const config::RunConfig& cfg, const std::string& section, const std::string& key,
                int dim, int fallback) {
  Axis a{1, 1, 1};
  std::vector<int> vs = cfg.has(section, key) ? cfg.get_ints(section, key) : std::vector<int>{};
  if (vs.empty()) vs.assign(1, fallback);
  if ((int)vs.size() == 1) vs.assign(dim, vs[0]);
  if ((int)vs.size() != dim)
    fail(Errc::config_error, "[" + section + "] " + key + ": expected 1 or " +
                                 std::to_string(dim) + " entries");
  for (int l = 0; l < dim; ++l) a[l] = vs[l];
  for (int l = dim; l < fourier::kMaxDim; ++l) a[l] = (key == "size") ? 1 : 0;
  return a;
}

double resolve_sigma(const config::RunConfig& cfg, const std::string& key, double measured,
                     bool allow_auto) {
  std::string v = cfg.get("conditions", key, "auto:1.6");
  if (v.rfind("auto", 0) == 0) {
    if (!allow_auto)
      fail(Errc::config_error, "[conditions] " + key + ": 'auto' needs a torus; give a value");
    double factor = 1.6;
    if (v.size() > 5 && v[4] == ':') factor = std::stod(v.substr(5));
    if (!(factor > 1.0))
      fail(Errc::config_error, "[conditions] " + key + ": auto factor must exceed 1");
    return factor * std::max(measured, 1e-12);
  }
  return std::stod(v);
}

json state_log(const newton::TorusState& st) {
  return json{{"iter", st.iteration},
              {"eps", st.err.value},
              {"etaL_norm", st.err.etaL_norm},
              {"etaN_norm", st.err.etaN_norm},
              {"norm_rho", st.err.rho},
              {"rho", st.rho},
              {"delta", st.delta},
              {"spectral_tail", st.composition_tail},
              {"tail_indicator", fourier::tail_indicator(st.K)},
              {"avg_etaN", st.avg_etaN_abs},
              {"omegaL_norm", fourier::strip_norm(st.bundle.Omega_L, 0.0)},
              {"esym_norm", fourier::strip_norm(st.bundle.E_sym, 0.0)},
              {"min_sv_L", st.bundle.min_singular_L},
              {"avg_T_inv_norm", st.bundle.abs_avg_T_inv},
              {"avg_T_cond",
               st.bundle.avg_T.cwiseAbs().rowwise().sum().maxCoeff() * st.bundle.abs_avg_T_inv},
              {"cond_GL", st.bundle.max_cond_GL}};
}

}  // namespace

const std::string& last_error() { return t_last_error; }

Scenario build_scenario(const RunContext& ctx) {
  const config::RunConfig& cfg = ctx.cfg;
  Scenario sc;

  const std::string family = cfg.get("system", "family", "oscillator");
  sc.params.n = cfg.get_int("system", "n", family == "rotational" ? 3 : 2);
  if (family == "rotational") sc.params.n = 3;
  sc.params.a = cfg.get_doubles("system", "a");
  sc.params.b = cfg.get_doubles("system", "b");
  sc.params.eps = cfg.get_double("system", "eps", 0.0);
  sc.params.domain_radius = cfg.get_double("system", "domain_radius", 2.5);
  sc.params.time_radius = cfg.get_double("system", "time_radius", 8.0);
  if (sc.params.a.empty()) sc.params.a.assign(sc.params.n, 1.0);
  if (sc.params.b.empty()) sc.params.b.assign(sc.params.n, 1.0);
  sc.base_sys = systems::make_system(family, sc.params);

  const int d = sc.base_sys.d;
  sc.grid = parse_axis(cfg, "grid", "size", d, 64);
  sc.cutoff = parse_axis(cfg, "grid", "cutoff", d, 16);
  sc.cert_cutoff = parse_axis(cfg, "grid", "cert_cutoff", d, 0);
  for (int l = 0; l < d; ++l)
    if (sc.cert_cutoff[l] <= 0) sc.cert_cutoff[l] = sc.cutoff[l];

  sc.radii = cfg.has("initial", "radii") ? cfg.get_doubles("initial", "radii")
                                         : std::vector<double>(sc.params.n, 1.0);
  systems::ExactTorus exact =
      systems::exact_torus(sc.base_sys, sc.params, sc.radii, sc.cutoff, sc.grid);
  sc.K0 = exact.K;

  double amp = cfg.get_double("initial", "perturb_amp", 0.0);
  if (amp > 0) {
    fourier::ModelSpec ps = sc.K0.spec();
    int pmodes = cfg.get_int("initial", "perturb_modes", std::max(2, sc.cutoff[0] / 4));
    for (int l = 0; l < d; ++l) ps.cutoff[l] = std::min(pmodes, sc.cutoff[l]);
    unsigned pseed = (unsigned)cfg.get_int("initial", "perturb_seed", int(ctx.seed));
    FourierModel noise = fourier::random_model(ps, pseed, amp, 0.4);
    sc.K0 = fourier::add(sc.K0, fourier::reshape_spec(noise, sc.cutoff, sc.grid));
  }

  // Frequency: derived from the radii unless given explicitly.
  std::string omega_str = cfg.get("diophantine", "omega", "auto");
  if (omega_str == "auto") {
    sc.omega = exact.omega;
  } else {
    std::vector<double> w = cfg.get_doubles("diophantine", "omega");
    if ((int)w.size() != d) fail(Errc::config_error, "[diophantine] omega: expected d entries");
    sc.omega = Eigen::Map<Eigen::VectorXd>(w.data(), d);
  }

  double tau = cfg.get_double("diophantine", "tau", double(d - 1));
  int kmax = cfg.get_int("diophantine", "kmax", 2048);
  std::string gamma_str = cfg.get("diophantine", "gamma", "auto");
  double gamma;
  if (gamma_str == "auto") {
    fourier::DiophantineCheck probe = fourier::verify_diophantine(sc.omega, 1e-300, tau, kmax);
    if (probe.resonance)
      fail(Errc::config_error, "frequency is resonant on the checked range (ergodicity failure)");
    gamma = 0.99 * probe.best_gamma;
  } else {
    gamma = std::stod(gamma_str);
  }
  fourier::DiophantineCheck check = fourier::verify_diophantine(sc.omega, gamma, tau, kmax);
  if (check.resonance)
    fail(Errc::config_error, "frequency is resonant on the checked range (ergodicity failure)");
  if (!check.ok)
    fail(Errc::config_error,
         "Diophantine check failed: largest admissible gamma on |k|_1 <= " +
             std::to_string(kmax) + " is " + std::to_string(check.best_gamma));
  sc.dio = check.data;

  double rho = cfg.get_double("strips", "rho", 0.1);
  double rho_inf = cfg.get_double("strips", "rho_inf", 0.04);
  std::string delta_str = cfg.get("strips", "delta", "auto");
  double delta = (delta_str == "auto") ? (rho - rho_inf) / 6.0 : std::stod(delta_str);
  sc.schedule = fourier::make_schedule(rho, rho_inf, delta);

  sc.solve_opt.max_iter = cfg.get_int("solve", "max_iter", 12);
  sc.solve_opt.tol = cfg.get_double("solve", "tol", 1e-11);
  sc.solve_opt.solver_rho = cfg.get_double("solve", "solver_rho", 0.0);
  std::string rule = cfg.get("solve", "update", "modified");
  if (rule == "modified")
    sc.solve_opt.rule = newton::UpdateRule::modified;
  else if (rule == "classical")
    sc.solve_opt.rule = newton::UpdateRule::classical;
  else
    fail(Errc::config_error, "[solve] update: expected 'modified' or 'classical'");

  sc.control.mu = cfg.get_double("control", "mu", 0.1);
  sc.control.mu_E = cfg.get_double("control", "mu_e", 0.5);
  sc.control.mu_etaN = cfg.get_double("control", "mu_etan", 1.0);

  std::string rmode = cfg.get("russmann", "mode", "sharp");
  if (rmode == "sharp")
    sc.russmann_mode = cert::RussmannMode::sharp;
  else if (rmode == "uniform")
    sc.russmann_mode = cert::RussmannMode::uniform;
  else
    fail(Errc::config_error, "[russmann] mode: expected 'sharp' or 'uniform'");
  std::string mval = cfg.get("russmann", "m", "auto");
  sc.russmann_m = (mval == "auto") ? 0 : std::stoi(mval);

  // Moment systems are solved in the discounted field.
  if (sc.base_sys.has_moment()) {
    std::string wp = cfg.get("lift", "omega_p", "auto");
    sc.omega_p = (wp == "auto") ? exact.omega_p : std::stod(wp);
    Eigen::VectorXd wpv(1);
    wpv[0] = sc.omega_p;
    sc.solve_sys = geometry::discounted(sc.base_sys, wpv);
    sc.discounted = true;
  } else {
    sc.solve_sys = sc.base_sys;
  }
  return sc;
}

namespace {

json scenario_echo(const Scenario& sc) {
  json j;
  j["system"] = sc.base_sys.name;
  j["n"] = sc.base_sys.n;
  j["d"] = sc.base_sys.d;
  j["eps"] = sc.params.eps;
  j["radii"] = sc.radii;
  j["omega"] = std::vector<double>(sc.omega.data(), sc.omega.data() + sc.omega.size());
  if (sc.discounted) j["omega_p"] = sc.omega_p;
  j["gamma"] = sc.dio.gamma;
  j["tau"] = sc.dio.tau;
  j["kmax"] = sc.dio.checked_cutoff;
  j["rho"] = sc.schedule.rho0;
  j["rho_inf"] = sc.schedule.rho_inf;
  j["delta"] = sc.schedule.delta0;
  j["ratio_a"] = sc.schedule.ratio_a;
  j["cutoff"] = std::vector<int>(sc.cutoff.begin(), sc.cutoff.begin() + sc.base_sys.d);
  j["grid"] = std::vector<int>(sc.grid.begin(), sc.grid.begin() + sc.base_sys.d);
  j["update"] = sc.solve_opt.rule == newton::UpdateRule::modified ? "modified" : "classical";
  j["tol"] = sc.solve_opt.tol;
  return j;
}

}  // namespace

int cmd_solve(const RunContext& ctx) {
  Scenario sc = build_scenario(ctx);
  fs::create_directories(ctx.out_dir);

  newton::SolveResult res =
      newton::iterate(sc.K0, sc.solve_sys, sc.omega, sc.dio, sc.schedule, sc.solve_opt);

  std::ofstream log(ctx.out_dir + "/iterations.jsonl");
  for (const newton::TorusState& st : res.states) log << state_log(st).dump() << "\n";
  log.close();

  const newton::TorusState& last = res.states.back();
  // Best state by weighted error; the artifact of record on divergence.
  size_t best = 0;
  for (size_t i = 1; i < res.states.size(); ++i)
    if (res.states[i].err.value < res.states[best].err.value) best = i;
  io::save_fmd(res.states[best].K, ctx.out_dir + "/torus.fmd");
  io::save_csv(res.states[best].K, ctx.out_dir + "/torus.csv");
  if (ctx.cfg.get_bool("solve", "save_iterates", false))
    for (size_t i = 0; i < res.states.size(); ++i)
      io::save_fmd(res.states[i].K, ctx.out_dir + "/torus_iter_" + std::to_string(i) + ".fmd");

  std::vector<double> eps_seq;
  for (const auto& st : res.states) eps_seq.push_back(st.err.value);

  json summary;
  summary["header"] = make_header();
  summary["config"] = scenario_echo(sc);
  summary["verdict"] = res.verdict == newton::Verdict::converged
                           ? "converged"
                           : (res.verdict == newton::Verdict::diverged ? "diverged" : "exhausted");
  summary["message"] = res.message;
  summary["iterations"] = res.iterations;
  summary["eps_sequence"] = eps_seq;
  summary["fitted_order"] = newton::fitted_order(eps_seq, sc.solve_opt.tol);
  summary["final_eps"] = last.err.value;
  summary["final_etaL"] = last.err.etaL_norm;
  summary["final_etaN"] = last.err.etaN_norm;
  summary["best_iteration"] = best;
  summary["artifacts"] = json{{"torus", "torus.fmd"}, {"log", "iterations.jsonl"}};
  write_json(summary, ctx.out_dir + "/summary.json");

  if (res.verdict == newton::Verdict::converged) return kExitOk;
  t_last_error = res.message.empty() ? "solver did not converge" : res.message;
  return kExitDiverged;
}

namespace {

struct CertPrep {
  cert::TorusMeasurement meas;
  cert::LedgerInputs inputs;
  cert::ConstantLedger ledger;
  cert::FinalConstants fc;
};

CertPrep prepare_certificate(const Scenario& sc, const RunContext& ctx, const FourierModel& K) {
  CertPrep prep;
  prep.meas = cert::measure_torus(K, sc.solve_sys, sc.omega, sc.schedule.rho0, sc.cert_cutoff);

  cert::ConditionNumbers sig;
  sig.sigma_DK = resolve_sigma(ctx.cfg, "sigma_dk", prep.meas.norm_DK, true);
  sig.sigma_DKT = resolve_sigma(ctx.cfg, "sigma_dkt", prep.meas.norm_DKT, true);
  sig.sigma_B = resolve_sigma(ctx.cfg, "sigma_b", prep.meas.norm_B, true);
  sig.sigma_N = resolve_sigma(ctx.cfg, "sigma_n", prep.meas.norm_N, true);
  sig.sigma_NT = resolve_sigma(ctx.cfg, "sigma_nt", prep.meas.norm_NT, true);
  sig.sigma_Tinv = resolve_sigma(ctx.cfg, "sigma_tinv", prep.meas.abs_avg_T_inv, true);

  prep.inputs.bounds = sc.solve_sys.bounds;
  prep.inputs.sigma = sig;
  prep.inputs.control = sc.control;
  prep.inputs.dio = sc.dio;
  prep.inputs.n = sc.solve_sys.n;
  prep.inputs.rho = sc.schedule.rho0;
  prep.inputs.delta = sc.schedule.delta0;
  prep.inputs.russmann_mode = sc.russmann_mode;
  prep.inputs.m_override = sc.russmann_m;

  prep.ledger = cert::assemble_tables(prep.inputs);
  prep.fc = cert::final_constants(prep.ledger, prep.inputs, sc.schedule, prep.meas);
  return prep;
}

json ledger_json(const cert::ConstantLedger& lg) {
  json entries = json::array();
  for (const auto& e : lg.entries)
    entries.push_back(json{{"label", e.label}, {"value", e.value}, {"deps", e.deps}});
  return entries;
}

std::vector<std::string> sigma_warnings(const cert::LedgerInputs& in) {
  // The user-supplied sigmas are authoritative; the derived frame bounds
  // sigma_N >= c_J sigma_L sigma_B and sigma_NT >= sigma_B sigma_LT c_JT are
  // only advisory.
  std::vector<std::string> w;
  double derived_N = in.bounds.c_J * in.sigma.sigma_L(in.bounds) * in.sigma.sigma_B;
  double derived_NT = in.sigma.sigma_B * in.sigma.sigma_LT(in.bounds) * in.bounds.c_JT;
  if (in.sigma.sigma_N < derived_N)
    w.push_back("sigma_N below the derived frame bound c_J sigma_L sigma_B = " +
                std::to_string(derived_N));
  if (in.sigma.sigma_NT < derived_NT)
    w.push_back("sigma_NT below the derived frame bound sigma_B sigma_LT c_JT = " +
                std::to_string(derived_NT));
  return w;
}

json report_json(const cert::KamReport& rep, const cert::TorusMeasurement& meas) {
  json j;
  j["epsilon"] = rep.epsilon;
  j["condition_value"] = rep.condition_value;
  j["pass"] = rep.pass;
  j["binding_term"] = rep.binding_term;
  json terms = json::array();
  for (const auto& t : rep.final_constants.terms)
    terms.push_back(json{{"label", t.label}, {"value", t.value}});
  j["inner_terms"] = terms;
  j["C_theoE"] = rep.final_constants.C_theoE;
  j["Q_hat"] = rep.final_constants.Q_hat;
  j["a"] = rep.final_constants.a;
  j["radii"] = json{{"K", rep.radius_K},         {"DK", rep.radius_DK}, {"DKT", rep.radius_DKT},
                    {"B", rep.radius_B},         {"N", rep.radius_N},   {"NT", rep.radius_NT},
                    {"avg_T_inv", rep.radius_iT}};
  j["measured"] = json{{"rho", meas.rho},
                       {"etaL_norm", meas.etaL_norm},
                       {"etaN_norm", meas.etaN_norm},
                       {"norm_DK", meas.norm_DK},
                       {"norm_DKT", meas.norm_DKT},
                       {"norm_B", meas.norm_B},
                       {"norm_N", meas.norm_N},
                       {"norm_NT", meas.norm_NT},
                       {"abs_avg_T_inv", meas.abs_avg_T_inv},
                       {"norm_K", meas.norm_K},
                       {"dist_boundary", meas.dist_boundary},
                       {"truncation_tail_K", meas.tail_K}};
  j["caveat"] =
      "floating-point evaluation; norms are exact sums over truncated coefficients, not "
      "directed-rounding enclosures";
  return j;
}

}  // namespace

int cmd_certify(const RunContext& ctx, const std::string& torus_path) {
  Scenario sc = build_scenario(ctx);
  fs::create_directories(ctx.out_dir);
  FourierModel K = io::load_model(torus_path);

  CertPrep prep;
  try {
    prep = prepare_certificate(sc, ctx, K);
  } catch (const Error& e) {
    if (e.code() == Errc::h2_violation) {
      t_last_error = e.what();
      json j;
      j["header"] = make_header();
      j["config"] = scenario_echo(sc);
      j["error"] = e.what();
      write_json(j, ctx.out_dir + "/report.json");
      return kExitConfigError;
    }
    throw;
  }
  cert::KamReport rep = cert::check_kam(prep.meas, prep.ledger, prep.fc, prep.inputs);

  json j;
  j["header"] = make_header();
  j["config"] = scenario_echo(sc);
  j["report"] = report_json(rep, prep.meas);
  j["warnings"] = sigma_warnings(prep.inputs);
  j["ledger"] = ledger_json(prep.ledger);
  write_json(j, ctx.out_dir + "/report.json");

  if (rep.pass) return kExitOk;
  t_last_error = "KAM condition failed; binding term: " + rep.binding_term;
  return kExitCertifyFail;
}

int cmd_lift(const RunContext& ctx, const std::string& torus_path) {
  Scenario sc = build_scenario(ctx);
  if (!sc.base_sys.has_moment())
    fail(Errc::config_error, "lift requires a system with first integrals (family rotational)");
  fs::create_directories(ctx.out_dir);
  FourierModel K = io::load_model(torus_path);

  int s_points = ctx.cfg.get_int("lift", "s_points", 32);
  double s_span = ctx.cfg.get_double("lift", "s_span", fourier::kTwoPi);
  std::vector<double> s_grid(s_points);
  for (int i = 0; i < s_points; ++i) s_grid[i] = s_span * i / s_points;

  geometry::LiftSpec spec;
  spec.omega_p = Eigen::VectorXd::Constant(1, sc.omega_p);
  geometry::LiftResult res = geometry::lift_cylinder(K, sc.base_sys, spec, sc.omega, s_grid);

  json j;
  j["header"] = make_header();
  j["config"] = scenario_echo(sc);
  j["residual_inf"] = res.residual_inf;
  j["p_constancy"] = res.p_constancy;
  j["p0"] = std::vector<double>(res.p0.data(), res.p0.data() + res.p0.size());
  j["s_points"] = s_points;
  j["s_span"] = s_span;
  write_json(j, ctx.out_dir + "/lift.json");

  std::ofstream slices(ctx.out_dir + "/lift_slices.csv");
  slices << "s,node";
  for (int r = 0; r < 2 * sc.base_sys.n; ++r) slices << ",z" << (r + 1);
  slices << "\n";
  slices.precision(17);
  for (size_t si = 0; si < res.slices.size(); ++si) {
    const auto& g = res.slices[si];
    for (long i = 0; i < g.node_count(); ++i) {
      slices << res.s_values[si] << "," << i;
      for (int r = 0; r < g.rows; ++r) slices << "," << g.node(i)[r];
      slices << "\n";
    }
  }
  return kExitOk;
}

int cmd_constants(const RunContext& ctx) {
  Scenario sc = build_scenario(ctx);
  fs::create_directories(ctx.out_dir);

  cert::ConditionNumbers sig;
  sig.sigma_DK = resolve_sigma(ctx.cfg, "sigma_dk", 0, false);
  sig.sigma_DKT = resolve_sigma(ctx.cfg, "sigma_dkt", 0, false);
  sig.sigma_B = resolve_sigma(ctx.cfg, "sigma_b", 0, false);
  sig.sigma_N = resolve_sigma(ctx.cfg, "sigma_n", 0, false);
  sig.sigma_NT = resolve_sigma(ctx.cfg, "sigma_nt", 0, false);
  sig.sigma_Tinv = resolve_sigma(ctx.cfg, "sigma_tinv", 0, false);

  cert::LedgerInputs in;
  in.bounds = sc.solve_sys.bounds;
  in.sigma = sig;
  in.control = sc.control;
  in.dio = sc.dio;
  in.n = sc.solve_sys.n;
  in.rho = sc.schedule.rho0;
  in.delta = sc.schedule.delta0;
  in.russmann_mode = sc.russmann_mode;
  in.m_override = sc.russmann_m;
  cert::ConstantLedger lg = cert::assemble_tables(in);

  const double tau = in.dio.tau;
  const double muE = in.control.mu_E;
  double a = sc.schedule.ratio_a;
  json j;
  j["header"] = make_header();
  j["config"] = scenario_echo(sc);
  j["ledger"] = ledger_json(lg);
  j["final"] = json{{"a", a},
                    {"Q_hat", std::max(lg.at("Q_etanL"), std::pow(a, tau) * lg.at("Q_etanN"))},
                    {"Cstar_DeltaK", a / (a - muE) * lg.at("C_DeltaKn")},
                    {"Cstar_DeltaDK", 1.0 / (1.0 - muE) * lg.at("C_DeltaDKn")},
                    {"Cstar_DeltaDKT", 1.0 / (1.0 - muE) * lg.at("C_DeltaDKnT")},
                    {"Cstar_DeltaB", 1.0 / (1.0 - muE) * lg.at("C_DeltaBn")},
                    {"Cstar_DeltaN", 1.0 / (1.0 - muE) * lg.at("C_DeltaNn")},
                    {"Cstar_DeltaNT", 1.0 / (1.0 - muE) * lg.at("C_DeltaNnT")},
                    {"Cstar_DeltaiT", 1.0 / (1.0 - muE) * lg.at("C_DeltaiTn")}};
  write_json(j, ctx.out_dir + "/constants.json");
  return kExitOk;
}

int cmd_bench(const RunContext& ctx) {
  Scenario base = build_scenario(ctx);
  fs::create_directories(ctx.out_dir);

  std::vector<double> eps_values;
  if (ctx.cfg.has("bench", "eps_values")) eps_values = ctx.cfg.get_doubles("bench", "eps_values");

  struct Row {
    double eps;
    std::string rule;
    std::string verdict;
    int iterations;
    double final_eps;
    bool certified = false;
    double condition_value = std::numeric_limits<double>::quiet_NaN();
  };
  struct Task {
    double eps;
    newton::UpdateRule rule;
  };
  std::vector<Task> tasks;
  for (double e : eps_values) {
    tasks.push_back({e, newton::UpdateRule::modified});
    tasks.push_back({e, newton::UpdateRule::classical});
  }
  std::vector<Row> rows(tasks.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      RunContext sub = ctx;
      sub.cfg.set("system", "eps", std::to_string(tasks[i].eps));
      sub.cfg.set("solve", "update",
                  tasks[i].rule == newton::UpdateRule::modified ? "modified" : "classical");
      Row row;
      row.eps = tasks[i].eps;
      row.rule = tasks[i].rule == newton::UpdateRule::modified ? "modified" : "classical";
      try {
        Scenario sc = build_scenario(sub);
        newton::SolveResult res =
            newton::iterate(sc.K0, sc.solve_sys, sc.omega, sc.dio, sc.schedule, sc.solve_opt);
        row.verdict = res.verdict == newton::Verdict::converged
                          ? "converged"
                          : (res.verdict == newton::Verdict::diverged ? "diverged" : "exhausted");
        row.iterations = res.iterations;
        row.final_eps = res.states.back().err.value;
        if (res.verdict == newton::Verdict::converged) {
          try {
            size_t best = 0;
            for (size_t k = 1; k < res.states.size(); ++k)
              if (res.states[k].err.value < res.states[best].err.value) best = k;
            CertPrep prep = prepare_certificate(sc, sub, res.states[best].K);
            cert::KamReport rep = cert::check_kam(prep.meas, prep.ledger, prep.fc, prep.inputs);
            row.certified = rep.pass;
            row.condition_value = rep.condition_value;
          } catch (const Error&) {
            row.certified = false;
          }
        }
      } catch (const Error& e) {
        row.verdict = std::string("error:") + errc_name(e.code());
        row.iterations = 0;
        row.final_eps = std::numeric_limits<double>::quiet_NaN();
      }
      rows[i] = row;
    }
  };
  int nthreads = std::max(1, ctx.threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  {
    std::ofstream csv(ctx.out_dir + "/bench.csv");
    csv << "eps,rule,verdict,iterations,final_eps,certified,condition_value\n";
    csv.precision(17);
    for (const Row& r : rows)
      csv << r.eps << "," << r.rule << "," << r.verdict << "," << r.iterations << ","
          << r.final_eps << "," << (r.certified ? 1 : 0) << "," << r.condition_value << "\n";
  }

  // Bite scan: a/delta over (0, (rho - rho_inf)/3).
  int steps = ctx.cfg.get_int("bench", "delta_scan_steps", 60);
  double rho = base.schedule.rho0, rho_inf = base.schedule.rho_inf;
  double width = (rho - rho_inf) / 3.0;
  double best_ratio = std::numeric_limits<double>::infinity();
  double best_delta = 0.0;
  {
    std::ofstream csv(ctx.out_dir + "/delta_scan.csv");
    csv << "delta,ratio_a,a_over_delta\n";
    csv.precision(17);
    for (int i = 1; i <= steps; ++i) {
      double delta = width * i / (steps + 1);
      double a = (rho - rho_inf) / (rho - 3 * delta - rho_inf);
      csv << delta << "," << a << "," << a / delta << "\n";
      if (a / delta < best_ratio) {
        best_ratio = a / delta;
        best_delta = delta;
      }
    }
  }

  double mod_best = 0.0, cls_best = 0.0, mod_cert = 0.0, cls_cert = 0.0;
  for (const Row& r : rows)
    if (r.verdict == "converged") {
      if (r.rule == "modified") mod_best = std::max(mod_best, r.eps);
      if (r.rule == "classical") cls_best = std::max(cls_best, r.eps);
      if (r.certified && r.rule == "modified") mod_cert = std::max(mod_cert, r.eps);
      if (r.certified && r.rule == "classical") cls_cert = std::max(cls_cert, r.eps);
    }

  json j;
  j["header"] = make_header();
  j["config"] = scenario_echo(base);
  j["eps_values"] = eps_values;
  j["max_convergent_eps"] = json{{"modified", mod_best}, {"classical", cls_best}};
  j["max_certifiable_eps"] = json{{"modified", mod_cert}, {"classical", cls_cert}};
  j["delta_scan"] = json{{"steps", steps},
                         {"best_delta", best_delta},
                         {"optimal_delta", (rho - rho_inf) / 6.0},
                         {"grid_step", width / (steps + 1)}};
  write_json(j, ctx.out_dir + "/bench_summary.json");
  return kExitOk;
}

int run_command(const std::string& command, const RunContext& ctx, const std::string& torus_path) {
  try {
    if (command == "solve") return cmd_solve(ctx);
    if (command == "certify") return cmd_certify(ctx, torus_path);
    if (command == "lift") return cmd_lift(ctx, torus_path);
    if (command == "bench") return cmd_bench(ctx);
    if (command == "constants") return cmd_constants(ctx);
    t_last_error = "unknown command '" + command + "'";
    return kExitConfigError;
  } catch (const Error& e) {
    t_last_error = e.what();
    return kExitConfigError;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return kExitConfigError;
  }
}

}  // namespace kamtorus::runner
