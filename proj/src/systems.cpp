#include "kamtorus/systems.hpp"

#include <cmath>
#include <random>

namespace kamtorus::systems {

namespace {

Mat omega0(int n) {
  Mat J0 = Mat::Zero(2 * n, 2 * n);
  J0.block(0, n, n, n) = -Mat::Identity(n, n);
  J0.block(n, 0, n, n) = Mat::Identity(n, n);
  return J0;
}

void check_params(const OscillatorParams& prm, int need_n) {
  if (need_n > 0 && prm.n != need_n)
    fail(Errc::invalid_argument, "family requires n = " + std::to_string(need_n));
  if ((int)prm.a.size() != prm.n || (int)prm.b.size() != prm.n)
    fail(Errc::invalid_argument, "need one (a_i, b_i) profile per plane");
  if (prm.n < 2) fail(Errc::invalid_argument, "need at least two planes (d >= 2)");
  if (prm.domain_radius <= 0) fail(Errc::invalid_argument, "domain radius must be positive");
}

// Common polynomial core shared by both families.
struct Core {
  int n;
  std::vector<double> a, b;
  double eps;

  double hp(int i, double I) const { return a[i] + b[i] * I; }  // h_i'
  double action(const Vec& z, int i) const {
    return 0.5 * (z[i] * z[i] + z[n + i] * z[n + i]);
  }

  double H(const Vec& z) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double I = action(z, i);
      s += a[i] * I + 0.5 * b[i] * I * I;
    }
    s += eps * z[0] * z[0] * z[1] * z[1];
    return s;
  }

  Vec DH(const Vec& z) const {
    Vec g = Vec::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
      double hpi = hp(i, action(z, i));
      g[i] = hpi * z[i];
      g[n + i] = hpi * z[n + i];
    }
    g[0] += eps * 2.0 * z[0] * z[1] * z[1];
    g[1] += eps * 2.0 * z[0] * z[0] * z[1];
    return g;
  }

  Vec X_h(const Vec& z) const {
    Vec f = Vec::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
      double hpi = hp(i, action(z, i));
      f[i] = hpi * z[n + i];
      f[n + i] = -hpi * z[i];
    }
    f[n + 0] -= eps * 2.0 * z[0] * z[1] * z[1];
    f[n + 1] -= eps * 2.0 * z[0] * z[0] * z[1];
    return f;
  }

  Mat DX_h(const Vec& z) const {
    Mat m = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      double q = z[i], p = z[n + i];
      double hpi = hp(i, action(z, i));
      m(i, i) = b[i] * q * p;
      m(i, n + i) = hpi + b[i] * p * p;
      m(n + i, i) = -(hpi + b[i] * q * q);
      m(n + i, n + i) = -b[i] * q * p;
    }
    m(n + 0, 0) -= eps * 2.0 * z[1] * z[1];
    m(n + 0, 1) -= eps * 4.0 * z[0] * z[1];
    m(n + 1, 0) -= eps * 4.0 * z[0] * z[1];
    m(n + 1, 1) -= eps * 2.0 * z[0] * z[0];
    return m;
  }

  Mat D2X_h(const Vec& z, const Vec& v) const {
    Mat m = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      double q = z[i], p = z[n + i];
      double vq = v[i], vp = v[n + i];
      m(i, i) = b[i] * (vq * p + q * vp);
      m(i, n + i) = b[i] * (q * vq + 3.0 * p * vp);
      m(n + i, i) = -b[i] * (3.0 * q * vq + p * vp);
      m(n + i, n + i) = -b[i] * (vq * p + q * vp);
    }
    m(n + 0, 0) -= eps * 4.0 * z[1] * v[1];
    m(n + 0, 1) -= eps * 4.0 * (v[0] * z[1] + z[0] * v[1]);
    m(n + 1, 0) -= eps * 4.0 * (v[0] * z[1] + z[0] * v[1]);
    m(n + 1, 1) -= eps * 4.0 * z[0] * v[0];
    return m;
  }
};

void fill_common(HamiltonianSystem& sys, const OscillatorParams& prm) {
  const int n = prm.n;
  Core core{n, prm.a, prm.b, prm.eps};
  Mat J0 = omega0(n);
  Mat I2n = Mat::Identity(2 * n, 2 * n);
  Mat Ahalf = 0.5 * (-J0);  // action form a_0(z) = (1/2) [[0, I],[-I, 0]] z

  sys.H = [core](const Vec& z) { return core.H(z); };
  sys.DH = [core](const Vec& z) { return core.DH(z); };
  sys.X_h = [core](const Vec& z) { return core.X_h(z); };
  sys.DX_h = [core](const Vec& z) { return core.DX_h(z); };
  sys.D2X_h = [core](const Vec& z, const Vec& v) { return core.D2X_h(z, v); };
  sys.Omega = [J0](const Vec&) { return J0; };
  sys.Ginv_metric = [I2n](const Vec&) { return I2n; };
  sys.J = [J0](const Vec&) { return J0; };
  sys.DOmega = [n](const Vec&, const Vec&) { return Mat::Zero(2 * n, 2 * n); };
  sys.DJ = [n](const Vec&, const Vec&) { return Mat::Zero(2 * n, 2 * n); };
  sys.action_form = [Ahalf](const Vec& z) -> Vec { return Ahalf * z; };
  // Canonical triple: T_h = Omega0 (DX_h + Omega0 DX_h Omega0).
  sys.T_h = [core, J0](const Vec& z) -> Mat {
    Mat dx = core.DX_h(z);
    return J0 * (dx + J0 * dx * J0);
  };
  sys.DT_h = [core, J0](const Vec& z, const Vec& v) -> Mat {
    Mat d2 = core.D2X_h(z, v);
    return J0 * (d2 + J0 * d2 * J0);
  };

  // Coefficient majorants over the complex polydisc |z_i| <= R.
  const double R = prm.domain_radius;
  double Amax = 0.0, ABmax = 0.0, Bmax = 0.0;
  for (int i = 0; i < n; ++i) {
    double Ai = std::abs(prm.a[i]) + std::abs(prm.b[i]) * R * R;
    Amax = std::max(Amax, Ai);
    ABmax = std::max(ABmax, Ai + 2.0 * std::abs(prm.b[i]) * R * R);
    Bmax = std::max(Bmax, std::abs(prm.b[i]));
  }
  double ae = std::abs(prm.eps);
  geometry::SystemBounds& bd = sys.bounds;
  bd.c_Omega = bd.c_G = bd.c_J = bd.c_JT = 1.0;
  bd.c_DOmega = bd.c_DG = bd.c_DJ = bd.c_DJT = 0.0;
  bd.c_Xh = Amax * R + 2.0 * ae * R * R * R;
  bd.c_DXh = ABmax + 6.0 * ae * R * R;
  bd.c_DXhT = bd.c_DXh;
  bd.c_D2Xh = 6.0 * Bmax * R + 12.0 * ae * R;
  bd.c_Th = 2.0 * bd.c_DXh;
  bd.c_DTh = 2.0 * bd.c_D2Xh;
  bd.c_Xp = bd.c_XpT = bd.c_DXp = bd.c_DXpT = 0.0;
  bd.c_DPhi = 1.0;
  bd.domain_radius = R;
  bd.time_radius = prm.time_radius;
}

}  // namespace

HamiltonianSystem make_oscillator(const OscillatorParams& prm) {
  check_params(prm, 0);
  HamiltonianSystem sys;
  sys.name = "oscillator";
  sys.n = prm.n;
  sys.d = prm.n;
  fill_common(sys, prm);
  return sys;
}

HamiltonianSystem make_rotational(const OscillatorParams& prm) {
  check_params(prm, 3);
  HamiltonianSystem sys;
  sys.name = "rotational";
  sys.n = 3;
  sys.d = 2;
  fill_common(sys, prm);

  const int n = 3;
  sys.p = [n](const Vec& z) -> Vec {
    Vec v(1);
    v[0] = 0.5 * (z[2] * z[2] + z[5] * z[5]);
    return v;
  };
  sys.Dp = [n](const Vec& z) -> Mat {
    Mat m = Mat::Zero(1, 2 * n);
    m(0, 2) = z[2];
    m(0, 5) = z[5];
    return m;
  };
  sys.X_p = [n](const Vec& z) -> Mat {
    Mat m = Mat::Zero(2 * n, 1);
    m(2, 0) = z[5];
    m(5, 0) = -z[2];
    return m;
  };
  sys.DX_p = [n](const Vec&, const Vec& v) -> Mat {
    Mat m = Mat::Zero(2 * n, 1);
    m(2, 0) = v[5];
    m(5, 0) = -v[2];
    return m;
  };
  sys.Phi = [n](const Vec& s, const Vec& z) -> Vec {
    Vec out = z;
    double c = std::cos(s[0]), sn = std::sin(s[0]);
    out[2] = z[2] * c + z[5] * sn;
    out[5] = -z[2] * sn + z[5] * c;
    return out;
  };
  sys.DzPhi = [n](const Vec& s, const Vec&) -> Mat {
    Mat m = Mat::Identity(2 * n, 2 * n);
    double c = std::cos(s[0]), sn = std::sin(s[0]);
    m(2, 2) = c;
    m(2, 5) = sn;
    m(5, 2) = -sn;
    m(5, 5) = c;
    return m;
  };

  const double R = prm.domain_radius;
  geometry::SystemBounds& bd = sys.bounds;
  bd.c_Xp = R;
  bd.c_XpT = 2.0 * R;
  bd.c_DXp = 1.0;
  bd.c_DXpT = 2.0;
  bd.c_DPhi = 2.0 * std::cosh(prm.time_radius);
  return sys;
}

ExactTorus exact_torus(const HamiltonianSystem& sys, const OscillatorParams& prm,
                       const std::vector<double>& radii, const fourier::Axis& cutoff,
                       const fourier::Axis& grid) {
  const int n = sys.n, d = sys.d;
  if ((int)radii.size() != n) fail(Errc::invalid_argument, "exact_torus(): one radius per plane");
  for (double r : radii)
    if (!(r > 0)) fail(Errc::invalid_argument, "exact_torus(): radii must be positive");

  fourier::ModelSpec spec;
  spec.dim = d;
  spec.rows = 2 * n;
  spec.cols = 1;
  spec.cutoff = cutoff;
  spec.grid = grid;
  fourier::FourierModel K(spec);

  for (int i = 0; i < d; ++i) {
    fourier::ModeIndex kp{0, 0, 0}, km{0, 0, 0};
    kp[i] = 1;
    km[i] = -1;
    // q_i = r cos(2 pi theta_i), p_i = -r sin(2 pi theta_i)
    K.at(kp, i, 0) = fourier::Cplx(0.5 * radii[i], 0.0);
    K.at(km, i, 0) = fourier::Cplx(0.5 * radii[i], 0.0);
    K.at(kp, n + i, 0) = fourier::Cplx(0.0, 0.5 * radii[i]);
    K.at(km, n + i, 0) = fourier::Cplx(0.0, -0.5 * radii[i]);
  }
  fourier::ModeIndex zero{0, 0, 0};
  for (int i = d; i < n; ++i) K.at(zero, i, 0) = radii[i];  // phase (r_i, 0)

  ExactTorus out;
  out.K = std::move(K);
  out.omega.resize(d);
  for (int i = 0; i < d; ++i)
    out.omega[i] = (prm.a[i] + prm.b[i] * 0.5 * radii[i] * radii[i]) / fourier::kTwoPi;
  if (n > d) out.omega_p = prm.a[n - 1] + prm.b[n - 1] * 0.5 * radii[n - 1] * radii[n - 1];
  return out;
}

namespace {

struct DiffProbe {
  double h = 1e-5;
  double tol;
  AuditReport* report;

  void record(const std::string& name, double err) {
    AuditEntry e{name, err, err <= tol};
    if (!e.ok && report->ok) {
      report->ok = false;
      report->first_failure = name;
    }
    report->entries.push_back(e);
  }
};

double rel_err(const Mat& got, const Mat& want) {
  double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

AuditReport finite_difference_audit(const HamiltonianSystem& sys, unsigned seed, int points,
                                    double tol) {
  AuditReport report;
  DiffProbe probe{1e-5, tol, &report};
  std::mt19937_64 rng(seed);
  double ball = 0.6 * (sys.bounds.domain_radius > 0 ? sys.bounds.domain_radius : 1.0);
  std::uniform_real_distribution<double> unif(-ball, ball);
  const int dim = 2 * sys.n;

  double worst_DH = 0, worst_DXh = 0, worst_D2Xh = 0, worst_Th = 0, worst_Th_sym = 0;
  double worst_Dp = 0, worst_DXp = 0, worst_DzPhi = 0, worst_Phi0 = 0, worst_commute = 0;
  double worst_DsPhi = 0;

  for (int it = 0; it < points; ++it) {
    Vec z(dim);
    for (int i = 0; i < dim; ++i) z[i] = unif(rng);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = unif(rng) / ball;

    // DH against H, DX_h against X_h, D2X_h against DX_h (directional).
    const double h = probe.h;
    Vec zp = z + h * v, zm = z - h * v;
    double dH_fd = (sys.H(zp) - sys.H(zm)) / (2 * h);
    worst_DH = std::max(worst_DH,
                        std::abs(dH_fd - sys.DH(z).dot(v)) / std::max(1.0, std::abs(dH_fd)));
    Mat dXh_fd = (sys.X_h(zp) - sys.X_h(zm)) / (2 * h);
    worst_DXh = std::max(worst_DXh, rel_err(dXh_fd, sys.DX_h(z) * v));
    Mat d2_fd = (sys.DX_h(zp) - sys.DX_h(zm)) / (2 * h);
    worst_D2Xh = std::max(worst_D2Xh, rel_err(d2_fd, sys.D2X_h(z, v)));

    // Torsion definition and symmetry.
    Mat Th = sys.T_h(z);
    Mat Jm = sys.J(z);
    Mat def = sys.Omega(z) * (sys.DX_h(z) + sys.DJ(z, sys.X_h(z)) * Jm + Jm * sys.DX_h(z) * Jm);
    worst_Th = std::max(worst_Th, rel_err(Th, def));
    worst_Th_sym = std::max(worst_Th_sym, (Th - Th.transpose()).cwiseAbs().maxCoeff() /
                                              std::max(1.0, Th.cwiseAbs().maxCoeff()));

    if (sys.has_moment()) {
      Mat dp_fd(sys.n - sys.d, 1);
      dp_fd.col(0) = (sys.p(zp) - sys.p(zm)) / (2 * h);
      worst_Dp = std::max(worst_Dp, rel_err(dp_fd, sys.Dp(z) * v));
      Mat dxp_fd = (sys.X_p(zp) - sys.X_p(zm)) / (2 * h);
      worst_DXp = std::max(worst_DXp, rel_err(dxp_fd, sys.DX_p(z, v)));

      Vec s(sys.n - sys.d);
      for (int i = 0; i < s.size(); ++i) s[i] = unif(rng);
      Mat dphi_fd = (sys.Phi(s, zp) - sys.Phi(s, zm)) / (2 * h);
      worst_DzPhi = std::max(worst_DzPhi, rel_err(dphi_fd, sys.DzPhi(s, z) * v));
      Vec zero_s = Vec::Zero(s.size());
      worst_Phi0 =
          std::max(worst_Phi0, (sys.Phi(zero_s, z) - z).cwiseAbs().maxCoeff());
      // D_z Phi X_h = X_h o Phi and D_s Phi = X_p o Phi.
      worst_commute = std::max(
          worst_commute,
          rel_err(Mat(sys.DzPhi(s, z) * sys.X_h(z)), Mat(sys.X_h(sys.Phi(s, z)))));
      Vec sp = s, sm = s;
      sp[0] += h;
      sm[0] -= h;
      Mat dsphi_fd = (sys.Phi(sp, z) - sys.Phi(sm, z)) / (2 * h);
      worst_DsPhi = std::max(worst_DsPhi, rel_err(dsphi_fd, sys.X_p(sys.Phi(s, z)).col(0)));
    }
  }

  probe.record("DH", worst_DH);
  probe.record("DX_h", worst_DXh);
  probe.record("D2X_h", worst_D2Xh);
  probe.record("T_h", worst_Th);
  probe.record("T_h_symmetry", worst_Th_sym);
  if (sys.has_moment()) {
    probe.record("Dp", worst_Dp);
    probe.record("DX_p", worst_DXp);
    probe.record("DzPhi", worst_DzPhi);
    probe.record("Phi_identity", worst_Phi0);
    probe.record("Phi_commutation", worst_commute);
    probe.record("DsPhi", worst_DsPhi);
  }
  return report;
}

HamiltonianSystem make_system(const std::string& family, const OscillatorParams& params) {
  if (family == "oscillator") return make_oscillator(params);
  if (family == "rotational") return make_rotational(params);
  fail(Errc::config_error, "unknown system family '" + family + "'");
}

}  // namespace kamtorus::systems
