#include "kamtorus/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <random>

namespace kamtorus::fourier {

namespace {

// FFTW planning is not reentrant; plans are cached per (shape, sign) and
// executed through the new-array interface on caller-owned buffers.
std::mutex g_fftw_mutex;

fftw_plan plan_for(const Axis& n, int dim, int sign, Cplx* buf) {
  static std::map<std::array<int, kMaxDim + 1>, fftw_plan> cache;
  std::array<int, kMaxDim + 1> key{n[0], n[1], n[2], sign};
  std::lock_guard<std::mutex> lock(g_fftw_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int dims[kMaxDim];
  for (int l = 0; l < dim; ++l) dims[l] = n[l];
  fftw_plan p = fftw_plan_dft(dim, dims, reinterpret_cast<fftw_complex*>(buf),
                              reinterpret_cast<fftw_complex*>(buf), sign,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, p);
  return p;
}

void fft_nd(std::vector<Cplx>& data, const Axis& n, int dim, int sign) {
  fftw_plan p = plan_for(n, dim, sign, data.data());
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()),
                   reinterpret_cast<fftw_complex*>(data.data()));
}

long total_nodes(const Axis& grid, int dim) {
  long t = 1;
  for (int l = 0; l < dim; ++l) t *= grid[l];
  return t;
}

void check_spec(const ModelSpec& s) {
  if (s.dim < 1 || s.dim > kMaxDim) fail(Errc::invalid_argument, "torus dimension must be 1..3");
  if (s.rows < 1 || s.cols < 1) fail(Errc::invalid_argument, "value shape must be positive");
  for (int l = 0; l < s.dim; ++l) {
    if (s.cutoff[l] < 0) fail(Errc::invalid_argument, "negative cutoff");
    if (!is_power_of_two(s.grid[l])) fail(Errc::invalid_argument, "grid sizes must be powers of two");
    if (2 * s.cutoff[l] + 1 > s.grid[l])
      fail(Errc::invalid_argument, "cutoff too large for grid (need 2M+1 <= N)");
  }
}

int l1_of(const ModeIndex& k, int dim) {
  int s = 0;
  for (int l = 0; l < dim; ++l) s += std::abs(k[l]);
  return s;
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

Axis padded_grid_for(const Axis& cutoff, int dim) {
  Axis g{1, 1, 1};
  for (int l = 0; l < dim; ++l) g[l] = next_pow2(2 * cutoff[l] + 1);
  return g;
}

std::array<double, kMaxDim> GridData::theta(long idx) const {
  std::array<double, kMaxDim> th{0.0, 0.0, 0.0};
  for (int l = dim - 1; l >= 0; --l) {
    th[l] = double(idx % grid[l]) / double(grid[l]);
    idx /= grid[l];
  }
  return th;
}

FourierModel::FourierModel(const ModelSpec& spec) : spec_(spec) {
  check_spec(spec_);
  for (int l = spec_.dim; l < kMaxDim; ++l) {
    spec_.cutoff[l] = 0;
    spec_.grid[l] = 1;
  }
  coef_.assign(mode_count() * spec_.rows * spec_.cols, Cplx(0.0, 0.0));
}

long FourierModel::mode_count() const {
  long t = 1;
  for (int l = 0; l < kMaxDim; ++l) t *= 2 * spec_.cutoff[l] + 1;
  return t;
}

int FourierModel::box_l1_max() const {
  int s = 0;
  for (int l = 0; l < spec_.dim; ++l) s += spec_.cutoff[l];
  return s;
}

long FourierModel::flat_of(const ModeIndex& k) const {
  long f = 0;
  for (int l = 0; l < kMaxDim; ++l) {
    int b = 2 * spec_.cutoff[l] + 1;
    int m = k[l] + spec_.cutoff[l];
    if (m < 0 || m >= b) fail(Errc::invalid_argument, "mode index outside cutoff box");
    f = f * b + m;
  }
  return f;
}

ModeIndex FourierModel::mode_of(long flat) const {
  ModeIndex k{0, 0, 0};
  for (int l = kMaxDim - 1; l >= 0; --l) {
    int b = 2 * spec_.cutoff[l] + 1;
    k[l] = int(flat % b) - spec_.cutoff[l];
    flat /= b;
  }
  return k;
}

Cplx& FourierModel::at(const ModeIndex& k, int r, int c) {
  return coef_[(flat_of(k) * spec_.rows + r) * spec_.cols + c];
}

const Cplx& FourierModel::at(const ModeIndex& k, int r, int c) const {
  return coef_[(flat_of(k) * spec_.rows + r) * spec_.cols + c];
}

Eigen::MatrixXd FourierModel::average() const {
  Eigen::MatrixXd out(spec_.rows, spec_.cols);
  ModeIndex zero{0, 0, 0};
  for (int r = 0; r < spec_.rows; ++r)
    for (int c = 0; c < spec_.cols; ++c) out(r, c) = at(zero, r, c).real();
  return out;
}

void FourierModel::enforce_real_symmetry() {
  long nm = mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = mode_of(f);
    ModeIndex nk{-k[0], -k[1], -k[2]};
    long g = flat_of(nk);
    if (g < f) continue;
    for (int r = 0; r < spec_.rows; ++r)
      for (int c = 0; c < spec_.cols; ++c) {
        Cplx a = at_flat(f, r, c);
        Cplx b = at_flat(g, r, c);
        Cplx avg = 0.5 * (a + std::conj(b));
        at_flat(f, r, c) = avg;
        at_flat(g, r, c) = std::conj(avg);
      }
  }
}

double FourierModel::real_symmetry_defect() const {
  double worst = 0.0;
  long nm = mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = mode_of(f);
    ModeIndex nk{-k[0], -k[1], -k[2]};
    long g = flat_of(nk);
    for (int r = 0; r < spec_.rows; ++r)
      for (int c = 0; c < spec_.cols; ++c)
        worst = std::max(worst, std::abs(at_flat(g, r, c) - std::conj(at_flat(f, r, c))));
  }
  return worst;
}

FourierModel zeros(const ModelSpec& spec) { return FourierModel(spec); }

FourierModel constant(const ModelSpec& spec, const Eigen::MatrixXd& value) {
  if (value.rows() != spec.rows || value.cols() != spec.cols)
    fail(Errc::shape_mismatch, "constant(): value shape mismatch");
  FourierModel m(spec);
  ModeIndex zero{0, 0, 0};
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) m.at(zero, r, c) = value(r, c);
  return m;
}

FourierModel identity(const ModelSpec& spec_like, int size) {
  ModelSpec s = spec_like;
  s.rows = s.cols = size;
  s.cutoff = Axis{0, 0, 0};
  s.grid = Axis{1, 1, 1};
  s.dim = spec_like.dim;
  for (int l = 0; l < s.dim; ++l) s.grid[l] = 1;
  return constant(s, Eigen::MatrixXd::Identity(size, size));
}

FourierModel analyze(const GridData& samples, const Axis& cutoff) {
  ModelSpec spec;
  spec.dim = samples.dim;
  spec.rows = samples.rows;
  spec.cols = samples.cols;
  spec.cutoff = cutoff;
  spec.grid = samples.grid;
  FourierModel out(spec);

  long ntot = total_nodes(samples.grid, samples.dim);
  if ((long)samples.values.size() != ntot * samples.rows * samples.cols)
    fail(Errc::shape_mismatch, "analyze(): sample buffer size mismatch");

  std::vector<Cplx> buf(ntot);
  long nm = out.mode_count();
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      for (long i = 0; i < ntot; ++i) buf[i] = Cplx(samples.values[i * spec.rows * spec.cols + r * spec.cols + c], 0.0);
      fft_nd(buf, samples.grid, spec.dim, FFTW_FORWARD);
      double inv = 1.0 / double(ntot);
      for (long f = 0; f < nm; ++f) {
        ModeIndex k = out.mode_of(f);
        long bin = 0;
        for (int l = 0; l < spec.dim; ++l) {
          int kk = k[l] >= 0 ? k[l] : k[l] + spec.grid[l];
          bin = bin * spec.grid[l] + kk;
        }
        out.at_flat(f, r, c) = buf[bin] * inv;
      }
    }
  out.enforce_real_symmetry();
  return out;
}

GridData to_grid(const FourierModel& m, const Axis& grid, double* imag_max) {
  const ModelSpec& s = m.spec();
  for (int l = 0; l < s.dim; ++l) {
    if (!is_power_of_two(grid[l])) fail(Errc::invalid_argument, "to_grid(): grid must be power of two");
    if (2 * s.cutoff[l] + 1 > grid[l]) fail(Errc::invalid_argument, "to_grid(): grid too small for cutoff");
  }
  GridData out;
  out.dim = s.dim;
  out.rows = s.rows;
  out.cols = s.cols;
  out.grid = grid;
  for (int l = s.dim; l < kMaxDim; ++l) out.grid[l] = 1;
  long ntot = total_nodes(out.grid, s.dim);
  out.values.assign(ntot * s.rows * s.cols, 0.0);

  double worst_imag = 0.0;
  std::vector<Cplx> buf(ntot);
  long nm = m.mode_count();
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      std::fill(buf.begin(), buf.end(), Cplx(0.0, 0.0));
      for (long f = 0; f < nm; ++f) {
        ModeIndex k = m.mode_of(f);
        long bin = 0;
        for (int l = 0; l < s.dim; ++l) {
          int kk = k[l] >= 0 ? k[l] : k[l] + grid[l];
          bin = bin * grid[l] + kk;
        }
        buf[bin] += m.at_flat(f, r, c);
      }
      fft_nd(buf, out.grid, s.dim, FFTW_BACKWARD);
      for (long i = 0; i < ntot; ++i) {
        out.values[i * s.rows * s.cols + r * s.cols + c] = buf[i].real();
        worst_imag = std::max(worst_imag, std::abs(buf[i].imag()));
      }
    }
  if (imag_max) *imag_max = worst_imag;
  return out;
}

Eigen::MatrixXd synthesize_at(const FourierModel& m, const std::array<double, kMaxDim>& point) {
  const ModelSpec& s = m.spec();
  // Per-axis phase tables e^{2 pi i k_l theta_l}, k_l = -M..M.
  std::array<std::vector<Cplx>, kMaxDim> phases;
  for (int l = 0; l < s.dim; ++l) {
    int M = s.cutoff[l];
    phases[l].resize(2 * M + 1);
    Cplx w = std::polar(1.0, kTwoPi * point[l]);
    Cplx cur(1.0, 0.0);
    phases[l][M] = cur;
    for (int k = 1; k <= M; ++k) {
      cur *= w;
      phases[l][M + k] = cur;
      phases[l][M - k] = std::conj(cur);
    }
  }
  for (int l = s.dim; l < kMaxDim; ++l) phases[l] = {Cplx(1.0, 0.0)};

  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s.rows, s.cols);
  long nm = m.mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    Cplx ph(1.0, 0.0);
    for (int l = 0; l < s.dim; ++l) ph *= phases[l][k[l] + s.cutoff[l]];
    for (int r = 0; r < s.rows; ++r)
      for (int c = 0; c < s.cols; ++c) acc(r, c) += m.at_flat(f, r, c) * ph;
  }
  return acc.real();
}

std::vector<Eigen::MatrixXd> synthesize(const FourierModel& m,
                                        const std::vector<std::array<double, kMaxDim>>& points) {
  if (m.empty()) fail(Errc::invalid_argument, "synthesize(): empty model");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(synthesize_at(m, p));
  return out;
}

FourierModel derivative(const FourierModel& m, int axis) {
  if (axis < 0 || axis >= m.dim()) fail(Errc::invalid_argument, "derivative(): bad axis");
  FourierModel out = m;
  long nm = m.mode_count();
  int rc = m.rows() * m.cols();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    Cplx factor(0.0, kTwoPi * k[axis]);
    for (int e = 0; e < rc; ++e) out.data()[f * rc + e] = m.data()[f * rc + e] * factor;
  }
  return out;
}

FourierModel lie_derivative(const FourierModel& m, const Eigen::VectorXd& omega) {
  if (omega.size() != m.dim()) fail(Errc::shape_mismatch, "lie_derivative(): omega dimension");
  FourierModel out = m;
  long nm = m.mode_count();
  int rc = m.rows() * m.cols();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    double kw = 0.0;
    for (int l = 0; l < m.dim(); ++l) kw += k[l] * omega[l];
    Cplx factor(0.0, -kTwoPi * kw);
    for (int e = 0; e < rc; ++e) out.data()[f * rc + e] = m.data()[f * rc + e] * factor;
  }
  return out;
}

DiophantineCheck verify_diophantine(const Eigen::VectorXd& omega, double gamma, double tau,
                                    int kmax) {
  int d = int(omega.size());
  if (d < 1 || d > kMaxDim) fail(Errc::invalid_argument, "verify_diophantine(): dimension");
  if (gamma <= 0 || kmax < 1) fail(Errc::invalid_argument, "verify_diophantine(): gamma/kmax");
  if (tau < d - 1) fail(Errc::invalid_argument, "verify_diophantine(): tau < d-1");

  DiophantineCheck res;
  res.best_gamma = std::numeric_limits<double>::infinity();
  res.worst_value = std::numeric_limits<double>::infinity();

  // Scan canonical representatives (first nonzero component positive);
  // |k.omega| is even under k -> -k.
  Axis lo{0, 0, 0}, hi{0, 0, 0};
  for (int l = 0; l < d; ++l) {
    lo[l] = -kmax;
    hi[l] = kmax;
  }
  ModeIndex k{0, 0, 0};
  for (k[0] = 0; k[0] <= hi[0]; ++k[0]) {
    int rem0 = kmax - std::abs(k[0]);
    int lo1 = (d >= 2) ? ((k[0] == 0) ? 0 : -rem0) : 0;
    int hi1 = (d >= 2) ? rem0 : 0;
    for (k[1] = lo1; k[1] <= hi1; ++k[1]) {
      int rem1 = rem0 - std::abs(k[1]);
      bool lead_zero = (k[0] == 0 && k[1] == 0);
      int lo2 = (d >= 3) ? (lead_zero ? 0 : -rem1) : 0;
      int hi2 = (d >= 3) ? rem1 : 0;
      for (k[2] = lo2; k[2] <= hi2; ++k[2]) {
        int l1 = l1_of(k, d);
        if (l1 == 0 || l1 > kmax) continue;
        double kw = 0.0;
        for (int l = 0; l < d; ++l) kw += k[l] * omega[l];
        double akw = std::abs(kw);
        if (akw == 0.0) {
          res.resonance = true;
          res.worst_k = k;
          res.worst_value = 0.0;
          res.best_gamma = 0.0;
          res.ok = false;
          return res;
        }
        double adm = akw * std::pow(double(l1), tau);
        if (adm < res.best_gamma) {
          res.best_gamma = adm;
          res.worst_k = k;
        }
        res.worst_value = std::min(res.worst_value, akw);
      }
    }
  }
  res.ok = gamma <= res.best_gamma;
  if (res.ok) {
    res.data.omega = omega;
    res.data.gamma = gamma;
    res.data.tau = tau;
    res.data.checked_cutoff = kmax;
  }
  return res;
}

FourierModel solve_cohomological(const FourierModel& v, const DiophantineData& dio) {
  if (dio.omega.size() != v.dim()) fail(Errc::shape_mismatch, "solve_cohomological(): omega dim");
  if (v.box_l1_max() > dio.checked_cutoff)
    fail(Errc::cutoff_exceeded,
         "solve_cohomological(): model modes exceed the Diophantine-verified cutoff");
  FourierModel out = v;
  long nm = v.mode_count();
  int rc = v.rows() * v.cols();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = v.mode_of(f);
    int l1 = l1_of(k, v.dim());
    if (l1 == 0) {
      for (int e = 0; e < rc; ++e) out.data()[f * rc + e] = Cplx(0.0, 0.0);
      continue;
    }
    double kw = 0.0;
    for (int l = 0; l < v.dim(); ++l) kw += k[l] * dio.omega[l];
    if (kw == 0.0) fail(Errc::resonance, "solve_cohomological(): exact resonance k.omega = 0");
    Cplx inv = Cplx(0.0, 0.0) - 1.0 / Cplx(0.0, kTwoPi * kw);
    for (int e = 0; e < rc; ++e) out.data()[f * rc + e] = v.data()[f * rc + e] * inv;
  }
  return out;
}

double strip_norm(const FourierModel& m, double rho) {
  if (rho < 0) fail(Errc::invalid_argument, "strip_norm(): rho must be >= 0");
  long nm = m.mode_count();
  std::vector<double> row_sum(m.rows(), 0.0);
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    double w = std::exp(kTwoPi * l1_of(k, m.dim()) * rho);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) row_sum[r] += std::abs(m.at_flat(f, r, c)) * w;
  }
  double best = 0.0;
  for (double s : row_sum) best = std::max(best, s);
  return best;  // +inf when the exponential weights overflowed
}

double tail_mass(const FourierModel& m, const Axis& keep, double rho) {
  long nm = m.mode_count();
  double mass = 0.0;
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    bool outside = false;
    for (int l = 0; l < m.dim(); ++l)
      if (std::abs(k[l]) > keep[l]) outside = true;
    if (!outside) continue;
    double w = std::exp(kTwoPi * l1_of(k, m.dim()) * rho);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) mass += std::abs(m.at_flat(f, r, c)) * w;
  }
  return mass;
}

double tail_indicator(const FourierModel& m) {
  Axis inner;
  for (int l = 0; l < kMaxDim; ++l) inner[l] = (3 * m.cutoff()[l]) / 4;
  double tail = tail_mass(m, inner, 0.0);
  double total = 0.0;
  for (const Cplx& c : m.data()) total += std::abs(c);
  return total > 0 ? tail / total : 0.0;
}

namespace {

void require_same_box(const FourierModel& a, const FourierModel& b, const char* who) {
  if (a.dim() != b.dim() || a.cutoff() != b.cutoff())
    fail(Errc::shape_mismatch, std::string(who) + ": mode boxes differ");
}

}  // namespace

FourierModel add(const FourierModel& a, const FourierModel& b) {
  require_same_box(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(Errc::shape_mismatch, "add(): value shape");
  FourierModel out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

FourierModel sub(const FourierModel& a, const FourierModel& b) {
  require_same_box(a, b, "sub");
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(Errc::shape_mismatch, "sub(): value shape");
  FourierModel out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

FourierModel scale(const FourierModel& a, double s) {
  FourierModel out = a;
  for (auto& c : out.data()) c *= s;
  return out;
}

FourierModel matmul(const FourierModel& a, const FourierModel& b, std::optional<Axis> out_cutoff) {
  if (a.dim() != b.dim()) fail(Errc::shape_mismatch, "matmul(): torus dimension");
  if (a.cols() != b.rows()) fail(Errc::shape_mismatch, "matmul(): inner dimensions");
  int dim = a.dim();
  Axis full;
  Axis grid;
  for (int l = 0; l < kMaxDim; ++l) {
    full[l] = a.cutoff()[l] + b.cutoff()[l];
    grid[l] = l < dim ? next_pow2(2 * full[l] + 1) : 1;
  }
  GridData ga = to_grid(a, grid);
  GridData gb = to_grid(b, grid);
  GridData gc;
  gc.dim = dim;
  gc.rows = a.rows();
  gc.cols = b.cols();
  gc.grid = grid;
  long ntot = ga.node_count();
  gc.values.assign(ntot * gc.rows * gc.cols, 0.0);
  for (long i = 0; i < ntot; ++i) gc.at(i) = ga.at(i) * gb.at(i);
  FourierModel exact = analyze(gc, full);
  if (!out_cutoff) return exact;
  return truncate(exact, *out_cutoff);
}

FourierModel transpose(const FourierModel& a) {
  ModelSpec s = a.spec();
  std::swap(s.rows, s.cols);
  FourierModel out(s);
  long nm = a.mode_count();
  for (long f = 0; f < nm; ++f)
    for (int r = 0; r < a.rows(); ++r)
      for (int c = 0; c < a.cols(); ++c) out.at_flat(f, c, r) = a.at_flat(f, r, c);
  return out;
}

FourierModel hcat(const FourierModel& a, const FourierModel& b) {
  require_same_box(a, b, "hcat");
  if (a.rows() != b.rows()) fail(Errc::shape_mismatch, "hcat(): row counts differ");
  ModelSpec s = a.spec();
  s.cols = a.cols() + b.cols();
  FourierModel out(s);
  long nm = a.mode_count();
  for (long f = 0; f < nm; ++f)
    for (int r = 0; r < a.rows(); ++r) {
      for (int c = 0; c < a.cols(); ++c) out.at_flat(f, r, c) = a.at_flat(f, r, c);
      for (int c = 0; c < b.cols(); ++c) out.at_flat(f, r, a.cols() + c) = b.at_flat(f, r, c);
    }
  return out;
}

FourierModel vcat(const FourierModel& a, const FourierModel& b) {
  require_same_box(a, b, "vcat");
  if (a.cols() != b.cols()) fail(Errc::shape_mismatch, "vcat(): column counts differ");
  ModelSpec s = a.spec();
  s.rows = a.rows() + b.rows();
  FourierModel out(s);
  long nm = a.mode_count();
  for (long f = 0; f < nm; ++f)
    for (int c = 0; c < a.cols(); ++c) {
      for (int r = 0; r < a.rows(); ++r) out.at_flat(f, r, c) = a.at_flat(f, r, c);
      for (int r = 0; r < b.rows(); ++r) out.at_flat(f, a.rows() + r, c) = b.at_flat(f, r, c);
    }
  return out;
}

FourierModel block(const FourierModel& a, int r0, int c0, int nr, int nc) {
  if (r0 < 0 || c0 < 0 || r0 + nr > a.rows() || c0 + nc > a.cols())
    fail(Errc::shape_mismatch, "block(): out of range");
  ModelSpec s = a.spec();
  s.rows = nr;
  s.cols = nc;
  FourierModel out(s);
  long nm = a.mode_count();
  for (long f = 0; f < nm; ++f)
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c) out.at_flat(f, r, c) = a.at_flat(f, r0 + r, c0 + c);
  return out;
}

FourierModel truncate(const FourierModel& a, const Axis& cutoff, double rho, double* dropped) {
  ModelSpec s = a.spec();
  double lost = 0.0;
  Axis target = cutoff;
  for (int l = 0; l < kMaxDim; ++l) {
    if (l >= s.dim) target[l] = 0;
    if (target[l] > s.cutoff[l]) target[l] = s.cutoff[l];
  }
  ModelSpec so = s;
  so.cutoff = target;
  so.grid = padded_grid_for(target, s.dim);
  for (int l = s.dim; l < kMaxDim; ++l) so.grid[l] = 1;
  FourierModel out(so);
  long nm = a.mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = a.mode_of(f);
    bool inside = true;
    for (int l = 0; l < s.dim; ++l)
      if (std::abs(k[l]) > target[l]) inside = false;
    if (inside) {
      for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) out.at(k, r, c) = a.at_flat(f, r, c);
    } else if (dropped) {
      double w = std::exp(kTwoPi * l1_of(k, s.dim) * rho);
      for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) lost += std::abs(a.at_flat(f, r, c)) * w;
    }
  }
  if (dropped) *dropped = lost;
  return out;
}

FourierModel reshape_spec(const FourierModel& a, const Axis& cutoff, const Axis& grid) {
  ModelSpec s = a.spec();
  s.cutoff = cutoff;
  s.grid = grid;
  for (int l = s.dim; l < kMaxDim; ++l) {
    s.cutoff[l] = 0;
    s.grid[l] = 1;
  }
  FourierModel out(s);
  long nm = out.mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = out.mode_of(f);
    bool have = true;
    for (int l = 0; l < s.dim; ++l)
      if (std::abs(k[l]) > a.cutoff()[l]) have = false;
    if (!have) continue;
    for (int r = 0; r < s.rows; ++r)
      for (int c = 0; c < s.cols; ++c) out.at_flat(f, r, c) = a.at(k, r, c);
  }
  return out;
}

FourierModel compose_shift(const FourierModel& f, const FourierModel& g,
                           std::optional<double> budget) {
  if (g.cols() != 1 || g.rows() != f.dim())
    fail(Errc::shape_mismatch, "compose_shift(): displacement must be a d-vector");
  if (g.dim() != f.dim()) fail(Errc::shape_mismatch, "compose_shift(): torus dimensions differ");
  if (budget) {
    for (int r = 0; r < g.rows(); ++r)
      if (strip_norm(block(g, r, 0, 1, 1), 0.0) >= *budget)
        fail(Errc::budget_exceeded, "compose_shift(): displacement exceeds the strip budget");
  }
  GridData shift = to_grid(g, f.grid());
  GridData out;
  out.dim = f.dim();
  out.rows = f.rows();
  out.cols = f.cols();
  out.grid = f.grid();
  long ntot = shift.node_count();
  out.values.assign(ntot * f.rows() * f.cols(), 0.0);
  for (long i = 0; i < ntot; ++i) {
    std::array<double, kMaxDim> th = shift.theta(i);
    for (int l = 0; l < f.dim(); ++l) th[l] += shift.values[i * f.dim() + l];
    Eigen::MatrixXd v = synthesize_at(f, th);
    for (int r = 0; r < f.rows(); ++r)
      for (int c = 0; c < f.cols(); ++c) out.values[(i * f.rows() + r) * f.cols() + c] = v(r, c);
  }
  return analyze(out, f.cutoff());
}

double StripSchedule::bite(int j) const { return delta0 / std::pow(ratio_a, j); }

double StripSchedule::strip(int j) const {
  // rho_j = rho0 - 3*delta0*(1 - a^{-j})/(1 - 1/a)
  if (j == 0) return rho0;
  double geo = (1.0 - std::pow(ratio_a, -j)) / (1.0 - 1.0 / ratio_a);
  return rho0 - 3.0 * delta0 * geo;
}

StripSchedule make_schedule(double rho, double rho_inf, double delta0) {
  if (!(rho > 0) || !(rho_inf >= 0) || !(rho_inf < rho))
    fail(Errc::invalid_argument, "make_schedule(): need 0 <= rho_inf < rho");
  if (!(delta0 > 0) || !(delta0 < (rho - rho_inf) / 3.0))
    fail(Errc::invalid_argument, "make_schedule(): need 0 < delta < (rho - rho_inf)/3");
  StripSchedule s;
  s.rho0 = rho;
  s.rho_inf = rho_inf;
  s.delta0 = delta0;
  s.ratio_a = (rho - rho_inf) / (rho - 3.0 * delta0 - rho_inf);
  return s;
}

FourierModel random_model(const ModelSpec& spec, unsigned seed, double amplitude, double decay) {
  FourierModel m(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  long nm = m.mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    double w = amplitude * std::pow(decay, l1_of(k, spec.dim));
    for (int r = 0; r < spec.rows; ++r)
      for (int c = 0; c < spec.cols; ++c)
        m.at_flat(f, r, c) = Cplx(w * unif(rng), w * unif(rng));
  }
  m.enforce_real_symmetry();
  return m;
}

}  // namespace kamtorus::fourier
