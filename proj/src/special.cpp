#include "kamtorus/special.hpp"

#include <cmath>
#include <limits>

#include "kamtorus/errors.hpp"

namespace kamtorus::cert {

double hurwitz_zeta(double a, double b) {
  if (!(a > 1.0) || !(b > 0.0)) fail(Errc::invalid_argument, "hurwitz_zeta(): need a > 1, b > 0");
  const int J = 64;
  double sum = 0.0;
  for (int j = 0; j < J; ++j) sum += std::pow(b + j, -a);
  // Euler-Maclaurin remainder for f(x) = (b+x)^{-a} from x = J:
  //   int + f/2 - f'/12 + f'''/720 - ...
  double x = b + J;
  double fx = std::pow(x, -a);
  double tail = x * fx / (a - 1.0)            // integral
                + 0.5 * fx                     // f(J)/2
                + (a / 12.0) * fx / x          // -f'(J)/12
                - (a * (a + 1) * (a + 2) / 720.0) * fx / (x * x * x);
  return sum + tail;
}

namespace {

// Regularized continued fraction for Gamma(s, x), x > s+1 (modified Lentz).
double gamma_upper_cf(double s, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-16;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -double(i) * (double(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return std::exp(-x + s * std::log(x)) * h;
}

// Series for the lower incomplete gamma gamma(s, x), x <= s+1.
double gamma_lower_series(double s, double x) {
  double ap = s;
  double sum = 1.0 / s;
  double del = sum;
  for (int i = 1; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x));
}

}  // namespace

double upper_incomplete_gamma_integral(double x0, double s) {
  if (x0 < 0 || s < 0) fail(Errc::invalid_argument, "incomplete gamma: need x0 >= 0, s >= 0");
  double sp1 = s + 1.0;
  if (x0 == 0.0) return std::tgamma(sp1);
  if (x0 < sp1 + 1.0) return std::tgamma(sp1) - gamma_lower_series(sp1, x0);
  return gamma_upper_cf(sp1, x0);
}

}  // namespace kamtorus::cert
