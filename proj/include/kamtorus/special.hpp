#pragma once

// Scalar special functions used by the certificate: Hurwitz zeta at a=2 and
// the upper incomplete gamma integral, both to ~1e-12 relative accuracy.

namespace kamtorus::cert {

/// zeta(a, b) = sum_{j>=0} (b+j)^{-a} for a > 1, b > 0. Direct summation with
/// an Euler-Maclaurin tail.
double hurwitz_zeta(double a, double b);

/// int_{x0}^infty u^s e^{-u} du = Gamma(s+1, x0), s >= 0, x0 >= 0.
double upper_incomplete_gamma_integral(double x0, double s);

}  // namespace kamtorus::cert
