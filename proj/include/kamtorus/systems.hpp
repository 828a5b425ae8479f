#pragma once

// Closed-form example systems used as ground truth: uncoupled (or polynomially
// coupled) planar oscillators with quartic action profiles, in canonical
// coordinates z = (q_1..q_n, p_1..p_n), and a rotational variant with the
// third action as moment map. All derivatives are hand-derived polynomials;
// global bounds are coefficient majorants over a complex polydisc.

#include <map>
#include <string>
#include <vector>

#include "kamtorus/geometry.hpp"

namespace kamtorus::systems {

using geometry::HamiltonianSystem;
using geometry::Mat;
using geometry::Vec;

/// Per-plane profile h_i(I) = a_i I + b_i I^2 / 2 with the action
/// I_i = (q_i^2 + p_i^2)/2, plus the integrability-breaking coupling
/// eps * q_1^2 q_2^2.
struct OscillatorParams {
  int n = 2;
  std::vector<double> a;
  std::vector<double> b;
  double eps = 0.0;
  double domain_radius = 2.5;
  double time_radius = 1.0;
};

/// Full-dimensional family (d = n, no extra first integrals).
HamiltonianSystem make_oscillator(const OscillatorParams& params);

/// n = 3, d = 2 family with moment map p = I_3; the coupling acts on planes
/// 1-2 only, so p stays an exact first integral. The moment flow is the
/// rotation by angle s in plane 3 (2*pi-periodic Hamiltonian S^1 action).
HamiltonianSystem make_rotational(const OscillatorParams& params);

/// Closed-form invariant torus of the eps = 0 family: plane-i circles of the
/// given radii, with 2*pi*omega_i = h_i'(r_i^2/2). For the rotational family
/// d = 2 and plane 3 sits at phase (r_3, 0); `omega_p` receives the moment
/// frequency h_3'(r_3^2/2) that makes the torus invariant for the discounted
/// field.
struct ExactTorus {
  fourier::FourierModel K;
  Eigen::VectorXd omega;
  double omega_p = 0.0;
};

ExactTorus exact_torus(const HamiltonianSystem& sys, const OscillatorParams& params,
                       const std::vector<double>& radii, const fourier::Axis& cutoff,
                       const fourier::Axis& grid);

/// Central-difference audit of every hand-derived callable against its parent.
struct AuditEntry {
  std::string name;
  double worst_rel_err = 0.0;
  bool ok = true;
};

struct AuditReport {
  bool ok = true;
  std::string first_failure;
  std::vector<AuditEntry> entries;
};

AuditReport finite_difference_audit(const HamiltonianSystem& sys, unsigned seed = 7u,
                                    int points = 50, double tol = 1e-6);

/// Family registry for the run configuration: "oscillator" | "rotational".
HamiltonianSystem make_system(const std::string& family, const OscillatorParams& params);

}  // namespace kamtorus::systems
