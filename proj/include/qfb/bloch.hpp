#pragma once

// Closed-form Bloch-matrix computation of the homodyne spectrum, elastic
// weight, and Mandel Q-parameter for the homodyne, phase-feedback model.

#include <Eigen/Dense>

#include "qfb/atom_model.hpp"

namespace qfb {

struct BlochSystem {
    Eigen::Matrix3d A;        // drift matrix
    Eigen::Vector3d u;        // drift vector
    Eigen::Vector3d d;        // stationary Bloch vector, A d + u = 0
    double Gamma = 0.0;       // (2 n_bar + 1) gamma + k0^2 + k1^2
    double condition = 0.0;   // condition number of A
    // Parameters the spectrum formulas need again.
    double gamma = 1.0;
    double alpha1_sq = 0.0, alpha2_sq = 0.0;
    double theta2 = 0.0;

    double v() const { return std::cos(theta2) * d(0) + std::sin(theta2) * d(1); }
};

BlochSystem build_bloch(const AtomParams& p, const FeedbackSpec& fb);

// Inelastic part of the homodyne spectrum of channel 2, even in mu.
double spectrum_inelastic(const BlochSystem& bs, double mu);

// Same quadrature rotated by delta_theta2 (for the uncertainty product).
double spectrum_inelastic_rotated(const BlochSystem& bs, double mu, double delta_theta2);

// Coefficient of the 2 pi delta(mu) elastic spike: 2 pi |alpha2|^2 v^2.
double spectrum_elastic_weight(const BlochSystem& bs);

// Mandel Q of the direct-detection channel over a window of length t in the
// stationary regime; t = infinity handled by mandel_q3_longtime.
double mandel_q3(const BlochSystem& bs, double beta3_sq, double t);
double mandel_q3_longtime(const BlochSystem& bs, double beta3_sq);

// Stationary counting rate M_3 / t = |beta3|^2 (1 + d3) / 2.
double mandel_m3_rate(const BlochSystem& bs, double beta3_sq);

// Lorentzian spectrum of the free laser wave (k0 != 0).
double laser_spectrum(const AtomParams& p, double mu);

// S_inel(mu; theta2) * S_inel(mu; theta2 + pi/2); always >= 1.
double heisenberg_product(const BlochSystem& bs, double mu);

}  // namespace qfb
