#pragma once

// Shared parameter builders for the test suite: the feedback-controlled
// two-level-atom configurations exercised throughout (gamma = 1 units).

#include <cmath>

#include "qfb/atom_model.hpp"

namespace qfb::testing {

// Homodyne spectrum family: |alpha1|^2 = |alpha2|^2 = 0.45 and the residual
// decay split evenly over the two counting channels.
inline AtomParams spectrum_params(double omega_r, double delta_nu, double theta1,
                                  double theta2) {
    AtomParams p;
    p.gamma = 1.0;
    p.omega_r = omega_r;
    p.nu0 = delta_nu;
    p.nu = 0.0;
    p.alpha1 = std::sqrt(0.45);
    p.alpha2 = std::sqrt(0.45);
    p.beta3 = std::sqrt(0.05);
    p.beta4 = std::sqrt(0.05);
    p.epsilon1 = theta1;  // theta_j = epsilon_j + arg(alpha_j), alpha real
    p.epsilon2 = theta2;
    return p;
}

// Counting-statistics family: |alpha1|^2 = |beta3|^2 = 0.45.
inline AtomParams qparam_params(double omega_r, double delta_nu, double theta1) {
    AtomParams p;
    p.gamma = 1.0;
    p.omega_r = omega_r;
    p.nu0 = delta_nu;
    p.nu = 0.0;
    p.alpha1 = std::sqrt(0.45);
    p.beta3 = std::sqrt(0.45);
    p.alpha2 = std::sqrt(0.05);
    p.beta4 = std::sqrt(0.05);
    p.epsilon1 = theta1;
    return p;
}

inline FeedbackSpec phase_feedback(double k1) {
    FeedbackSpec fb;
    fb.mode = k1 == 0.0 ? FeedbackMode::none : FeedbackMode::phase_simplified;
    fb.k1 = k1;
    return fb;
}

}  // namespace qfb::testing
