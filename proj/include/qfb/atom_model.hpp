#pragma once

// Two-level-atom model: Hamiltonian, laser wave with phase diffusion and
// measurement-based feedback, local oscillators, and the six channel
// operators. Channel layout is fixed: 1, 2 diffusive observed (homodyne or
// heterodyne), 3 counting observed, 4, 5, 6 counting unobserved.

#include <complex>
#include <functional>
#include <vector>

#include "qfb/core_ops.hpp"
#include "qfb/noise.hpp"

namespace qfb {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AtomParams {
    double nu0 = 0.0;        // atomic resonance frequency
    double nu = 0.0;         // laser carrier frequency
    double omega_r = 0.0;    // Rabi frequency
    double theta = 0.0;      // initial laser phase, in (-pi, pi]
    double k0 = 0.0;         // laser phase-diffusion strength
    double gamma = 1.0;      // total decay rate
    double n_bar = 0.0;      // thermal occupation
    complex alpha1{0, 0}, alpha2{0, 0};   // diffusive channel amplitudes
    complex beta3{0, 0}, beta4{0, 0};     // counting channel amplitudes
    double epsilon1 = 0.0, epsilon2 = 0.0;  // local-oscillator phases

    double delta_nu() const { return nu0 - nu; }
    // Homodyne quadrature phases entering the Bloch system.
    double theta1() const;
    double theta2() const;
    double beta_th() const { return std::sqrt(gamma * n_bar); }  // |beta5| = |beta6|

    void validate() const;  // throws config_error naming the violated constraint
};

enum class FeedbackMode { none, amplitude, phase, phase_simplified };

struct FeedbackSpec {
    FeedbackMode mode = FeedbackMode::none;
    double k1 = 0.0;                  // phase-feedback gain
    double c = 0.0;                   // amplitude-feedback gain
    double theta_fb = 0.0;            // amplitude-feedback phase
    double delay = 0.0;               // feedback delay
    double detector_gain = 1.0;       // k in the J_1 response
    double detector_bandwidth = 0.0;  // varkappa in the J_1 response

    void validate() const;
};

enum class OscMode { homodyne, heterodyne };

struct OscillatorChannel {
    OscMode mode = OscMode::homodyne;
    double nu_het = 0.0;    // heterodyne local-oscillator frequency
    double k_neg = 0.0;     // heterodyne phase-diffusion strength
};

struct OscillatorSpec {
    OscillatorChannel ch1, ch2;
};

// Exponential-filter recursion for the feedback current
// J_1(t) = k int_0^t exp(-varkappa (t-s) / 2) dB_1(s),
// with the increment over a step attributed to its left endpoint.
double feedback_current_update(double prev_j1, double db1, double step,
                               const FeedbackSpec& fb);

// Cumulative path values seen by the (adapted) coefficients at time t.
struct PathCtx {
    std::array<double, kNumWiener> b{};  // B_{-2}(t) .. B_2(t)
    double j1_delayed = 0.0;             // J_1(t - delay), 0 before the delay window

    double B(int label) const { return b[wiener_slot(label)]; }
};

complex laser_wave(const AtomParams& p, const FeedbackSpec& fb, double t,
                   const PathCtx& ctx);

struct ChannelSet {
    Operator2 H;
    std::array<Operator2, 6> L;  // L[0] = L_1 .. L[5] = L_6
};

ChannelSet channel_operators(const AtomParams& p, const OscillatorSpec& osc,
                             const FeedbackSpec& fb, double t, const PathCtx& ctx);

// Model handed to the trajectory engine: which noise labels drive the SME
// terms and how to evaluate the operator coefficients along a path.
struct ModelOps {
    Operator2 H;
    std::vector<Operator2> diff;   // aligned with diff_labels
    std::vector<Operator2> jump;   // aligned with jump_labels
};

struct ChannelModel {
    std::vector<int> diff_labels;    // Wiener labels driving diffusive SME terms
    std::vector<int> jump_labels;    // Poisson labels (subset of 3..6)
    std::vector<double> lambda;      // reference intensities, aligned with jump_labels
    bool constant = false;
    ModelOps const_ops;              // used when constant
    std::function<void(double t, const PathCtx&, ModelOps&)> eval;  // used otherwise

    void ops_at(double t, const PathCtx& ctx, ModelOps& out) const {
        if (constant) out = const_ops; else eval(t, ctx, out);
    }
    double lambda_total() const;
    ChannelLayout noise_layout() const;  // Wiener channels + intensities to sample
};

// Lab-frame model with the full stochastic coefficients.
ChannelModel make_lab_model(const AtomParams& p, const OscillatorSpec& osc,
                            const FeedbackSpec& fb);

// Stochastic-rotating-frame generator for the homodyne, simplified
// phase-feedback configuration, where the transformed coefficients are
// non-random and constant.
struct FrameGenerator {
    Operator2 H_hat;        // effective Hamiltonian
    Operator2 K;            // feedback channel operator
    SuperOp2 L_hat;         // full generator in Lindblad form
    SuperOp2 D0, D1, D2;    // diffusion superoperators for B_0, B_1, B_2
};

FrameGenerator rotating_frame_generator(const AtomParams& p, const OscillatorSpec& osc,
                                        const FeedbackSpec& fb);

// Constant-coefficient model in the rotating frame (same p(t), B and N
// statistics as the lab model for homodyne + simplified phase feedback).
ChannelModel make_frame_model(const AtomParams& p, const OscillatorSpec& osc,
                              const FeedbackSpec& fb);

// Default reference intensity for a constant jump operator: sup-norm of
// L*L, i.e. the largest physical intensity reachable by a unit-trace state.
double default_intensity(const Operator2& l);

}  // namespace qfb
