#include "qfb/atom_model.hpp"

#include <cmath>
#include <numbers>

namespace qfb {

namespace {

constexpr double kPi = std::numbers::pi;

// Reduce a phase to (-pi, pi]; -pi and pi are identified.
double wrap_phase(double x) {
    double y = std::remainder(x, 2 * kPi);
    if (y <= -kPi) y += 2 * kPi;
    return y;
}

}  // namespace

double AtomParams::theta1() const { return wrap_phase(epsilon1 + std::arg(alpha1)); }
double AtomParams::theta2() const { return wrap_phase(epsilon2 + std::arg(alpha2)); }

void AtomParams::validate() const {
    if (gamma <= 0) throw config_error("model.gamma: must be > 0");
    if (omega_r < 0) throw config_error("model.omega_r: must be >= 0");
    if (n_bar < 0) throw config_error("model.n_bar: must be >= 0");
    if (theta <= -kPi || theta > kPi)
        throw config_error("model.theta: must lie in (-pi, pi]");
    const double sum = std::norm(alpha1) + std::norm(alpha2) + std::norm(beta3) +
                       std::norm(beta4);
    if (std::abs(sum - gamma) > 1e-10)
        throw config_error(
            "model: |alpha1|^2 + |alpha2|^2 + |beta3|^2 + |beta4|^2 must equal gamma");
}

void FeedbackSpec::validate() const {
    if (delay < 0) throw config_error("feedback.delay: must be >= 0");
    if (detector_bandwidth < 0)
        throw config_error("feedback.detector_bandwidth: must be >= 0");
    if (mode == FeedbackMode::phase_simplified) {
        if (delay != 0 || detector_bandwidth != 0 || detector_gain != 1)
            throw config_error(
                "feedback: phase_simplified requires delay=0, detector_bandwidth=0, "
                "detector_gain=1");
    }
}

double feedback_current_update(double prev_j1, double db1, double step,
                               const FeedbackSpec& fb) {
    if (step <= 0) throw std::invalid_argument("feedback_current_update: step must be > 0");
    const double decay = std::exp(-0.5 * fb.detector_bandwidth * step);
    return decay * (prev_j1 + fb.detector_gain * db1);
}

complex laser_wave(const AtomParams& p, const FeedbackSpec& fb, double t,
                   const PathCtx& ctx) {
    const complex i(0, 1);
    const double u0 = p.theta + p.nu * t + p.k0 * ctx.B(0);
    switch (fb.mode) {
        case FeedbackMode::none:
            return 0.5 * p.omega_r * std::exp(-i * u0);
        case FeedbackMode::amplitude:
            return 0.5 * std::exp(-i * u0) *
                   (p.omega_r + fb.c * std::exp(i * fb.theta_fb) * ctx.j1_delayed);
        case FeedbackMode::phase:
            return 0.5 * p.omega_r * std::exp(-i * (u0 + fb.k1 * ctx.j1_delayed));
        case FeedbackMode::phase_simplified:
            return 0.5 * p.omega_r * std::exp(-i * (u0 + fb.k1 * ctx.B(1)));
    }
    throw std::logic_error("laser_wave: unknown feedback mode");
}

namespace {

complex oscillator_wave(const OscillatorChannel& ch, double epsilon, int label,
                        complex f, double t, const PathCtx& ctx) {
    const complex i(0, 1);
    if (ch.mode == OscMode::homodyne) {
        const double mag = std::abs(f);
        if (mag == 0.0)
            throw numerical_error("homodyne oscillator: laser wave vanished, phase undefined");
        return std::exp(-i * epsilon) * f / mag;
    }
    return std::exp(-i * (epsilon + ch.nu_het * t + ch.k_neg * ctx.B(label)));
}

}  // namespace

ChannelSet channel_operators(const AtomParams& p, const OscillatorSpec& osc,
                             const FeedbackSpec& fb, double t, const PathCtx& ctx) {
    using namespace pauli;
    const complex f = laser_wave(p, fb, t, ctx);
    ChannelSet cs;
    cs.H = 0.5 * p.nu0 * sz + std::conj(f) * sm + f * sp;
    const complex h1 = oscillator_wave(osc.ch1, p.epsilon1, -1, f, t, ctx);
    const complex h2 = oscillator_wave(osc.ch2, p.epsilon2, -2, f, t, ctx);
    cs.L[0] = std::conj(h1) * p.alpha1 * sm;
    cs.L[1] = std::conj(h2) * p.alpha2 * sm;
    cs.L[2] = p.beta3 * sm;
    cs.L[3] = p.beta4 * sm;
    cs.L[4] = p.beta_th() * sm;
    cs.L[5] = p.beta_th() * sp;
    return cs;
}

double default_intensity(const Operator2& l) {
    Eigen::SelfAdjointEigenSolver<Operator2> es(hermitize(l.adjoint() * l));
    return es.eigenvalues().maxCoeff();
}

double ChannelModel::lambda_total() const {
    double s = 0;
    for (double l : lambda) s += l;
    return s;
}

ChannelLayout ChannelModel::noise_layout() const {
    ChannelLayout layout;
    for (int label : diff_labels) layout.require_wiener(label);
    // Coefficient noises: B_0 for the laser, B_{-1}, B_{-2} for heterodyne
    // oscillators, B_1 for feedback. These are only needed by non-constant
    // models, but generating them is cheap and keeps paths reusable.
    if (!constant) {
        layout.require_wiener(0);
        layout.require_wiener(1);
        layout.require_wiener(-1);
        layout.require_wiener(-2);
    }
    for (std::size_t k = 0; k < jump_labels.size(); ++k)
        layout.set_lambda(jump_labels[k], lambda[k]);
    return layout;
}

namespace {

void append_jump_channels(const AtomParams& p, ChannelModel& model,
                          std::vector<Operator2>* store) {
    using namespace pauli;
    const std::array<std::pair<int, Operator2>, 4> jumps = {{
        {3, Operator2(p.beta3 * sm)},
        {4, Operator2(p.beta4 * sm)},
        {5, Operator2(p.beta_th() * sm)},
        {6, Operator2(p.beta_th() * sp)},
    }};
    for (const auto& [label, op] : jumps) {
        const double lam = default_intensity(op);
        if (lam <= 0) continue;  // zero operators generate no dynamics
        model.jump_labels.push_back(label);
        model.lambda.push_back(lam);
        if (store) store->push_back(op);
    }
}

}  // namespace

ChannelModel make_lab_model(const AtomParams& p, const OscillatorSpec& osc,
                            const FeedbackSpec& fb) {
    p.validate();
    fb.validate();
    ChannelModel model;
    model.diff_labels = {1, 2};
    append_jump_channels(p, model, nullptr);
    model.constant = false;
    model.eval = [p, osc, fb, n_jump = model.jump_labels.size(),
                  labels = model.jump_labels](double t, const PathCtx& ctx, ModelOps& out) {
        const ChannelSet cs = channel_operators(p, osc, fb, t, ctx);
        out.H = cs.H;
        out.diff = {cs.L[0], cs.L[1]};
        out.jump.clear();
        out.jump.reserve(n_jump);
        for (int label : labels) out.jump.push_back(cs.L[label - 1]);
    };
    return model;
}

FrameGenerator rotating_frame_generator(const AtomParams& p, const OscillatorSpec& osc,
                                        const FeedbackSpec& fb) {
    using namespace pauli;
    p.validate();
    fb.validate();
    if (osc.ch1.mode != OscMode::homodyne || osc.ch2.mode != OscMode::homodyne)
        throw config_error(
            "rotating frame: heterodyne oscillators make the frame generator random");
    if (fb.mode != FeedbackMode::phase_simplified && fb.mode != FeedbackMode::none)
        throw config_error(
            "rotating frame: only the simplified phase feedback keeps the generator "
            "non-random");
    const double k1 = fb.mode == FeedbackMode::none ? 0.0 : fb.k1;
    const complex i(0, 1);
    const double a1 = std::abs(p.alpha1);
    const double a2 = std::abs(p.alpha2);
    const double th1 = p.theta1();
    const double th2 = p.theta2();

    FrameGenerator g;
    g.H_hat = 0.5 * (p.delta_nu() * sz + p.omega_r * sx) +
              0.25 * k1 * a1 *
                  (std::exp(-i * th1) * sp + std::exp(i * th1) * sm);
    g.K = 0.5 * i * k1 * sz + a1 * std::exp(i * th1) * Operator2(sm);

    const Operator2 l0 = 0.5 * i * p.k0 * sz;
    const Operator2 l2 = a2 * std::exp(i * th2) * Operator2(sm);
    g.D0 = diffusive_superop(l0);
    g.D1 = diffusive_superop(g.K);
    g.D2 = diffusive_superop(l2);

    std::vector<Operator2> channels = {g.K, l2, l0, p.beta3 * sm, p.beta4 * sm,
                                       p.beta_th() * sm, p.beta_th() * sp};
    g.L_hat = superop_matrix(hermitize(g.H_hat), channels);
    return g;
}

ChannelModel make_frame_model(const AtomParams& p, const OscillatorSpec& osc,
                              const FeedbackSpec& fb) {
    using namespace pauli;
    const FrameGenerator g = rotating_frame_generator(p, osc, fb);
    const complex i(0, 1);
    ChannelModel model;
    model.constant = true;
    model.const_ops.H = hermitize(g.H_hat);
    model.const_ops.diff = {g.K, std::abs(p.alpha2) * std::exp(i * p.theta2()) * Operator2(sm)};
    model.diff_labels = {1, 2};
    if (p.k0 != 0.0) {
        model.const_ops.diff.push_back(0.5 * i * p.k0 * Operator2(sz));
        model.diff_labels.push_back(0);
    }
    append_jump_channels(p, model, &model.const_ops.jump);
    return model;
}

}  // namespace qfb
