#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "qfb/bloch.hpp"
#include "qfb/stats.hpp"

using namespace qfb;
using qfb::testing::phase_feedback;
using qfb::testing::qparam_params;
using qfb::testing::spectrum_params;

namespace {

const double pi = std::acos(-1.0);

ChannelModel constant_model(Operator2 h, std::vector<Operator2> diff,
                            std::vector<int> diff_labels,
                            std::vector<Operator2> jump, std::vector<int> jump_labels,
                            std::vector<double> lambda) {
    ChannelModel m;
    m.constant = true;
    m.const_ops.H = std::move(h);
    m.const_ops.diff = std::move(diff);
    m.const_ops.jump = std::move(jump);
    m.diff_labels = std::move(diff_labels);
    m.jump_labels = std::move(jump_labels);
    m.lambda = std::move(lambda);
    return m;
}

SuperOp2 model_generator(const ChannelModel& m) {
    std::vector<Operator2> channels = m.const_ops.diff;
    for (const auto& l : m.const_ops.jump) channels.push_back(l);
    return superop_matrix(m.const_ops.H, channels);
}

EnsembleSpec ensemble(std::size_t n_traj, std::uint64_t seed, double t_end,
                      double step, const Operator2& rho0) {
    EnsembleSpec ens;
    ens.n_traj = n_traj;
    ens.master_seed = seed;
    ens.n_threads = 1;
    ens.grid = GridSpec::make(t_end, step);
    ens.rho0 = rho0;
    return ens;
}

}  // namespace

TEST_CASE("build_outputs: responses and detector noise") {
    ChannelModel m = make_frame_model(spectrum_params(1.0, 0.0, 0.3, 0.1),
                                      OscillatorSpec{}, phase_feedback(0.2));
    GridSpec g = GridSpec::make(1.0, 0.01);
    NoisePath path = sample_path(g, m.noise_layout(), 4);
    TrajectoryRecord rec = integrate_linear_sme(m, path, maximally_mixed(), {});

    OutputSpec dirac;
    BuiltOutputs raw = build_outputs(rec, dirac);
    REQUIRE(raw.J.size() == 2);
    CHECK(raw.J[0] == rec.outputs.dB[0]);
    CHECK(raw.I == rec.outputs.dN);

    // Flat filter (k = 1, varkappa = 0) integrates the increments.
    OutputSpec flat;
    flat.response = OutputSpec::Response::exp_filter;
    flat.k = 1.0;
    BuiltOutputs integ = build_outputs(rec, flat);
    double running = 0.0;
    for (std::size_t n = 0; n < g.n_steps; ++n) {
        running += rec.outputs.dB[0][n];
        CHECK(integ.J[0][n] == doctest::Approx(running).epsilon(1e-12));
    }

    // Finite-bandwidth filter matches the scalar recursion.
    OutputSpec filt = flat;
    filt.k = 2.0;
    filt.varkappa = 3.0;
    FeedbackSpec fspec;
    fspec.detector_gain = filt.k;
    fspec.detector_bandwidth = filt.varkappa;
    BuiltOutputs filtered = build_outputs(rec, filt);
    double j = 0.0;
    for (std::size_t n = 0; n < g.n_steps; ++n) {
        j = feedback_current_update(j, rec.outputs.dB[1][n], g.step, fspec);
        CHECK(filtered.J[1][n] == doctest::Approx(j).epsilon(1e-12));
    }

    // Detector noise is reproducible in the seed and actually does something.
    OutputSpec noisy;
    noisy.noise_amplitude = 0.5;
    BuiltOutputs a = build_outputs(rec, noisy, 11);
    BuiltOutputs b = build_outputs(rec, noisy, 11);
    BuiltOutputs c = build_outputs(rec, noisy, 12);
    CHECK(a.J[0] == b.J[0]);
    CHECK(a.J[0] != c.J[0]);
    CHECK(a.J[0] != raw.J[0]);
}

TEST_CASE("weighted_expectation: normalization and output means") {
    ChannelModel m = make_frame_model(spectrum_params(1.2, 0.4, -1.9, -0.15),
                                      OscillatorSpec{}, phase_feedback(0.32));
    const double T = 2.0, h = 0.005;
    Operator2 rho0 = pauli::p_plus;
    EnsembleSpec ens = ensemble(4000, 31, T, h, rho0);

    // E[p(T)] = 1.
    MeanEstimate one = weighted_expectation(m, ens, [](const TrajectoryRecord&) {
        return 1.0;
    });
    CHECK(std::abs(one.value - 1.0) < 4.0 * one.err + 1e-6);
    CHECK(one.err < 0.05);

    // Physical mean of the homodyne output: E[B_1(T)] = int 2 Re tr(K rho(t)) dt.
    SuperOp2 gen = model_generator(m);
    const Operator2& k_op = m.const_ops.diff[0];
    const Operator2& l2 = m.const_ops.diff[1];
    const Operator2 l3 = m.const_ops.jump[0];
    double b1_oracle = 0.0, n3_oracle = 0.0;
    OpVec v = vectorize(rho0);
    SuperOp2 step_map = superop_exp(gen, h);
    for (std::size_t n = 0; n < ens.grid.n_steps; ++n) {
        Operator2 rho = unvectorize(v);
        b1_oracle += 2.0 * (k_op * rho).trace().real() * h;
        n3_oracle += (l3.adjoint() * l3 * rho).trace().real() * h;
        v = step_map * v;
    }
    (void)l2;
    MeanEstimate b1 = weighted_expectation(m, ens, [](const TrajectoryRecord& r) {
        return r.outputs.B_total(0);
    });
    CHECK(std::abs(b1.value - b1_oracle) < 4.0 * b1.err + 0.01);
    MeanEstimate n3 = weighted_expectation(m, ens, [](const TrajectoryRecord& r) {
        return static_cast<double>(r.outputs.N_total(0));
    });
    CHECK(std::abs(n3.value - n3_oracle) < 4.0 * n3.err + 0.01);
}

TEST_CASE("spectrum of a dark channel is shot noise") {
    AtomParams p = qparam_params(1.0, 0.0, 0.0);
    p.alpha2 = 0.0;
    p.beta4 = std::sqrt(0.1);
    ChannelModel m = make_frame_model(p, OscillatorSpec{}, phase_feedback(0.0));
    EnsembleSpec ens = ensemble(200, 5, 20.0, 0.01, maximally_mixed());
    SpectrumEstimate est =
        estimate_spectrum(m, ens, 1, {0.0, 1.0, 3.0}, Estimator::nonlinear);
    for (std::size_t i = 0; i < est.mu.size(); ++i) {
        CAPTURE(est.mu[i]);
        CHECK(std::abs(est.s_inel[i] - 1.0) < 4.0 * est.err[i] + 1e-6);
        CHECK(est.err[i] < 0.2);
    }
    CHECK(std::abs(est.s_el_coefficient) < 4.0 * est.s_el_stderr + 1e-6);
}

TEST_CASE("Monte Carlo spectrum matches the closed form") {
    AtomParams p = spectrum_params(0.3660, 0.0, -pi, -1.5708);
    FeedbackSpec fb = phase_feedback(0.3371);
    ChannelModel m = make_frame_model(p, OscillatorSpec{}, fb);
    BlochSystem bs = build_bloch(p, fb);
    EnsembleSpec ens = ensemble(400, 8, 20.0, 0.01, maximally_mixed());
    std::vector<double> mu = {0.0, 1.0, 2.0};
    SpectrumEstimate est = estimate_spectrum(m, ens, 1, mu, Estimator::nonlinear);
    CHECK(est.n_traj == 400);
    CHECK(est.T == doctest::Approx(20.0));
    for (std::size_t i = 0; i < mu.size(); ++i) {
        CAPTURE(mu[i]);
        // 4 sigma plus finite-T and Euler bias allowance.
        CHECK(std::abs(est.s_inel[i] - spectrum_inelastic(bs, mu[i])) <
              4.0 * est.err[i] + 0.08);
    }
    CHECK(std::abs(est.s_el_coefficient - spectrum_elastic_weight(bs)) <
          4.0 * est.s_el_stderr + 0.15);

    CHECK_THROWS_AS(estimate_spectrum(m, ens, 1, {}, Estimator::nonlinear),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_spectrum(m, ens, 7, mu, Estimator::nonlinear),
                    std::invalid_argument);
}

TEST_CASE("Mandel Q of a state-independent counting channel is Poissonian") {
    // L proportional to the identity: jumps do not disturb the state and
    // arrive at constant rate, so the counts are exactly Poisson and Q = 0.
    ChannelModel m =
        constant_model(Operator2::Zero(), {}, {}, {pauli::id}, {3}, {1.0});
    EnsembleSpec ens = ensemble(2000, 17, 10.0, 0.01, maximally_mixed());
    QEstimate est = estimate_mandel_q(m, ens, 0, {4.0, 8.0}, 2.0, Estimator::nonlinear);
    REQUIRE(est.q.size() == 2);
    for (std::size_t i = 0; i < est.q.size(); ++i) {
        CAPTURE(est.t_grid[i]);
        CHECK(std::abs(est.q[i]) < 4.0 * est.err[i] + 1e-9);
    }
    CHECK(std::abs(est.m_rate - 1.0) < 0.05);
}

TEST_CASE("Monte Carlo Mandel Q matches the closed form") {
    AtomParams p = qparam_params(1.0063, 0.0, pi);
    FeedbackSpec fb = phase_feedback(1.0126);
    ChannelModel m = make_frame_model(p, OscillatorSpec{}, fb);
    BlochSystem bs = build_bloch(p, fb);
    Operator2 rho0 = stationary_state(model_generator(m));
    EnsembleSpec ens = ensemble(1500, 23, 15.0, 0.01, rho0);
    QEstimate est = estimate_mandel_q(m, ens, 0, {10.0}, 5.0, Estimator::nonlinear);
    CHECK(std::abs(est.q[0] - mandel_q3(bs, 0.45, 10.0)) < 4.0 * est.err[0] + 0.02);
    CHECK(std::abs(est.m_rate - mandel_m3_rate(bs, 0.45)) < 0.03);

    CHECK_THROWS_AS(estimate_mandel_q(m, ens, 0, {}, 0.0, Estimator::nonlinear),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_mandel_q(m, ens, 9, {1.0}, 0.0, Estimator::nonlinear),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_mandel_q(m, ens, 0, {20.0}, 5.0, Estimator::nonlinear),
                    std::invalid_argument);
}

TEST_CASE("Mandel Q with no counts reports a numerical failure") {
    ChannelModel m =
        constant_model(Operator2::Zero(), {}, {}, {Operator2::Zero()}, {3}, {0.5});
    EnsembleSpec ens = ensemble(50, 3, 4.0, 0.01, maximally_mixed());
    CHECK_THROWS_AS(estimate_mandel_q(m, ens, 0, {2.0}, 1.0, Estimator::nonlinear),
                    numerical_error);
}

TEST_CASE("two-time autocorrelation: dark channel, oracle, rejections") {
    // Dark channel: zero operator gives zero correlation.
    ChannelModel dark = constant_model(0.5 * pauli::sx, {Operator2::Zero()}, {2},
                                       {pauli::sm}, {3}, {1.0});
    EnsembleSpec ens = ensemble(200, 2, 1.0, 0.005, pauli::p_plus);
    AutocorrEstimate z = autocorrelation_d(dark, ens, 0, 0.3, 0.6, 0.0, false);
    CHECK(z.b == doctest::Approx(0.0));
    CHECK(z.d == doctest::Approx(0.0));

    // Driven-damped atom: b(t, s) = tr{(L + L*) e^{G (t-s)}[L rho_s + rho_s L*]}.
    ChannelModel m = make_frame_model(spectrum_params(1.2, 0.4, -1.9, -0.15),
                                      OscillatorSpec{}, phase_feedback(0.0));
    const double s = 0.3, t = 0.6, n_inf = 0.7;
    SuperOp2 gen = model_generator(m);
    Operator2 rho0 = maximally_mixed();
    Operator2 rho_s = unvectorize(superop_exp(gen, s) * vectorize(rho0));
    const Operator2& l = m.const_ops.diff[1];
    Operator2 quad = l + l.adjoint();
    Operator2 prop_b = unvectorize(superop_exp(gen, t - s) *
                                   vectorize(l * rho_s + rho_s * l.adjoint()));
    Operator2 prop_s = unvectorize(superop_exp(gen, t - s) * vectorize(rho_s));
    double b_oracle = (quad * prop_b).trace().real();
    double d_oracle = b_oracle - n_inf * (quad * prop_s).trace().real();

    EnsembleSpec ens2 = ensemble(3000, 29, 1.0, 0.005, rho0);
    AutocorrEstimate est = autocorrelation_d(m, ens2, 1, s, t, n_inf, false);
    CHECK(std::abs(est.b - b_oracle) < 4.0 * est.b_stderr + 0.01);
    CHECK(std::abs(est.d - d_oracle) < 4.0 * est.d_stderr + 0.01);

    // Feedback-driven channel 1 and bad time orderings are rejected.
    CHECK_THROWS_AS(autocorrelation_d(m, ens2, 0, s, t, 0.0, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(autocorrelation_d(m, ens2, 1, 0.6, 0.3, 0.0, false),
                    std::invalid_argument);
    ChannelModel lab = make_lab_model(spectrum_params(1.2, 0.4, -1.9, -0.15),
                                      OscillatorSpec{}, phase_feedback(0.32));
    CHECK_THROWS_AS(autocorrelation_d(lab, ens2, 1, s, t, 0.0, false),
                    std::invalid_argument);
}
