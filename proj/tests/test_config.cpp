#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "qfb/config.hpp"

using namespace qfb;

namespace {

const std::string base_cfg = R"(# tuned squeezing configuration
[model]
gamma = 1
omega_r = 0.366
alpha1 = 0.67082039324993692
alpha2 = 0.67082039324993692
beta3 = 0.22360679774997896
beta4 = 0.22360679774997896
epsilon1 = -3.141592653589793
epsilon2 = -1.5708

[feedback]
mode = phase_simplified
k1 = 0.3371

[grid]
t_end = 20
step = 0.01

[engine]
frame = rotating
estimator = nonlinear
init_state = stationary

[ensemble]
n_traj = 200
master_seed = 7

[spectrum]
mu = 0 1 2 3 4
channel = 2
)";

std::string expect_config_error(const std::string& text) {
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("parse_config fills the expected fields") {
    RunConfig cfg = parse_config(base_cfg);
    CHECK(cfg.model.gamma == 1.0);
    CHECK(cfg.model.omega_r == doctest::Approx(0.366));
    CHECK(cfg.model.epsilon2 == doctest::Approx(-1.5708));
    CHECK(cfg.feedback.mode == FeedbackMode::phase_simplified);
    CHECK(cfg.feedback.k1 == doctest::Approx(0.3371));
    CHECK(cfg.grid.n_steps == 2000);
    CHECK(cfg.frame == FrameChoice::rotating);
    CHECK(cfg.estimator == Estimator::nonlinear);
    CHECK(cfg.init_state == InitState::stationary);
    CHECK(cfg.n_traj == 200);
    CHECK(cfg.master_seed == 7);
    CHECK(cfg.mu_grid == std::vector<double>{0, 1, 2, 3, 4});
    CHECK(cfg.spectrum_channel == 2);
    CHECK_FALSE(cfg.search.has_value());
}

TEST_CASE("dump_config round-trips byte for byte") {
    RunConfig cfg = parse_config(base_cfg);
    std::string dumped = dump_config(cfg);
    RunConfig again = parse_config(dumped);
    CHECK(dump_config(again) == dumped);
    // And the physics survives the trip.
    CHECK(again.model.alpha1 == cfg.model.alpha1);
    CHECK(again.mu_grid == cfg.mu_grid);
}

TEST_CASE("unknown keys and sections are rejected with a path") {
    std::string msg = expect_config_error(base_cfg + "\n[model]\nrabi = 2\n");
    CHECK(msg.find("model.rabi") != std::string::npos);
    msg = expect_config_error(base_cfg + "\n[sidechannel]\nx = 1\n");
    CHECK(msg.find("sidechannel") != std::string::npos);
    // Malformed lines too.
    CHECK_THROWS_AS(parse_config("[model]\ngamma\n"), config_error);
    CHECK_THROWS_AS(parse_config("gamma = 1\n"), config_error);  // before any section
}

TEST_CASE("decay-decomposition constraint is enforced at parse time") {
    std::string broken = base_cfg;
    broken += "\n[model]\nbeta4 = 0\n";  // last occurrence wins, sum != gamma
    std::string msg = expect_config_error(broken);
    CHECK(msg.find("alpha") != std::string::npos);
}

TEST_CASE("last occurrence of a key wins") {
    RunConfig cfg = parse_config(base_cfg + "\n[ensemble]\nmaster_seed = 99\n");
    CHECK(cfg.master_seed == 99);
}

TEST_CASE("complex literals") {
    std::string text = base_cfg;
    text += "\n[model]\nalpha1 = (0.3, -0.5)\n";  // |alpha1|^2 = 0.34 != 0.45
    CHECK_THROWS_AS(parse_config(text), config_error);
    // A rotated amplitude with the right modulus is fine: 0.09 + 0.36 = 0.45.
    RunConfig rotated = parse_config(base_cfg + "\n[model]\nalpha1 = (0.3, -0.6)\n");
    CHECK(rotated.model.alpha1 == complex(0.3, -0.6));
    text = base_cfg + "\n[model]\nalpha1 = (0.67082039324993692, 0)\n";
    RunConfig cfg = parse_config(text);
    CHECK(cfg.model.alpha1.real() == doctest::Approx(0.67082039324993692));
    CHECK(cfg.model.alpha1.imag() == 0.0);
    CHECK_THROWS_AS(parse_config(base_cfg + "\n[model]\nalpha1 = (0.3\n"), config_error);
}

TEST_CASE("spectrum and counting channels are restricted to the observed ones") {
    std::string msg = expect_config_error(base_cfg + "\n[spectrum]\nchannel = 3\n");
    CHECK(msg.find("channel") != std::string::npos);
    CHECK_THROWS_AS(
        parse_config(base_cfg + "\n[qparam]\nt_grid = 10\nt0 = 0\nchannel = 4\n"),
        config_error);
    CHECK_NOTHROW(
        parse_config(base_cfg + "\n[qparam]\nt_grid = 10\nt0 = 0\nchannel = 3\n"));
}

TEST_CASE("build_model honors frame choice and intensity overrides") {
    RunConfig cfg = parse_config(base_cfg);
    ChannelModel frame = build_model(cfg);
    CHECK(frame.constant);
    CHECK(frame.jump_labels == std::vector<int>{3, 4});
    CHECK(frame.lambda[0] == doctest::Approx(0.05));

    RunConfig lab_cfg = parse_config(base_cfg + "\n[engine]\nframe = lab\n");
    ChannelModel lab = build_model(lab_cfg);
    CHECK_FALSE(lab.constant);

    RunConfig scaled = parse_config(base_cfg +
                                    "\n[engine]\nlambda3 = 0.2\nlambda_scale = 2\n");
    ChannelModel m = build_model(scaled);
    CHECK(m.lambda[0] == doctest::Approx(0.4));   // override then scale
    CHECK(m.lambda[1] == doctest::Approx(0.1));   // default then scale
}

TEST_CASE("initial_state resolves all four choices") {
    RunConfig cfg = parse_config(base_cfg);
    ChannelModel model = build_model(cfg);
    cfg.init_state = InitState::ground;
    CHECK((initial_state(cfg, model) - pauli::ground * pauli::ground.adjoint())
              .cwiseAbs().maxCoeff() < 1e-14);
    cfg.init_state = InitState::excited;
    CHECK((initial_state(cfg, model) - pauli::p_plus).cwiseAbs().maxCoeff() < 1e-14);
    cfg.init_state = InitState::maximally_mixed;
    CHECK((initial_state(cfg, model) - maximally_mixed()).cwiseAbs().maxCoeff() < 1e-14);
    cfg.init_state = InitState::stationary;
    Operator2 rho = initial_state(cfg, model);
    CHECK(is_density_operator(rho, 1e-9, 1e-9, 1e-9));
    // Stationarity under the mean evolution.
    std::vector<Operator2> channels = model.const_ops.diff;
    for (const auto& l : model.const_ops.jump) channels.push_back(l);
    CHECK(liouvillian_apply(model.const_ops.H, channels, rho).cwiseAbs().maxCoeff() <
          1e-9);
    // Stationary initial state needs constant coefficients.
    RunConfig lab_cfg = parse_config(base_cfg + "\n[engine]\nframe = lab\n");
    ChannelModel lab = build_model(lab_cfg);
    CHECK_THROWS_AS(initial_state(lab_cfg, lab), config_error);
}

TEST_CASE("optimize section builds a search problem") {
    std::string text = base_cfg + R"(
[optimize]
objective = s_inel_at
mu_star = 4
free = omega_r delta_nu k1 theta1 theta2
lo = 0.05 -6 0 -6.3 -6.3
hi = 6 6 3 6.3 6.3
n_restarts = 4
max_iter = 200
seed = 5
)";
    RunConfig cfg = parse_config(text);
    REQUIRE(cfg.search.has_value());
    CHECK(cfg.search->objective == SearchObjective::s_inel_at);
    CHECK(cfg.search->mu_star == 4.0);
    CHECK(cfg.search->free_params.size() == 5);
    CHECK(cfg.search_opts.n_restarts == 4);
    CHECK(cfg.search_opts.seed == 5);
    // Mismatched bounds are a configuration error.
    CHECK_THROWS_AS(parse_config(base_cfg + "\n[optimize]\nobjective = q3_longtime\n"
                                            "free = k1\nlo = 0\nhi = 1 2\n"),
                    config_error);
    // Round trip preserves the optimize section.
    RunConfig again = parse_config(dump_config(cfg));
    CHECK(dump_config(again) == dump_config(cfg));
}

TEST_CASE("load_config reports missing files") {
    CHECK_THROWS_AS(load_config("/nonexistent/qfb.cfg"), config_error);
}
