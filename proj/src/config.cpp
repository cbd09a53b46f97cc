#include "qfb/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qfb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

double parse_double(const std::string& path, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        fail(path, "expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& path, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        fail(path, "expected a nonnegative integer, got '" + v + "'");
    }
}

// Complex values: either a plain real or "(re,im)".
complex parse_complex(const std::string& path, const std::string& v) {
    if (!v.empty() && v.front() == '(') {
        if (v.back() != ')') fail(path, "unterminated complex literal '" + v + "'");
        const auto comma = v.find(',');
        if (comma == std::string::npos) fail(path, "complex literal needs '(re,im)'");
        return {parse_double(path, trim(v.substr(1, comma - 1))),
                parse_double(path, trim(v.substr(comma + 1, v.size() - comma - 2)))};
    }
    return {parse_double(path, v), 0.0};
}

std::vector<double> parse_list(const std::string& path, const std::string& v) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(parse_double(path, tok));
    if (out.empty()) fail(path, "expected a list of numbers");
    return out;
}

std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

OscMode parse_osc_mode(const std::string& path, const std::string& v) {
    if (v == "homodyne") return OscMode::homodyne;
    if (v == "heterodyne") return OscMode::heterodyne;
    fail(path, "expected homodyne|heterodyne, got '" + v + "'");
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt(complex z) {
    if (z.imag() == 0.0) return fmt(z.real());
    return "(" + fmt(z.real()) + ", " + fmt(z.imag()) + ")";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    bool have_optimize = false;
    FeedbackSearchProblem search;
    std::vector<double> lo, hi;

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(lineno) + ": malformed section header");
            section = line.substr(1, line.size() - 2);
            static const char* known[] = {"model", "feedback", "oscillator", "grid",
                                          "engine", "ensemble", "outputs", "spectrum",
                                          "qparam", "optimize"};
            bool ok = false;
            for (const char* s : known) ok = ok || section == s;
            if (!ok) throw config_error(section + ": unknown section");
            if (section == "optimize") have_optimize = true;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string path = section.empty() ? key : section + "." + key;
        if (section.empty()) fail(path, "key outside any section");
        if (value.empty()) fail(path, "empty value");

        if (section == "model") {
            auto& m = cfg.model;
            if (key == "nu0") m.nu0 = parse_double(path, value);
            else if (key == "nu") m.nu = parse_double(path, value);
            else if (key == "omega_r") m.omega_r = parse_double(path, value);
            else if (key == "theta") m.theta = parse_double(path, value);
            else if (key == "k0") m.k0 = parse_double(path, value);
            else if (key == "gamma") m.gamma = parse_double(path, value);
            else if (key == "n_bar") m.n_bar = parse_double(path, value);
            else if (key == "alpha1") m.alpha1 = parse_complex(path, value);
            else if (key == "alpha2") m.alpha2 = parse_complex(path, value);
            else if (key == "beta3") m.beta3 = parse_complex(path, value);
            else if (key == "beta4") m.beta4 = parse_complex(path, value);
            else if (key == "epsilon1") m.epsilon1 = parse_double(path, value);
            else if (key == "epsilon2") m.epsilon2 = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "feedback") {
            auto& f = cfg.feedback;
            if (key == "mode") {
                if (value == "none") f.mode = FeedbackMode::none;
                else if (value == "amplitude") f.mode = FeedbackMode::amplitude;
                else if (value == "phase") f.mode = FeedbackMode::phase;
                else if (value == "phase_simplified") f.mode = FeedbackMode::phase_simplified;
                else fail(path, "expected none|amplitude|phase|phase_simplified");
            } else if (key == "k1") f.k1 = parse_double(path, value);
            else if (key == "c") f.c = parse_double(path, value);
            else if (key == "theta_fb") f.theta_fb = parse_double(path, value);
            else if (key == "delay") f.delay = parse_double(path, value);
            else if (key == "detector_gain") f.detector_gain = parse_double(path, value);
            else if (key == "detector_bandwidth") f.detector_bandwidth = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "oscillator") {
            auto& o = cfg.oscillator;
            if (key == "ch1_mode") o.ch1.mode = parse_osc_mode(path, value);
            else if (key == "ch1_nu_het") o.ch1.nu_het = parse_double(path, value);
            else if (key == "ch1_k_neg") o.ch1.k_neg = parse_double(path, value);
            else if (key == "ch2_mode") o.ch2.mode = parse_osc_mode(path, value);
            else if (key == "ch2_nu_het") o.ch2.nu_het = parse_double(path, value);
            else if (key == "ch2_k_neg") o.ch2.k_neg = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "grid") {
            if (key == "t_end") cfg.grid.t_end = parse_double(path, value);
            else if (key == "step") cfg.grid.step = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "engine") {
            if (key == "frame") {
                if (value == "lab") cfg.frame = FrameChoice::lab;
                else if (value == "rotating") cfg.frame = FrameChoice::rotating;
                else fail(path, "expected lab|rotating");
            } else if (key == "estimator") {
                if (value == "weighted") cfg.estimator = Estimator::weighted;
                else if (value == "nonlinear") cfg.estimator = Estimator::nonlinear;
                else fail(path, "expected weighted|nonlinear");
            } else if (key == "init_state") {
                if (value == "ground") cfg.init_state = InitState::ground;
                else if (value == "excited") cfg.init_state = InitState::excited;
                else if (value == "maximally_mixed") cfg.init_state = InitState::maximally_mixed;
                else if (value == "stationary") cfg.init_state = InitState::stationary;
                else fail(path, "expected ground|excited|maximally_mixed|stationary");
            } else if (key == "store_every") {
                cfg.engine.store_every = parse_u64(path, value);
                if (cfg.engine.store_every == 0) fail(path, "must be positive");
            } else if (key == "norm_floor") cfg.engine.norm_floor = parse_double(path, value);
            else if (key == "positivity_tol") cfg.engine.positivity_tol = parse_double(path, value);
            else if (key == "lambda3") cfg.lambda_override[0] = parse_double(path, value);
            else if (key == "lambda4") cfg.lambda_override[1] = parse_double(path, value);
            else if (key == "lambda5") cfg.lambda_override[2] = parse_double(path, value);
            else if (key == "lambda6") cfg.lambda_override[3] = parse_double(path, value);
            else if (key == "lambda_scale") cfg.lambda_scale = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "ensemble") {
            if (key == "n_traj") cfg.n_traj = parse_u64(path, value);
            else if (key == "master_seed") cfg.master_seed = parse_u64(path, value);
            else if (key == "n_threads") cfg.n_threads = static_cast<unsigned>(parse_u64(path, value));
            else fail(path, "unknown key");
        } else if (section == "outputs") {
            auto& o = cfg.outputs;
            if (key == "response") {
                if (value == "dirac") o.response = OutputSpec::Response::dirac;
                else if (value == "exp_filter") o.response = OutputSpec::Response::exp_filter;
                else fail(path, "expected dirac|exp_filter");
            } else if (key == "k") o.k = parse_double(path, value);
            else if (key == "varkappa") o.varkappa = parse_double(path, value);
            else if (key == "noise_amplitude") o.noise_amplitude = parse_double(path, value);
            else fail(path, "unknown key");
        } else if (section == "spectrum") {
            if (key == "mu") cfg.mu_grid = parse_list(path, value);
            else if (key == "channel") {
                cfg.spectrum_channel = static_cast<int>(parse_u64(path, value));
                if (cfg.spectrum_channel != 1 && cfg.spectrum_channel != 2)
                    fail(path, "observed diffusive channels are 1 and 2");
            } else fail(path, "unknown key");
        } else if (section == "qparam") {
            if (key == "t_grid") cfg.t_grid = parse_list(path, value);
            else if (key == "t0") cfg.t0 = parse_double(path, value);
            else if (key == "channel") {
                cfg.qparam_channel = static_cast<int>(parse_u64(path, value));
                if (cfg.qparam_channel != 3)
                    fail(path, "the only observed counting channel is 3");
            } else fail(path, "unknown key");
        } else {  // optimize
            if (key == "objective") {
                if (value == "s_inel_at") search.objective = SearchObjective::s_inel_at;
                else if (value == "q3_longtime") search.objective = SearchObjective::q3_longtime;
                else fail(path, "expected s_inel_at|q3_longtime");
            } else if (key == "mu_star") search.mu_star = parse_double(path, value);
            else if (key == "free") search.free_params = parse_names(value);
            else if (key == "lo") lo = parse_list(path, value);
            else if (key == "hi") hi = parse_list(path, value);
            else if (key == "n_restarts") cfg.search_opts.n_restarts = parse_u64(path, value);
            else if (key == "max_iter") cfg.search_opts.max_iter = parse_u64(path, value);
            else if (key == "seed") cfg.search_opts.seed = parse_u64(path, value);
            else fail(path, "unknown key");
        }
    }

    try {
        cfg.grid = GridSpec::make(cfg.grid.t_end, cfg.grid.step);
    } catch (const std::exception& e) {
        fail("grid", e.what());
    }
    cfg.model.validate();
    cfg.feedback.validate();
    for (std::size_t i = 0; i < 4; ++i)
        if (cfg.lambda_override[i] < 0)
            fail("engine.lambda" + std::to_string(i + 3), "must be nonnegative");
    if (cfg.lambda_scale <= 0) fail("engine.lambda_scale", "must be positive");
    if (cfg.n_traj == 0) fail("ensemble.n_traj", "must be positive");
    cfg.engine.fallback = maximally_mixed();

    if (have_optimize) {
        if (search.free_params.empty()) fail("optimize.free", "no free parameters");
        if (lo.size() != search.free_params.size() || hi.size() != search.free_params.size())
            fail("optimize.lo", "lo/hi must match the number of free parameters");
        search.lo = lo;
        search.hi = hi;
        search.base = cfg.model;
        search.base_fb = cfg.feedback;
        cfg.search = search;
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[model]\n";
    os << "nu0 = " << fmt(cfg.model.nu0) << "\n";
    os << "nu = " << fmt(cfg.model.nu) << "\n";
    os << "omega_r = " << fmt(cfg.model.omega_r) << "\n";
    os << "theta = " << fmt(cfg.model.theta) << "\n";
    os << "k0 = " << fmt(cfg.model.k0) << "\n";
    os << "gamma = " << fmt(cfg.model.gamma) << "\n";
    os << "n_bar = " << fmt(cfg.model.n_bar) << "\n";
    os << "alpha1 = " << fmt(cfg.model.alpha1) << "\n";
    os << "alpha2 = " << fmt(cfg.model.alpha2) << "\n";
    os << "beta3 = " << fmt(cfg.model.beta3) << "\n";
    os << "beta4 = " << fmt(cfg.model.beta4) << "\n";
    os << "epsilon1 = " << fmt(cfg.model.epsilon1) << "\n";
    os << "epsilon2 = " << fmt(cfg.model.epsilon2) << "\n";

    os << "\n[feedback]\n";
    const char* fm = cfg.feedback.mode == FeedbackMode::none ? "none"
                     : cfg.feedback.mode == FeedbackMode::amplitude ? "amplitude"
                     : cfg.feedback.mode == FeedbackMode::phase ? "phase"
                                                                : "phase_simplified";
    os << "mode = " << fm << "\n";
    os << "k1 = " << fmt(cfg.feedback.k1) << "\n";
    os << "c = " << fmt(cfg.feedback.c) << "\n";
    os << "theta_fb = " << fmt(cfg.feedback.theta_fb) << "\n";
    os << "delay = " << fmt(cfg.feedback.delay) << "\n";
    os << "detector_gain = " << fmt(cfg.feedback.detector_gain) << "\n";
    os << "detector_bandwidth = " << fmt(cfg.feedback.detector_bandwidth) << "\n";

    os << "\n[oscillator]\n";
    auto mode_name = [](OscMode m) { return m == OscMode::homodyne ? "homodyne" : "heterodyne"; };
    os << "ch1_mode = " << mode_name(cfg.oscillator.ch1.mode) << "\n";
    os << "ch1_nu_het = " << fmt(cfg.oscillator.ch1.nu_het) << "\n";
    os << "ch1_k_neg = " << fmt(cfg.oscillator.ch1.k_neg) << "\n";
    os << "ch2_mode = " << mode_name(cfg.oscillator.ch2.mode) << "\n";
    os << "ch2_nu_het = " << fmt(cfg.oscillator.ch2.nu_het) << "\n";
    os << "ch2_k_neg = " << fmt(cfg.oscillator.ch2.k_neg) << "\n";

    os << "\n[grid]\n";
    os << "t_end = " << fmt(cfg.grid.t_end) << "\n";
    os << "step = " << fmt(cfg.grid.step) << "\n";

    os << "\n[engine]\n";
    os << "frame = " << (cfg.frame == FrameChoice::lab ? "lab" : "rotating") << "\n";
    os << "estimator = "
       << (cfg.estimator == Estimator::weighted ? "weighted" : "nonlinear") << "\n";
    const char* init = cfg.init_state == InitState::ground ? "ground"
                       : cfg.init_state == InitState::excited ? "excited"
                       : cfg.init_state == InitState::maximally_mixed ? "maximally_mixed"
                                                                      : "stationary";
    os << "init_state = " << init << "\n";
    os << "store_every = " << cfg.engine.store_every << "\n";
    os << "norm_floor = " << fmt(cfg.engine.norm_floor) << "\n";
    os << "positivity_tol = " << fmt(cfg.engine.positivity_tol) << "\n";
    for (std::size_t i = 0; i < 4; ++i)
        os << "lambda" << i + 3 << " = " << fmt(cfg.lambda_override[i]) << "\n";
    os << "lambda_scale = " << fmt(cfg.lambda_scale) << "\n";

    os << "\n[ensemble]\n";
    os << "n_traj = " << cfg.n_traj << "\n";
    os << "master_seed = " << cfg.master_seed << "\n";
    os << "n_threads = " << cfg.n_threads << "\n";

    os << "\n[outputs]\n";
    os << "response = "
       << (cfg.outputs.response == OutputSpec::Response::dirac ? "dirac" : "exp_filter") << "\n";
    os << "k = " << fmt(cfg.outputs.k) << "\n";
    os << "varkappa = " << fmt(cfg.outputs.varkappa) << "\n";
    os << "noise_amplitude = " << fmt(cfg.outputs.noise_amplitude) << "\n";

    if (!cfg.mu_grid.empty()) {
        os << "\n[spectrum]\n";
        os << "mu =";
        for (double m : cfg.mu_grid) os << " " << fmt(m);
        os << "\nchannel = " << cfg.spectrum_channel << "\n";
    }
    if (!cfg.t_grid.empty()) {
        os << "\n[qparam]\n";
        os << "t_grid =";
        for (double t : cfg.t_grid) os << " " << fmt(t);
        os << "\nt0 = " << fmt(cfg.t0) << "\n";
        os << "channel = " << cfg.qparam_channel << "\n";
    }
    if (cfg.search) {
        os << "\n[optimize]\n";
        os << "objective = "
           << (cfg.search->objective == SearchObjective::s_inel_at ? "s_inel_at" : "q3_longtime")
           << "\n";
        os << "mu_star = " << fmt(cfg.search->mu_star) << "\n";
        os << "free =";
        for (const auto& n : cfg.search->free_params) os << " " << n;
        os << "\nlo =";
        for (double x : cfg.search->lo) os << " " << fmt(x);
        os << "\nhi =";
        for (double x : cfg.search->hi) os << " " << fmt(x);
        os << "\nn_restarts = " << cfg.search_opts.n_restarts << "\n";
        os << "max_iter = " << cfg.search_opts.max_iter << "\n";
        os << "seed = " << cfg.search_opts.seed << "\n";
    }
    return os.str();
}

Operator2 initial_state(const RunConfig& cfg, const ChannelModel& model) {
    switch (cfg.init_state) {
        case InitState::ground: return pauli::ground * pauli::ground.adjoint();
        case InitState::excited: return pauli::excited * pauli::excited.adjoint();
        case InitState::maximally_mixed: return maximally_mixed();
        case InitState::stationary: break;
    }
    if (!model.constant)
        throw config_error(
            "engine.init_state: stationary requires constant coefficients "
            "(rotating frame)");
    std::vector<Operator2> ls = model.const_ops.diff;
    for (const auto& l : model.const_ops.jump) ls.push_back(l);
    return stationary_state(superop_matrix(model.const_ops.H, ls));
}

ChannelModel build_model(const RunConfig& cfg) {
    ChannelModel model = cfg.frame == FrameChoice::rotating
                             ? make_frame_model(cfg.model, cfg.oscillator, cfg.feedback)
                             : make_lab_model(cfg.model, cfg.oscillator, cfg.feedback);
    for (std::size_t i = 0; i < model.jump_labels.size(); ++i) {
        const double over = cfg.lambda_override[poisson_slot(model.jump_labels[i])];
        if (over > 0) model.lambda[i] = over;
        model.lambda[i] *= cfg.lambda_scale;
    }
    return model;
}

}  // namespace qfb
