#include "qfb/runner.hpp"

#include <cmath>
#include <sstream>

#include "qfb/bloch.hpp"
#include "qfb/search.hpp"
#include "qfb/stats.hpp"

namespace qfb {

namespace {

EnsembleSpec make_ensemble(const RunConfig& cfg, const ChannelModel& model) {
    EnsembleSpec ens;
    ens.n_traj = cfg.n_traj;
    ens.master_seed = cfg.master_seed;
    ens.n_threads = cfg.n_threads ? cfg.n_threads : default_thread_count();
    ens.grid = cfg.grid;
    ens.rho0 = initial_state(cfg, model);
    ens.engine = cfg.engine;
    return ens;
}

std::size_t diff_index(const ChannelModel& model, int label) {
    for (std::size_t i = 0; i < model.diff_labels.size(); ++i)
        if (model.diff_labels[i] == label) return i;
    throw config_error("spectrum.channel: channel " + std::to_string(label) +
                       " is not an active diffusive channel of this model");
}

std::size_t jump_index(const ChannelModel& model, int label) {
    for (std::size_t i = 0; i < model.jump_labels.size(); ++i)
        if (model.jump_labels[i] == label) return i;
    throw config_error("qparam.channel: channel " + std::to_string(label) +
                       " has zero rate in this model");
}

void common_meta(ResultTable& table, const RunConfig& cfg) {
    table.add_meta("units", "frequencies and rates in units of gamma");
    table.add_meta("gamma", std::to_string(cfg.model.gamma));
    table.add_meta("master_seed", std::to_string(cfg.master_seed));
}

ResultTable spectrum_analytic(const RunConfig& cfg) {
    if (cfg.mu_grid.empty())
        throw config_error("spectrum.mu: required for spectrum-analytic");
    const BlochSystem bs = build_bloch(cfg.model, cfg.feedback);
    ResultTable t;
    t.columns = {"mu", "s_inel"};
    for (double mu : cfg.mu_grid) t.rows.push_back({mu, spectrum_inelastic(bs, mu)});
    common_meta(t, cfg);
    t.add_meta("s_el", std::to_string(spectrum_elastic_weight(bs)));
    t.add_meta("stationary_v", std::to_string(bs.v()));
    t.add_meta("condition_A", std::to_string(bs.condition));
    return t;
}

ResultTable spectrum_mc(const RunConfig& cfg) {
    if (cfg.mu_grid.empty()) throw config_error("spectrum.mu: required for spectrum-mc");
    const ChannelModel model = build_model(cfg);
    const EnsembleSpec ens = make_ensemble(cfg, model);
    const std::size_t chan = diff_index(model, cfg.spectrum_channel);
    const SpectrumEstimate est =
        estimate_spectrum(model, ens, chan, cfg.mu_grid, cfg.estimator);
    ResultTable t;
    t.columns = {"mu", "s_inel", "stderr"};
    for (std::size_t q = 0; q < est.mu.size(); ++q)
        t.rows.push_back({est.mu[q], est.s_inel[q], est.err[q]});
    common_meta(t, cfg);
    t.add_meta("s_el", std::to_string(est.s_el_coefficient));
    t.add_meta("s_el_stderr", std::to_string(est.s_el_stderr));
    t.add_meta("T", std::to_string(est.T));
    t.add_meta("n_traj", std::to_string(est.n_traj));
    t.add_meta("estimator", cfg.estimator == Estimator::weighted ? "weighted" : "nonlinear");
    return t;
}

ResultTable qparam_analytic(const RunConfig& cfg) {
    if (cfg.t_grid.empty()) throw config_error("qparam.t_grid: required for qparam-analytic");
    const BlochSystem bs = build_bloch(cfg.model, cfg.feedback);
    const double b3 = std::norm(cfg.model.beta3);
    ResultTable t;
    t.columns = {"t", "q3"};
    for (double tt : cfg.t_grid) t.rows.push_back({tt, mandel_q3(bs, b3, tt)});
    common_meta(t, cfg);
    t.add_meta("q3_longtime", std::to_string(mandel_q3_longtime(bs, b3)));
    t.add_meta("m3_rate", std::to_string(mandel_m3_rate(bs, b3)));
    return t;
}

ResultTable qparam_mc(const RunConfig& cfg) {
    if (cfg.t_grid.empty()) throw config_error("qparam.t_grid: required for qparam-mc");
    const ChannelModel model = build_model(cfg);
    const EnsembleSpec ens = make_ensemble(cfg, model);
    const std::size_t chan = jump_index(model, cfg.qparam_channel);
    const QEstimate est =
        estimate_mandel_q(model, ens, chan, cfg.t_grid, cfg.t0, cfg.estimator);
    ResultTable t;
    t.columns = {"t", "q3", "stderr"};
    for (std::size_t q = 0; q < est.t_grid.size(); ++q)
        t.rows.push_back({est.t_grid[q], est.q[q], est.err[q]});
    common_meta(t, cfg);
    t.add_meta("m3_rate", std::to_string(est.m_rate));
    t.add_meta("t0", std::to_string(est.t0));
    t.add_meta("n_traj", std::to_string(est.n_traj));
    t.add_meta("estimator", cfg.estimator == Estimator::weighted ? "weighted" : "nonlinear");
    return t;
}

ResultTable trajectory(const RunConfig& cfg) {
    const ChannelModel model = build_model(cfg);
    const Operator2 rho0 = initial_state(cfg, model);
    const bool weighted = cfg.estimator == Estimator::weighted;
    const ChannelLayout layout =
        weighted ? model.noise_layout() : nonlinear_layout(model);
    const NoisePath path =
        sample_path(cfg.grid, layout, split_seed(cfg.master_seed, 0));
    const TrajectoryRecord rec =
        weighted ? integrate_linear_sme(model, path, rho0, cfg.engine)
                 : integrate_nonlinear(model, path, rho0, cfg.engine,
                                       NonlinearVariant::sme);

    ResultTable t;
    t.columns = {"t", "re_rho00", "re_rho11", "re_rho01", "im_rho01", "p"};
    for (std::size_t c = 0; c < rec.diff_labels.size(); ++c)
        t.columns.push_back("B" + std::to_string(rec.diff_labels[c]));
    for (std::size_t c = 0; c < rec.jump_labels.size(); ++c)
        t.columns.push_back("N" + std::to_string(rec.jump_labels[c]));

    std::vector<double> b(rec.diff_labels.size(), 0.0);
    std::vector<double> n(rec.jump_labels.size(), 0.0);
    std::size_t step = 0;
    for (std::size_t s = 0; s < rec.times.size(); ++s) {
        // Accumulate raw outputs up to the stored time.
        const auto target = static_cast<std::size_t>(
            std::llround(rec.times[s] / rec.grid.step));
        for (; step < target; ++step) {
            for (std::size_t c = 0; c < b.size(); ++c) b[c] += rec.outputs.dB[c][step];
            for (std::size_t c = 0; c < n.size(); ++c) n[c] += rec.outputs.dN[c][step];
        }
        const Operator2& rho = rec.rho[s];
        std::vector<double> row = {rec.times[s], rho(0, 0).real(), rho(1, 1).real(),
                                   rho(0, 1).real(), rho(0, 1).imag(), rec.weight[s]};
        row.insert(row.end(), b.begin(), b.end());
        row.insert(row.end(), n.begin(), n.end());
        t.rows.push_back(std::move(row));
    }
    common_meta(t, cfg);
    t.add_meta("seed", std::to_string(path.seed));
    t.add_meta("estimator", weighted ? "weighted" : "nonlinear");
    return t;
}

ResultTable optimize(const RunConfig& cfg) {
    if (!cfg.search) throw config_error("optimize: section missing from config");
    const SearchResult res = minimize_feedback(*cfg.search, cfg.search_opts);
    ResultTable t;
    t.columns = {"value"};
    for (const auto& name : cfg.search->free_params) t.columns.push_back(name);
    std::vector<double> row = {res.value};
    row.insert(row.end(), res.x.begin(), res.x.end());
    t.rows.push_back(std::move(row));
    common_meta(t, cfg);
    t.add_meta("n_eval", std::to_string(res.n_eval));
    t.add_meta("n_restarts", std::to_string(cfg.search_opts.n_restarts));
    std::ostringstream trace;
    for (std::size_t i = 0; i < res.trace.best_value.size(); ++i)
        trace << (i ? " " : "") << res.trace.best_value[i];
    t.add_meta("incumbent_trace", trace.str());
    const char* obj = cfg.search->objective == SearchObjective::s_inel_at
                          ? "s_inel_at" : "q3_longtime";
    t.add_meta("objective", obj);
    return t;
}

ResultTable validate(const RunConfig& cfg) {
    // Parsing already validated parameters; also exercise model assembly so
    // frame/oscillator incompatibilities surface here rather than mid-run.
    const ChannelModel model = build_model(cfg);
    initial_state(cfg, model);
    ResultTable t;
    t.columns = {};
    common_meta(t, cfg);
    t.add_meta("status", "ok");
    t.add_meta("jump_channels", std::to_string(model.jump_labels.size()));
    t.add_meta("diffusive_channels", std::to_string(model.diff_labels.size()));
    return t;
}

}  // namespace

ResultTable run_operation(const RunConfig& cfg, const std::string& op) {
    if (op == "spectrum-analytic") return spectrum_analytic(cfg);
    if (op == "spectrum-mc") return spectrum_mc(cfg);
    if (op == "qparam-analytic") return qparam_analytic(cfg);
    if (op == "qparam-mc") return qparam_mc(cfg);
    if (op == "trajectory") return trajectory(cfg);
    if (op == "optimize") return optimize(cfg);
    if (op == "validate") return validate(cfg);
    throw config_error("unknown operation '" + op + "'");
}

}  // namespace qfb
