#include "qfb/stats.hpp"

#include <cmath>
#include <random>

namespace qfb {

namespace {

// Running mean/covariance over per-trajectory statistics, reduced in
// trajectory order for determinism.
class Accumulator {
  public:
    explicit Accumulator(std::size_t dim) : dim_(dim), sum_(dim, 0.0), sumsq_(dim * dim, 0.0) {}

    void add(const std::vector<double>& x) {
        ++n_;
        for (std::size_t i = 0; i < dim_; ++i) {
            sum_[i] += x[i];
            for (std::size_t j = 0; j < dim_; ++j) sumsq_[i * dim_ + j] += x[i] * x[j];
        }
    }

    std::size_t count() const { return n_; }
    double mean(std::size_t i) const { return sum_[i] / static_cast<double>(n_); }
    double cov(std::size_t i, std::size_t j) const {
        const double n = static_cast<double>(n_);
        return (sumsq_[i * dim_ + j] / n - mean(i) * mean(j)) * n / (n - 1.0);
    }
    double stderr_of_mean(std::size_t i) const {
        return std::sqrt(std::max(cov(i, i), 0.0) / static_cast<double>(n_));
    }
    // Delta-method standard error of g(means) with gradient grad.
    double stderr_delta(const std::vector<double>& grad) const {
        double v = 0;
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) v += grad[i] * cov(i, j) * grad[j];
        return std::sqrt(std::max(v, 0.0) / static_cast<double>(n_));
    }

  private:
    std::size_t dim_, n_ = 0;
    std::vector<double> sum_, sumsq_;
};

// Runs an ensemble where each trajectory reduces to a fixed-size statistics
// vector; per-trajectory results land in preallocated slots so the final
// reduction order does not depend on the thread schedule.
std::vector<std::vector<double>> map_trajectories(
    const EnsembleSpec& ens, const ChannelLayout& layout,
    const std::function<std::vector<double>(const NoisePath&)>& per_traj) {
    std::vector<std::vector<double>> results(ens.n_traj);
    for_each_trajectory(ens.n_traj, ens.master_seed, ens.n_threads,
                        [&](std::size_t idx, std::uint64_t seed) {
                            results[idx] = per_traj(sample_path(ens.grid, layout, seed));
                        });
    return results;
}

class FunctionalObserver : public StepObserver {
  public:
    explicit FunctionalObserver(std::function<void(std::size_t, double, const OpVec&, double,
                                                   const double*, const std::uint32_t*)>
                                    fn)
        : fn_(std::move(fn)) {}
    void on_step(std::size_t n, double t, const OpVec& sigma, double p,
                 const double* dB, const std::uint32_t* dN) override {
        fn_(n, t, sigma, p, dB, dN);
    }

  private:
    std::function<void(std::size_t, double, const OpVec&, double, const double*,
                       const std::uint32_t*)>
        fn_;
};

}  // namespace

BuiltOutputs build_outputs(const TrajectoryRecord& record, const OutputSpec& spec,
                           std::uint64_t noise_seed) {
    BuiltOutputs out;
    const double h = record.grid.step;
    std::mt19937_64 eng(split_seed(noise_seed, 0x7001));
    std::normal_distribution<double> gauss(0.0, std::sqrt(h));
    FeedbackSpec filter;
    filter.detector_gain = spec.k;
    filter.detector_bandwidth = spec.varkappa;
    for (const auto& channel : record.outputs.dB) {
        std::vector<double> j;
        j.reserve(channel.size());
        double current = 0.0;
        for (double db : channel) {
            double x = db;
            if (spec.noise_amplitude != 0.0) x += spec.noise_amplitude * gauss(eng);
            if (spec.response == OutputSpec::Response::dirac) {
                j.push_back(x);
            } else {
                current = feedback_current_update(current, x, h, filter);
                j.push_back(current);
            }
        }
        out.J.push_back(std::move(j));
    }
    out.I = record.outputs.dN;
    return out;
}

MeanEstimate weighted_expectation(
    const ChannelModel& model, const EnsembleSpec& ens,
    const std::function<double(const TrajectoryRecord&)>& functional) {
    const ChannelLayout layout = model.noise_layout();
    auto results = map_trajectories(ens, layout, [&](const NoisePath& path) {
        TrajectoryRecord rec = integrate_linear_sme(model, path, ens.rho0, ens.engine);
        const double p = rec.weight.back();
        return std::vector<double>{p * functional(rec)};
    });
    Accumulator acc(1);
    for (const auto& r : results) acc.add(r);
    return {acc.mean(0), acc.stderr_of_mean(0)};
}

SpectrumEstimate estimate_spectrum(const ChannelModel& model, const EnsembleSpec& ens,
                                   std::size_t diff_channel,
                                   const std::vector<double>& mu_grid,
                                   Estimator estimator) {
    if (mu_grid.empty())
        throw std::invalid_argument("estimate_spectrum: empty frequency grid");
    if (diff_channel >= model.diff_labels.size())
        throw std::invalid_argument("estimate_spectrum: no such diffusive channel");
    const double T = ens.grid.t_end;
    const std::size_t nmu = mu_grid.size();
    const bool weighted = estimator == Estimator::weighted;
    const ChannelLayout layout =
        weighted ? model.noise_layout() : nonlinear_layout(model);

    // Per trajectory and per mu: a = w |Z|^2 / T, Re(w Z), Im(w Z) with
    // Z = sum_n e^{i mu t_n} dB(t_n) (left-endpoint Ito convention).
    auto per_traj = [&](const NoisePath& path) {
        std::vector<complex> z(nmu, complex(0, 0));
        double p_final = 1.0;
        FunctionalObserver obs([&](std::size_t, double t, const OpVec&, double p,
                                   const double* dB, const std::uint32_t*) {
            const double db = dB[diff_channel];
            for (std::size_t q = 0; q < nmu; ++q)
                z[q] += std::polar(db, mu_grid[q] * t);
            p_final = p;
        });
        if (weighted)
            run_linear_sme(model, path, ens.rho0, ens.engine, obs);
        else
            run_nonlinear(model, path, ens.rho0, ens.engine, NonlinearVariant::sme, obs);
        const double w = weighted ? p_final : 1.0;
        std::vector<double> stats(3 * nmu);
        for (std::size_t q = 0; q < nmu; ++q) {
            stats[3 * q] = w * std::norm(z[q]) / T;
            stats[3 * q + 1] = w * z[q].real();
            stats[3 * q + 2] = w * z[q].imag();
        }
        return stats;
    };
    auto results = map_trajectories(ens, layout, per_traj);
    Accumulator acc(3 * nmu);
    for (const auto& r : results) acc.add(r);

    SpectrumEstimate est;
    est.mu = mu_grid;
    est.T = T;
    est.n_traj = ens.n_traj;
    for (std::size_t q = 0; q < nmu; ++q) {
        const double a = acc.mean(3 * q);
        const double br = acc.mean(3 * q + 1);
        const double bi = acc.mean(3 * q + 2);
        est.s_inel.push_back(a - (br * br + bi * bi) / T);
        std::vector<double> grad(3 * nmu, 0.0);
        grad[3 * q] = 1.0;
        grad[3 * q + 1] = -2.0 * br / T;
        grad[3 * q + 2] = -2.0 * bi / T;
        est.err.push_back(acc.stderr_delta(grad));
    }
    // Elastic spike coefficient from the squared mean at the smallest |mu|.
    std::size_t q0 = 0;
    for (std::size_t q = 1; q < nmu; ++q)
        if (std::abs(mu_grid[q]) < std::abs(mu_grid[q0])) q0 = q;
    const double br = acc.mean(3 * q0 + 1), bi = acc.mean(3 * q0 + 2);
    est.s_el_coefficient = 2 * M_PI * (br * br + bi * bi) / (T * T);
    std::vector<double> grad(3 * nmu, 0.0);
    grad[3 * q0 + 1] = 4 * M_PI * br / (T * T);
    grad[3 * q0 + 2] = 4 * M_PI * bi / (T * T);
    est.s_el_stderr = acc.stderr_delta(grad);
    return est;
}

QEstimate estimate_mandel_q(const ChannelModel& model, const EnsembleSpec& ens,
                            std::size_t jump_channel,
                            const std::vector<double>& t_grid, double t0,
                            Estimator estimator) {
    if (t_grid.empty()) throw std::invalid_argument("estimate_mandel_q: empty t grid");
    if (jump_channel >= model.jump_labels.size())
        throw std::invalid_argument("estimate_mandel_q: no such counting channel");
    const double h = ens.grid.step;
    const double t_max = t0 + t_grid.back();
    if (t_max > ens.grid.t_end + 1e-9)
        throw std::invalid_argument("estimate_mandel_q: window extends past the grid");
    const bool weighted = estimator == Estimator::weighted;
    const ChannelLayout layout =
        weighted ? model.noise_layout() : nonlinear_layout(model);
    const std::size_t nt = t_grid.size();
    const auto n0 = static_cast<std::size_t>(std::llround(t0 / h));
    std::vector<std::size_t> n_end(nt);
    for (std::size_t q = 0; q < nt; ++q)
        n_end[q] = static_cast<std::size_t>(std::llround((t0 + t_grid[q]) / h));

    auto per_traj = [&](const NoisePath& path) {
        std::vector<double> counts(nt, 0.0);
        double running = 0.0;
        double p_final = 1.0;
        FunctionalObserver obs([&](std::size_t n, double, const OpVec&, double p,
                                   const double*, const std::uint32_t* dN) {
            if (n >= n0) {
                running += dN[jump_channel];
                for (std::size_t q = 0; q < nt; ++q)
                    if (n + 1 == n_end[q]) counts[q] = running;
            }
            p_final = p;
        });
        if (weighted)
            run_linear_sme(model, path, ens.rho0, ens.engine, obs);
        else
            run_nonlinear(model, path, ens.rho0, ens.engine, NonlinearVariant::sme, obs);
        const double w = weighted ? p_final : 1.0;
        std::vector<double> stats(2 * nt);
        for (std::size_t q = 0; q < nt; ++q) {
            stats[2 * q] = w * counts[q];
            stats[2 * q + 1] = w * counts[q] * counts[q];
        }
        return stats;
    };
    auto results = map_trajectories(ens, layout, per_traj);
    Accumulator acc(2 * nt);
    for (const auto& r : results) acc.add(r);

    QEstimate est;
    est.t_grid = t_grid;
    est.t0 = t0;
    est.n_traj = ens.n_traj;
    for (std::size_t q = 0; q < nt; ++q) {
        const double mean_n = acc.mean(2 * q);
        const double mean_n2 = acc.mean(2 * q + 1);
        if (mean_n <= 0)
            throw numerical_error("estimate_mandel_q: zero mean count, Q undefined");
        est.q.push_back(mean_n2 / mean_n - mean_n - 1.0);
        std::vector<double> grad(2 * nt, 0.0);
        grad[2 * q] = -mean_n2 / (mean_n * mean_n) - 1.0;
        grad[2 * q + 1] = 1.0 / mean_n;
        est.err.push_back(acc.stderr_delta(grad));
    }
    est.m_rate = acc.mean(2 * (nt - 1)) / t_grid.back();
    return est;
}

AutocorrEstimate autocorrelation_d(const ChannelModel& model, const EnsembleSpec& ens,
                                   std::size_t diff_channel, double s, double t,
                                   double n_inf, bool feedback_active) {
    if (!(0 < s && s < t))
        throw std::invalid_argument("autocorrelation_d: requires 0 < s < t");
    if (feedback_active && model.diff_labels[diff_channel] == 1)
        throw std::invalid_argument(
            "autocorrelation_d: channel drives the feedback, formula invalid");
    const double h = ens.grid.step;
    const auto ns = static_cast<std::size_t>(std::llround(s / h));
    const auto ntp = static_cast<std::size_t>(std::llround(t / h));
    const ChannelLayout layout = model.noise_layout();

    // b(t,s) = E_Q tr{(L + L*) A(t,s)[L sigma(s-) + sigma(s-) L*]} and the
    // same with the n_inf sigma(s-) subtraction. Auxiliary operators ride
    // along the stored per-step maps.
    class Obs : public StepObserver {
      public:
        Obs(const ChannelModel& model, std::size_t chan, std::size_t ns, std::size_t nt,
            double n_inf)
            : model_(model), chan_(chan), ns_(ns), nt_(nt), n_inf_(n_inf) {}
        bool needs_step_map() const override { return true; }
        void on_step_map(const SuperOp2& m) override { pending_ = m; }
        void on_step(std::size_t n, double, const OpVec& sigma, double,
                     const double*, const std::uint32_t*) override {
            if (n + 1 == ns_) {
                const Operator2 sig = unvectorize(sigma);
                const Operator2& l = model_.const_ops.diff[chan_];
                aux_b_ = vectorize(l * sig + sig * l.adjoint());
                aux_d_ = aux_b_ - n_inf_ * sigma;
                active_ = true;
            } else if (active_ && n + 1 <= nt_) {
                aux_b_ = pending_ * aux_b_;
                aux_d_ = pending_ * aux_d_;
            }
        }
        std::pair<double, double> finish() const {
            const Operator2& l = model_.const_ops.diff[chan_];
            const Operator2 quad = l + l.adjoint();
            return {(quad * unvectorize(aux_b_)).trace().real(),
                    (quad * unvectorize(aux_d_)).trace().real()};
        }

      private:
        const ChannelModel& model_;
        std::size_t chan_, ns_, nt_;
        double n_inf_;
        bool active_ = false;
        OpVec aux_b_ = OpVec::Zero(), aux_d_ = OpVec::Zero();
        SuperOp2 pending_;
    };
    if (!model.constant)
        throw std::invalid_argument(
            "autocorrelation_d: implemented for constant-coefficient models");

    auto per_traj = [&](const NoisePath& path) {
        Obs obs(model, diff_channel, ns, ntp, n_inf);
        run_linear_sme(model, path, ens.rho0, ens.engine, obs);
        auto [b, d] = obs.finish();
        return std::vector<double>{b, d};
    };
    auto results = map_trajectories(ens, layout, per_traj);
    Accumulator acc(2);
    for (const auto& r : results) acc.add(r);
    return {acc.mean(0), acc.stderr_of_mean(0), acc.mean(1), acc.stderr_of_mean(1)};
}

}  // namespace qfb
