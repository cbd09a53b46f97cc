#include "qfb/trajectory.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

namespace qfb {

namespace {

void hermitize_vec(OpVec& v) {
    v(0) = complex(v(0).real(), 0.0);
    v(3) = complex(v(3).real(), 0.0);
    const complex m = 0.5 * (v(1) + std::conj(v(2)));
    v(1) = m;
    v(2) = std::conj(m);
}

double min_eig_herm_vec(const OpVec& v) {
    const double tr = v(0).real() + v(3).real();
    const double det = v(0).real() * v(3).real() - (v(1) * v(2)).real();
    const double disc = std::max(tr * tr - 4 * det, 0.0);
    return 0.5 * (tr - std::sqrt(disc));
}

void check_positivity(const OpVec& v, double tol, const char* what) {
    const double tr = v(0).real() + v(3).real();
    if (!std::isfinite(tr) || !std::isfinite(v.squaredNorm()))
        throw numerical_error(std::string(what) + ": state diverged");
    if (!std::isfinite(tol)) return;
    // Scale by the spectral radius, not the trace, so near-cancelling
    // traces do not inflate the relative violation.
    const double scale = std::max(std::abs(tr), std::sqrt(v.squaredNorm()));
    if (min_eig_herm_vec(v) < -tol * std::max(scale, 1e-30))
        throw numerical_error(std::string(what) +
                              ": state left the positive cone beyond tolerance "
                              "(step size too large)");
}

Operator2 apply_liouville_direct(const ModelOps& ops, const Operator2& s) {
    const complex i(0, 1);
    Operator2 out = -i * (ops.H * s - s * ops.H);
    auto dissipator = [&out, &s](const Operator2& l) {
        const Operator2 ldl = l.adjoint() * l;
        out += l * s * l.adjoint() - 0.5 * (ldl * s + s * ldl);
    };
    for (const auto& l : ops.diff) dissipator(l);
    for (const auto& l : ops.jump) dissipator(l);
    return out;
}

// Tracks the cumulative coefficient noises and the feedback current along
// the grid, with the delayed read-out convention (zero before the delay).
class PathTracker {
  public:
    PathTracker(const ChannelModel& model, const NoisePath& path, const FeedbackSpec* fb)
        : path_(path), fb_(fb) {
        const double h = path.grid.step;
        delay_steps_ = fb ? static_cast<std::size_t>(std::llround(fb->delay / h)) : 0;
        if (delay_steps_ > 0) j1_history_.assign(path.grid.n_steps + 1, 0.0);
        (void)model;
    }

    const PathCtx& ctx() const { return ctx_; }

    // Advance past step n. db1_override lets the physical-measure run feed
    // the reconstructed output increment instead of the raw one.
    void advance(std::size_t n, std::optional<double> db1_override = std::nullopt) {
        for (int label = -2; label <= 2; ++label) {
            const auto& inc = path_.wiener[wiener_slot(label)];
            if (inc.empty()) continue;
            double d = inc[n];
            if (label == 1 && db1_override) d = *db1_override;
            ctx_.b[wiener_slot(label)] += d;
        }
        if (fb_) {
            double db1 = 0.0;
            const auto& inc1 = path_.wiener[wiener_slot(1)];
            if (!inc1.empty()) db1 = db1_override ? *db1_override : inc1[n];
            j1_ = feedback_current_update(j1_, db1, path_.grid.step, *fb_);
            if (delay_steps_ > 0) {
                j1_history_[n + 1] = j1_;
                const std::size_t idx = n + 1 >= delay_steps_ ? n + 1 - delay_steps_ : 0;
                ctx_.j1_delayed = n + 1 >= delay_steps_ ? j1_history_[idx] : 0.0;
            } else {
                ctx_.j1_delayed = j1_;
            }
        }
    }

  private:
    const NoisePath& path_;
    const FeedbackSpec* fb_;
    PathCtx ctx_{};
    double j1_ = 0.0;
    std::size_t delay_steps_ = 0;
    std::vector<double> j1_history_;
};

std::mt19937_64 thinning_engine(std::uint64_t path_seed, int label) {
    return std::mt19937_64(split_seed(path_seed, 0x300 + static_cast<std::uint64_t>(label)));
}

}  // namespace

double OutputRecord::B_total(std::size_t channel) const {
    double s = 0;
    for (double x : dB[channel]) s += x;
    return s;
}

std::uint64_t OutputRecord::N_total(std::size_t channel) const {
    std::uint64_t s = 0;
    for (auto x : dN[channel]) s += x;
    return s;
}

void run_linear_sme(const ChannelModel& model, const NoisePath& path,
                    const Operator2& rho0, const EngineConfig& cfg, StepObserver& obs) {
    const std::size_t n_steps = path.grid.n_steps;
    const double h = path.grid.step;
    const std::size_t nd = model.diff_labels.size();
    const std::size_t nj = model.jump_labels.size();

    // Precompute the per-step jump counts and driver increment pointers.
    std::vector<std::vector<std::uint32_t>> jump_counts(nj);
    for (std::size_t k = 0; k < nj; ++k)
        jump_counts[k] = path.jumps_per_step(model.jump_labels[k]);
    std::vector<const double*> db_ptr(nd);
    for (std::size_t i = 0; i < nd; ++i) {
        const auto& inc = path.dB(model.diff_labels[i]);
        if (inc.size() != n_steps)
            throw std::invalid_argument("run_linear_sme: path missing a driver channel");
        db_ptr[i] = inc.data();
    }

    const bool want_map = obs.needs_step_map();

    // Constant-coefficient fast path: everything expressed as 4x4 maps.
    SuperOp2 drift_map;  // I + h(L - sum_k lambda_k (J_k - I))
    std::vector<SuperOp2> diff_map(nd), jump_map(nj);
    ModelOps ops;
    auto rebuild_maps = [&](const ModelOps& o) {
        std::vector<Operator2> all = o.diff;
        all.insert(all.end(), o.jump.begin(), o.jump.end());
        SuperOp2 gen = superop_matrix(hermitize(o.H), all);
        for (std::size_t k = 0; k < nj; ++k) {
            jump_map[k] = sandwich_superop(o.jump[k], o.jump[k].adjoint()) / model.lambda[k];
            gen -= model.lambda[k] * (jump_map[k] - SuperOp2::Identity());
        }
        drift_map = SuperOp2::Identity() + h * gen;
        for (std::size_t i = 0; i < nd; ++i) diff_map[i] = diffusive_superop(o.diff[i]);
    };
    if (model.constant) {
        ops = model.const_ops;
        rebuild_maps(ops);
    }

    PathTracker tracker(model, path, nullptr);
    OpVec v = vectorize(hermitize(rho0));
    std::vector<double> db(nd);
    std::vector<std::uint32_t> dn(nj);
    OpVec vnew;
    SuperOp2 step_map;

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = path.grid.time_at(n);
        for (std::size_t i = 0; i < nd; ++i) db[i] = db_ptr[i][n];
        for (std::size_t k = 0; k < nj; ++k) dn[k] = jump_counts[k][n];

        if (model.constant || want_map) {
            if (!model.constant) {
                model.eval(t, tracker.ctx(), ops);
                rebuild_maps(ops);
            }
            if (want_map) {
                step_map = drift_map;
                for (std::size_t i = 0; i < nd; ++i) step_map += db[i] * diff_map[i];
                for (std::size_t k = 0; k < nj; ++k)
                    if (dn[k])
                        step_map += static_cast<double>(dn[k]) *
                                    (jump_map[k] - SuperOp2::Identity());
                obs.on_step_map(step_map);
                vnew.noalias() = step_map * v;
            } else {
                vnew.noalias() = drift_map * v;
                for (std::size_t i = 0; i < nd; ++i)
                    vnew.noalias() += db[i] * (diff_map[i] * v);
                for (std::size_t k = 0; k < nj; ++k)
                    if (dn[k])
                        vnew.noalias() +=
                            static_cast<double>(dn[k]) * (jump_map[k] * v - v);
            }
        } else {
            model.eval(t, tracker.ctx(), ops);
            Operator2 s = unvectorize(v);
            Operator2 snew = s + h * apply_liouville_direct(ops, s);
            for (std::size_t i = 0; i < nd; ++i) {
                const Operator2& l = ops.diff[i];
                snew += db[i] * (l * s + s * l.adjoint());
            }
            for (std::size_t k = 0; k < nj; ++k) {
                const Operator2& l = ops.jump[k];
                const Operator2 jump = l * s * l.adjoint() / model.lambda[k] - s;
                snew += (static_cast<double>(dn[k]) - model.lambda[k] * h) * jump;
            }
            vnew = vectorize(snew);
        }
        hermitize_vec(vnew);
        check_positivity(vnew, cfg.positivity_tol, "linear SME");
        v = vnew;
        const double p = v(0).real() + v(3).real();
        obs.on_step(n, t, v, p, db.data(), dn.data());
        tracker.advance(n);
    }
}

namespace {

// Shared recording observer for both measures.
class Recorder : public StepObserver {
  public:
    Recorder(const ChannelModel& model, const NoisePath& path, const Operator2& rho0,
             const EngineConfig& cfg, bool physical)
        : model_(model), cfg_(cfg), physical_(physical) {
        rec_.grid = path.grid;
        rec_.store_every = cfg.store_every;
        rec_.diff_labels = model.diff_labels;
        rec_.jump_labels = model.jump_labels;
        rec_.fallback_state = cfg.fallback;
        rec_.outputs.dB.resize(model.diff_labels.size());
        rec_.outputs.dN.resize(model.jump_labels.size());
        for (auto& ch : rec_.outputs.dB) ch.reserve(path.grid.n_steps);
        for (auto& ch : rec_.outputs.dN) ch.reserve(path.grid.n_steps);
        rec_.m.resize(model.diff_labels.size());
        rec_.intensity.resize(model.jump_labels.size());
        store_state(0.0, vectorize(rho0), 1.0);
    }

    void on_step(std::size_t n, double t, const OpVec& sigma, double p,
                 const double* dB, const std::uint32_t* dN) override {
        for (std::size_t i = 0; i < rec_.outputs.dB.size(); ++i)
            rec_.outputs.dB[i].push_back(dB[i]);
        for (std::size_t k = 0; k < rec_.outputs.dN.size(); ++k)
            rec_.outputs.dN[k].push_back(dN[k]);
        if ((n + 1) % rec_.store_every == 0)
            store_state(t + rec_.grid.step, sigma, p);
    }

    TrajectoryRecord take() { return std::move(rec_); }

  private:
    void store_state(double t, const OpVec& v, double p) {
        const Operator2 sigma = unvectorize(v);
        rec_.times.push_back(t);
        rec_.sigma.push_back(sigma);
        rec_.weight.push_back(p);
        Operator2 rho =
            std::abs(p) > cfg_.norm_floor ? Operator2(sigma / p) : cfg_.fallback;
        rec_.rho.push_back(rho);
        // Girsanov coefficients at the stored time (state at t-). For
        // time-dependent coefficients use girsanov_quantities() instead.
        if (model_.constant) {
            const ModelOps& ops = model_.const_ops;
            for (std::size_t i = 0; i < model_.diff_labels.size(); ++i)
                rec_.m[i].push_back(2.0 * (ops.diff[i] * rho).trace().real());
            for (std::size_t k = 0; k < model_.jump_labels.size(); ++k)
                rec_.intensity[k].push_back(
                    (ops.jump[k].adjoint() * ops.jump[k] * rho).trace().real());
        }
        (void)physical_;
    }

    const ChannelModel& model_;
    const EngineConfig& cfg_;
    bool physical_;
    TrajectoryRecord rec_;
};

}  // namespace

TrajectoryRecord integrate_linear_sme(const ChannelModel& model, const NoisePath& path,
                                      const Operator2& rho0, const EngineConfig& cfg) {
    Recorder rec(model, path, rho0, cfg, false);
    run_linear_sme(model, path, rho0, cfg, rec);
    return rec.take();
}

SSETrajectory integrate_linear_sse(const ChannelModel& model, const NoisePath& path,
                                   const StateVector2& phi0, const EngineConfig& cfg) {
    if (std::abs(phi0.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("integrate_linear_sse: initial vector must be normalized");
    const std::size_t n_steps = path.grid.n_steps;
    const double h = path.grid.step;
    const std::size_t nd = model.diff_labels.size();
    const std::size_t nj = model.jump_labels.size();

    std::vector<std::vector<std::uint32_t>> jump_counts(nj);
    for (std::size_t k = 0; k < nj; ++k)
        jump_counts[k] = path.jumps_per_step(model.jump_labels[k]);

    SSETrajectory out;
    out.grid = path.grid;
    out.store_every = cfg.store_every;
    out.times.push_back(0.0);
    out.phi.push_back(phi0);
    out.weight.push_back(1.0);

    PathTracker tracker(model, path, nullptr);
    ModelOps ops;
    if (model.constant) ops = model.const_ops;
    StateVector2 phi = phi0;
    const double lambda_sum = model.lambda_total();

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = path.grid.time_at(n);
        if (!model.constant) model.eval(t, tracker.ctx(), ops);
        const complex i(0, 1);
        Operator2 drift = -i * ops.H;
        for (const auto& l : ops.diff) drift -= 0.5 * (l.adjoint() * l);
        for (const auto& l : ops.jump) drift -= 0.5 * (l.adjoint() * l);
        StateVector2 next = phi + h * (drift * phi) + (0.5 * lambda_sum * h) * phi;
        for (std::size_t id = 0; id < nd; ++id)
            next += path.dB(model.diff_labels[id])[n] * (ops.diff[id] * phi);
        for (std::size_t k = 0; k < nj; ++k) {
            const double dn = jump_counts[k][n];
            if (dn != 0)
                next += dn * (ops.jump[k] * phi / std::sqrt(model.lambda[k]) - phi);
        }
        phi = next;
        if (!std::isfinite(phi.squaredNorm()))
            throw numerical_error("linear SSE: state diverged");
        if ((n + 1) % cfg.store_every == 0) {
            out.times.push_back(t + h);
            out.phi.push_back(phi);
            out.weight.push_back(phi.squaredNorm());
        }
        tracker.advance(n);
    }
    return out;
}

ChannelLayout nonlinear_layout(const ChannelModel& model) {
    ChannelLayout layout = model.noise_layout();
    // Candidate intensities must dominate the physical ones; the reference
    // intensity acts as a gauge that may be raised above the floor.
    for (std::size_t k = 0; k < model.jump_labels.size(); ++k) {
        double floor;
        if (model.constant) {
            floor = default_intensity(model.const_ops.jump[k]);
        } else {
            ModelOps ops;
            model.eval(0.0, PathCtx{}, ops);
            floor = default_intensity(ops.jump[k]);
        }
        layout.set_lambda(model.jump_labels[k],
                          std::max(model.lambda[k], floor));
    }
    return layout;
}

void run_nonlinear(const ChannelModel& model, const NoisePath& path,
                   const Operator2& rho0, const EngineConfig& cfg,
                   NonlinearVariant variant, StepObserver& obs) {
    const std::size_t n_steps = path.grid.n_steps;
    const double h = path.grid.step;
    const std::size_t nd = model.diff_labels.size();
    const std::size_t nj = model.jump_labels.size();
    const complex ci(0, 1);

    std::vector<std::vector<std::uint32_t>> candidates(nj);
    std::vector<std::mt19937_64> accept_rng;
    std::vector<double> lambda_bar(nj);
    for (std::size_t k = 0; k < nj; ++k) {
        const int label = model.jump_labels[k];
        candidates[k] = path.jumps_per_step(label);
        lambda_bar[k] = path.lambda(label);
        accept_rng.push_back(thinning_engine(path.seed, label));
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const bool pure = variant == NonlinearVariant::sse;
    StateVector2 psi;
    Operator2 rho = hermitize(rho0);
    if (pure) {
        Eigen::SelfAdjointEigenSolver<Operator2> es(rho);
        if (es.eigenvalues()(1) < 1.0 - 1e-8)
            throw std::invalid_argument("nonlinear SSE: initial state must be pure");
        psi = es.eigenvectors().col(1);
    }

    PathTracker tracker(model, path, nullptr);
    ModelOps ops;
    if (model.constant) ops = model.const_ops;
    std::vector<double> m(nd), inten(nj), db_out(nd);
    std::vector<std::uint32_t> dn(nj);

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = path.grid.time_at(n);
        if (!model.constant) model.eval(t, tracker.ctx(), ops);
        if (pure) rho = psi * psi.adjoint();
        for (std::size_t i = 0; i < nd; ++i)
            m[i] = 2.0 * (ops.diff[i] * rho).trace().real();
        for (std::size_t k = 0; k < nj; ++k) {
            inten[k] = (ops.jump[k].adjoint() * ops.jump[k] * rho).trace().real();
            // Small negative values come from the O(step) cone excursions
            // of the scheme; clamp them, but fail on gross ones.
            if (inten[k] < -0.5)
                throw numerical_error("nonlinear: negative physical intensity");
            inten[k] = std::max(inten[k], 0.0);
        }
        for (std::size_t k = 0; k < nj; ++k) {
            std::uint32_t acc = 0;
            for (std::uint32_t c = 0; c < candidates[k][n]; ++c)
                if (unif(accept_rng[k]) * lambda_bar[k] < inten[k]) ++acc;
            dn[k] = acc;
        }

        if (pure) {
            Operator2 khat = -ci * ops.H;
            double msq = 0, isum = 0;
            for (std::size_t i = 0; i < nd; ++i) {
                khat += -0.5 * (ops.diff[i].adjoint() * ops.diff[i]) +
                        0.5 * m[i] * ops.diff[i];
                msq += m[i] * m[i];
            }
            for (std::size_t k = 0; k < nj; ++k) {
                khat += -0.5 * (ops.jump[k].adjoint() * ops.jump[k]);
                isum += inten[k];
            }
            StateVector2 next =
                psi + h * (khat * psi) + h * (0.5 * isum - 0.125 * msq) * psi;
            for (std::size_t i = 0; i < nd; ++i)
                next += path.dB(model.diff_labels[i])[n] *
                        (ops.diff[i] * psi - 0.5 * m[i] * psi);
            for (std::size_t k = 0; k < nj; ++k)
                if (dn[k] && inten[k] > 0)
                    next += static_cast<double>(dn[k]) *
                            (ops.jump[k] * psi / std::sqrt(inten[k]) - psi);
            const double nrm = next.norm();
            if (!(nrm > 0) || !std::isfinite(nrm))
                throw numerical_error("nonlinear SSE: state diverged");
            psi = next / nrm;
            rho = psi * psi.adjoint();
        } else {
            Operator2 next = rho + h * apply_liouville_direct(ops, rho);
            for (std::size_t i = 0; i < nd; ++i) {
                const Operator2& l = ops.diff[i];
                next += path.dB(model.diff_labels[i])[n] *
                        (l * rho + rho * l.adjoint() - m[i] * rho);
            }
            for (std::size_t k = 0; k < nj; ++k) {
                const Operator2& l = ops.jump[k];
                if (inten[k] <= 0) continue;  // then l rho l+ vanishes too
                const Operator2 jump = l * rho * l.adjoint() / inten[k] - rho;
                next += (static_cast<double>(dn[k]) - inten[k] * h) * jump;
            }
            next = hermitize(next);
            const double tr = next.trace().real();
            if (!(tr > 0) || !std::isfinite(tr))
                throw numerical_error("nonlinear SME: trace collapsed");
            rho = next / tr;
            // Rare tail excursions (a few-sigma increment on a near-pure
            // state) can push the normalized state well outside the cone
            // and from there the moments m_i lose all meaning. Clip hard
            // violations back to the cone; small ones are left to the
            // dissipative drift.
            const double lo = 0.5 * (1.0 - std::sqrt(std::max(
                                               1.0 - 4.0 * rho.determinant().real(), 0.0)));
            if (lo < -0.05) {
                Eigen::SelfAdjointEigenSolver<Operator2> es(rho);
                Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
                rho = es.eigenvectors() * ev.asDiagonal() *
                      es.eigenvectors().adjoint() / ev.sum();
            }
        }
        OpVec v = vectorize(rho);
        check_positivity(v, cfg.positivity_tol, "nonlinear");

        double db1_out = 0.0;
        for (std::size_t i = 0; i < nd; ++i) {
            db_out[i] = path.dB(model.diff_labels[i])[n] + m[i] * h;
            if (model.diff_labels[i] == 1) db1_out = db_out[i];
        }
        obs.on_step(n, t, v, 1.0, db_out.data(), dn.data());
        tracker.advance(n, db1_out);
    }
}

TrajectoryRecord integrate_nonlinear(const ChannelModel& model, const NoisePath& path,
                                     const Operator2& rho0, const EngineConfig& cfg,
                                     NonlinearVariant variant) {
    Recorder rec(model, path, rho0, cfg, true);
    run_nonlinear(model, path, rho0, cfg, variant, rec);
    return rec.take();
}

GirsanovQuantities girsanov_quantities(const TrajectoryRecord& record,
                                       const ChannelModel& model, const NoisePath& path) {
    if (record.store_every != 1)
        throw std::invalid_argument("girsanov_quantities: needs store_every == 1");
    const std::size_t n_steps = record.grid.n_steps;
    const double h = record.grid.step;
    GirsanovQuantities q;
    q.m.assign(model.diff_labels.size(), std::vector<double>(n_steps));
    q.i.assign(model.jump_labels.size(), std::vector<double>(n_steps));
    q.dW.assign(model.diff_labels.size(), std::vector<double>(n_steps));
    PathTracker tracker(model, path, nullptr);
    ModelOps ops;
    if (model.constant) ops = model.const_ops;
    for (std::size_t n = 0; n < n_steps; ++n) {
        if (!model.constant) model.eval(record.grid.time_at(n), tracker.ctx(), ops);
        const Operator2& rho = record.rho[n];  // state at t-
        for (std::size_t i = 0; i < model.diff_labels.size(); ++i) {
            q.m[i][n] = 2.0 * (ops.diff[i] * rho).trace().real();
            q.dW[i][n] = record.outputs.dB[i][n] - q.m[i][n] * h;
        }
        for (std::size_t k = 0; k < model.jump_labels.size(); ++k)
            q.i[k][n] = (ops.jump[k].adjoint() * ops.jump[k] * rho).trace().real();
        tracker.advance(n);
    }
    return q;
}

namespace {

class PropagatorObserver : public StepObserver {
  public:
    PropagatorObserver(std::size_t from, std::size_t to)
        : from_(from), to_(to), map_(SuperOp2::Identity()) {}
    bool needs_step_map() const override { return true; }
    void on_step_map(const SuperOp2& m) override { pending_ = m; }
    void on_step(std::size_t n, double, const OpVec&, double, const double*,
                 const std::uint32_t*) override {
        if (n >= from_ && n < to_) map_ = (pending_ * map_).eval();
    }
    const SuperOp2& map() const { return map_; }

  private:
    std::size_t from_, to_;
    SuperOp2 map_, pending_;
};

}  // namespace

SuperOp2 propagator(const ChannelModel& model, const NoisePath& path, double s,
                    double t, const EngineConfig& cfg) {
    if (s > t) throw std::invalid_argument("propagator: requires s <= t");
    const double h = path.grid.step;
    const auto ns = static_cast<std::size_t>(std::llround(s / h));
    const auto nt = static_cast<std::size_t>(std::llround(t / h));
    if (nt > path.grid.n_steps)
        throw std::invalid_argument("propagator: t beyond the grid");
    PropagatorObserver obs(ns, nt);
    // The evolved state is irrelevant for the map; a full run is needed
    // anyway because time-dependent coefficients carry path history.
    EngineConfig relaxed = cfg;
    relaxed.positivity_tol = 1e300;
    run_linear_sme(model, path, maximally_mixed(), relaxed, obs);
    return obs.map();
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("QFB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void for_each_trajectory(std::size_t n_traj, std::uint64_t master_seed,
                         unsigned n_threads,
                         const std::function<void(std::size_t, std::uint64_t)>& fn) {
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_traj; ++i) fn(i, split_seed(master_seed, i));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_traj) return;
            try {
                fn(i, split_seed(master_seed, i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_traj);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qfb
