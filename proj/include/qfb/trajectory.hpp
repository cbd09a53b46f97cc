#pragma once

// Jump-diffusion Euler-Maruyama integration of the linear/nonlinear
// SSE/SME under the reference or physical probability, with weight
// process, propagator and Girsanov quantities.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qfb/atom_model.hpp"
#include "qfb/core_ops.hpp"
#include "qfb/noise.hpp"

namespace qfb {

struct EngineConfig {
    double norm_floor = 1e-12;       // below this, rho falls back to `fallback`
    std::size_t store_every = 1;     // state-storage thinning factor
    Operator2 fallback = maximally_mixed();
    // Positivity guard: largest negative eigenvalue tolerated, relative to
    // the state's scale. Off by default (infinity): Euler-Maruyama leaves
    // the positive cone by O(step) per step (the scheme differs from the
    // exact one-step CP map by (dB^2 - h) L sigma L*), and over long
    // horizons the weight-degenerate tail of the linear SME drifts
    // arbitrarily far outside the cone while staying exact in expectation
    // (the scheme is linear in sigma). Set a finite value to fail fast on
    // short-horizon or deterministic integrations. Non-finite states always
    // abort the run.
    double positivity_tol = std::numeric_limits<double>::infinity();
};

struct OutputRecord {
    // Driver increments per step, in model channel order. Under the
    // reference measure these are the raw path increments; under the
    // physical one, dB_j = dW_j + m_j dt reconstructed from the Girsanov
    // relation and dN_k the accepted physical counts.
    std::vector<std::vector<double>> dB;           // [diff channel][step]
    std::vector<std::vector<std::uint32_t>> dN;    // [jump channel][step]

    double B_total(std::size_t channel) const;
    std::uint64_t N_total(std::size_t channel) const;
};

struct TrajectoryRecord {
    GridSpec grid;
    std::size_t store_every = 1;
    std::vector<int> diff_labels, jump_labels;
    std::vector<double> times;             // stored times (0, k h, 2 k h, ...)
    std::vector<Operator2> sigma;          // unnormalized state at stored times
    std::vector<double> weight;            // p(t) = tr sigma(t)
    std::vector<Operator2> rho;            // sigma / p, or fallback below the floor
    std::vector<std::vector<double>> m;          // m_i(t) per diffusive channel
    std::vector<std::vector<double>> intensity;  // i_k(t) per jump channel
    OutputRecord outputs;
    Operator2 fallback_state;
};

// Per-step hook for ensemble estimators that do not need stored states.
// sigma/p refer to the post-step state; dB/dN are the step's driver
// increments (model channel order); t is the left endpoint of the step.
struct StepObserver {
    virtual void on_step(std::size_t n, double t, const OpVec& sigma, double p,
                         const double* dB, const std::uint32_t* dN) = 0;
    virtual bool needs_step_map() const { return false; }
    virtual void on_step_map(const SuperOp2&) {}
    virtual ~StepObserver() = default;
};

// Linear SME under the reference measure Q.
void run_linear_sme(const ChannelModel& model, const NoisePath& path,
                    const Operator2& rho0, const EngineConfig& cfg, StepObserver& obs);
TrajectoryRecord integrate_linear_sme(const ChannelModel& model, const NoisePath& path,
                                      const Operator2& rho0, const EngineConfig& cfg);

// Linear SSE under Q; weights are the squared norms.
struct SSETrajectory {
    GridSpec grid;
    std::size_t store_every = 1;
    std::vector<double> times;
    std::vector<StateVector2> phi;   // unnormalized
    std::vector<double> weight;      // |phi|^2
};
SSETrajectory integrate_linear_sse(const ChannelModel& model, const NoisePath& path,
                                   const StateVector2& phi0, const EngineConfig& cfg);

// Nonlinear equations under the physical probability. The path's Wiener
// increments are reinterpreted as the physical noises W_j and its Poisson
// jumps as thinning candidates; candidate intensities must dominate the
// physical ones (see nonlinear_layout).
enum class NonlinearVariant { sme, sse };

ChannelLayout nonlinear_layout(const ChannelModel& model);
void run_nonlinear(const ChannelModel& model, const NoisePath& path,
                   const Operator2& rho0, const EngineConfig& cfg,
                   NonlinearVariant variant, StepObserver& obs);
TrajectoryRecord integrate_nonlinear(const ChannelModel& model, const NoisePath& path,
                                     const Operator2& rho0, const EngineConfig& cfg,
                                     NonlinearVariant variant);

// Girsanov quantities recomputed from a stored trajectory (store_every == 1).
struct GirsanovQuantities {
    std::vector<std::vector<double>> m;    // [diff channel][step], from rho(t-)
    std::vector<std::vector<double>> i;    // [jump channel][step]
    std::vector<std::vector<double>> dW;   // dW_j = dB_j - m_j dt
};
GirsanovQuantities girsanov_quantities(const TrajectoryRecord& record,
                                       const ChannelModel& model, const NoisePath& path);

// Propagator A(t, s) of the linear SME along one path.
SuperOp2 propagator(const ChannelModel& model, const NoisePath& path, double s,
                    double t, const EngineConfig& cfg);

// Deterministic parallel map over trajectory indices: fn(index, seed) with
// seed = split_seed(master_seed, index). Results must be written to
// per-index slots by the caller; the reduction order is then fixed.
void for_each_trajectory(std::size_t n_traj, std::uint64_t master_seed,
                         unsigned n_threads,
                         const std::function<void(std::size_t, std::uint64_t)>& fn);

unsigned default_thread_count();

}  // namespace qfb
