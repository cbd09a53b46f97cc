#pragma once

// Output processes and ensemble estimators under the physical probability:
// currents, counts, spectra, autocorrelations, Mandel Q. Physical
// statistics come either from p(T)-weighted linear trajectories under the
// reference measure or directly from nonlinear trajectories under the
// physical one.

#include <functional>

#include "qfb/trajectory.hpp"

namespace qfb {

enum class Estimator { weighted, nonlinear };

struct EnsembleSpec {
    std::size_t n_traj = 1000;
    std::uint64_t master_seed = 1;
    unsigned n_threads = 1;
    GridSpec grid;
    Operator2 rho0 = pauli::ground * pauli::ground.adjoint();
    EngineConfig engine;
};

struct MeanEstimate {
    double value = 0.0;
    double err = 0.0;
};

// Detector post-processing of the raw outputs.
struct OutputSpec {
    enum class Response { dirac, exp_filter };
    Response response = Response::dirac;
    double k = 1.0;          // exp_filter gain
    double varkappa = 0.0;   // exp_filter bandwidth
    double noise_amplitude = 0.0;  // additive white noise on the currents
};

struct BuiltOutputs {
    // J[channel][step]: raw increments (dirac) or filtered current values
    // (exp_filter); I[channel][step]: counts per step.
    std::vector<std::vector<double>> J;
    std::vector<std::vector<std::uint32_t>> I;
};

BuiltOutputs build_outputs(const TrajectoryRecord& record, const OutputSpec& spec,
                           std::uint64_t noise_seed = 0);

// Weighted expectation E[p(T) X] of a trajectory functional under Q.
MeanEstimate weighted_expectation(
    const ChannelModel& model, const EnsembleSpec& ens,
    const std::function<double(const TrajectoryRecord&)>& functional);

struct SpectrumEstimate {
    std::vector<double> mu;
    std::vector<double> s_inel;
    std::vector<double> err;
    double s_el_coefficient = 0.0;
    double s_el_stderr = 0.0;
    double T = 0.0;
    std::size_t n_traj = 0;
};

// Homodyne spectrum of a diffusive channel (index into model.diff_labels)
// from the limit-case output dB, with the elastic mean part subtracted.
// Finite-T bias is O(1/T).
SpectrumEstimate estimate_spectrum(const ChannelModel& model, const EnsembleSpec& ens,
                                   std::size_t diff_channel,
                                   const std::vector<double>& mu_grid,
                                   Estimator estimator);

struct QEstimate {
    std::vector<double> t_grid;
    std::vector<double> q;
    std::vector<double> err;
    double m_rate = 0.0;       // counts per unit time over the longest window
    double t0 = 0.0;
    std::size_t n_traj = 0;
};

// Mandel Q of a counting channel (index into model.jump_labels) over
// windows (t0, t0 + t] for each t in t_grid.
QEstimate estimate_mandel_q(const ChannelModel& model, const EnsembleSpec& ens,
                            std::size_t jump_channel,
                            const std::vector<double>& t_grid, double t0,
                            Estimator estimator);

struct AutocorrEstimate {
    double b = 0.0, b_stderr = 0.0;   // output autocovariance kernel b(t, s)
    double d = 0.0, d_stderr = 0.0;   // with the n_inf subtraction
};

// Monte Carlo two-time autocorrelation of a diffusive channel via the
// propagator; requires the channel to be independent of the feedback
// drivers (channel 1 with active feedback is rejected).
AutocorrEstimate autocorrelation_d(const ChannelModel& model, const EnsembleSpec& ens,
                                   std::size_t diff_channel, double s, double t,
                                   double n_inf, bool feedback_active);

}  // namespace qfb
