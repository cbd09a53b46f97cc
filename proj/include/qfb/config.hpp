#pragma once

// Run configuration: strict sectioned key-value text. Unknown sections or
// keys are rejected with a section.key diagnostic, since a silently
// ignored physics parameter is worse than a parse failure.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qfb/atom_model.hpp"
#include "qfb/search.hpp"
#include "qfb/stats.hpp"

namespace qfb {

enum class FrameChoice { lab, rotating };
enum class InitState { ground, excited, maximally_mixed, stationary };

struct RunConfig {
    AtomParams model;
    FeedbackSpec feedback;
    OscillatorSpec oscillator;
    GridSpec grid;
    EngineConfig engine;

    FrameChoice frame = FrameChoice::rotating;
    Estimator estimator = Estimator::nonlinear;
    InitState init_state = InitState::ground;
    // Reference-intensity overrides for counting channels 3..6; 0 keeps the
    // model default; lambda_scale multiplies all of them afterwards.
    std::array<double, 4> lambda_override{};
    double lambda_scale = 1.0;

    std::size_t n_traj = 1000;
    std::uint64_t master_seed = 1;
    unsigned n_threads = 0;  // 0: pick automatically

    OutputSpec outputs;

    std::vector<double> mu_grid;       // [spectrum]
    int spectrum_channel = 2;

    std::vector<double> t_grid;        // [qparam]
    double t0 = 0.0;
    int qparam_channel = 3;

    std::optional<FeedbackSearchProblem> search;   // [optimize]
    SearchOptions search_opts;
};

// Parse and fully validate; throws config_error with a field path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical round-trippable dump (parse_config(dump_config(c)) == c).
std::string dump_config(const RunConfig& cfg);

// Initial density matrix per cfg.init_state; stationary resolves against
// the generator of the supplied model.
Operator2 initial_state(const RunConfig& cfg, const ChannelModel& model);

// Model construction honoring frame choice and intensity overrides.
ChannelModel build_model(const RunConfig& cfg);

}  // namespace qfb
