#pragma once

// Derivative-free minimization over box-constrained parameter vectors,
// used to tune feedback gains and phases against analytic figures of
// merit (spectral floor, Mandel Q).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qfb/atom_model.hpp"

namespace qfb {

struct SearchBox {
    std::vector<double> lo, hi;
    // Indices of angular parameters, reported wrapped into [0, 2*pi).
    std::vector<std::size_t> periodic;
};

struct SearchOptions {
    std::size_t n_restarts = 16;
    std::size_t max_iter = 400;      // Nelder-Mead iterations per restart
    double diameter_tol = 1e-6;      // simplex convergence threshold
    std::uint64_t seed = 1;
};

struct SearchTrace {
    std::vector<double> best_value;  // monotone incumbent after each restart
};

struct SearchResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t n_eval = 0;
    SearchTrace trace;
};

// Multi-start Nelder-Mead. Evaluations are clamped to the box; the start
// points form a Latin hypercube over it, seeded deterministically.
SearchResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                      const SearchBox& box, const SearchOptions& opts = {});

enum class SearchObjective { s_inel_at, q3_longtime };

// Tuning problem over the homodyne phase-feedback model. Free parameters
// are named from {omega_r, delta_nu, k1, theta1, theta2}; everything else
// is taken from the base model. Angles are periodic by construction.
struct FeedbackSearchProblem {
    SearchObjective objective = SearchObjective::s_inel_at;
    double mu_star = 0.0;           // frequency for s_inel_at
    AtomParams base;
    FeedbackSpec base_fb;
    std::vector<std::string> free_params;
    std::vector<double> lo, hi;     // aligned with free_params
};

SearchResult minimize_feedback(const FeedbackSearchProblem& problem,
                               const SearchOptions& opts = {});

}  // namespace qfb
