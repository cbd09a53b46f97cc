#include "qfb/search.hpp"

#include "qfb/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace qfb {

namespace {

std::vector<double> clamp_to_box(std::vector<double> x, const SearchBox& box) {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
    return x;
}

double simplex_diameter(const std::vector<std::vector<double>>& pts) {
    double d = 0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            double s = 0;
            for (std::size_t i = 0; i < pts[a].size(); ++i) {
                const double diff = pts[a][i] - pts[b][i];
                s += diff * diff;
            }
            d = std::max(d, std::sqrt(s));
        }
    return d;
}

struct Vertex {
    std::vector<double> x;
    double f;
};

Vertex nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                   const SearchBox& box, const std::vector<double>& start,
                   const SearchOptions& opts, std::size_t& n_eval) {
    const std::size_t dim = start.size();
    auto eval = [&](const std::vector<double>& x) {
        ++n_eval;
        return objective(clamp_to_box(x, box));
    };

    std::vector<Vertex> s;
    s.push_back({start, eval(start)});
    for (std::size_t i = 0; i < dim; ++i) {
        auto x = start;
        const double span = box.hi[i] - box.lo[i];
        x[i] += (x[i] + 0.05 * span <= box.hi[i] ? 0.05 : -0.05) * span;
        s.push_back({x, eval(x)});
    }

    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        std::sort(s.begin(), s.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        {
            std::vector<std::vector<double>> pts;
            for (const auto& v : s) pts.push_back(v.x);
            if (simplex_diameter(pts) < opts.diameter_tol) break;
        }
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t v = 0; v < dim; ++v)
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += s[v].x[i] / dim;
        auto blend = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t i = 0; i < dim; ++i)
                x[i] = centroid[i] + coeff * (centroid[i] - s[dim].x[i]);
            return x;
        };
        auto refl = blend(1.0);
        const double fr = eval(refl);
        if (fr < s[0].f) {
            auto exp_pt = blend(2.0);
            const double fe = eval(exp_pt);
            s[dim] = fe < fr ? Vertex{exp_pt, fe} : Vertex{refl, fr};
        } else if (fr < s[dim - 1].f) {
            s[dim] = {refl, fr};
        } else {
            auto con = blend(fr < s[dim].f ? 0.5 : -0.5);
            const double fc = eval(con);
            if (fc < std::min(fr, s[dim].f)) {
                s[dim] = {con, fc};
            } else {
                for (std::size_t v = 1; v <= dim; ++v) {
                    for (std::size_t i = 0; i < dim; ++i)
                        s[v].x[i] = 0.5 * (s[v].x[i] + s[0].x[i]);
                    s[v].f = eval(s[v].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    return {clamp_to_box(s[0].x, box), s[0].f};
}

}  // namespace

SearchResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                      const SearchBox& box, const SearchOptions& opts) {
    const std::size_t dim = box.lo.size();
    if (dim == 0 || box.hi.size() != dim)
        throw std::invalid_argument("minimize: inconsistent box bounds");
    for (std::size_t i = 0; i < dim; ++i)
        if (!(box.lo[i] <= box.hi[i]))
            throw std::invalid_argument("minimize: requires lo <= hi in every coordinate");

    // Latin hypercube start points: one stratum per restart and coordinate,
    // independently permuted across coordinates.
    std::mt19937_64 eng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t m = std::max<std::size_t>(opts.n_restarts, 1);
    std::vector<std::vector<double>> starts(m, std::vector<double>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        std::vector<std::size_t> strata(m);
        for (std::size_t r = 0; r < m; ++r) strata[r] = r;
        std::shuffle(strata.begin(), strata.end(), eng);
        for (std::size_t r = 0; r < m; ++r) {
            const double frac = (strata[r] + unif(eng)) / m;
            starts[r][i] = box.lo[i] + frac * (box.hi[i] - box.lo[i]);
        }
    }

    SearchResult result;
    result.value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        Vertex best = nelder_mead(objective, box, start, opts, result.n_eval);
        if (best.f < result.value) {
            result.value = best.f;
            result.x = best.x;
        }
        result.trace.best_value.push_back(result.value);
    }
    constexpr double two_pi = 2 * std::numbers::pi;
    for (std::size_t i : box.periodic) {
        double& a = result.x.at(i);
        a = std::fmod(a, two_pi);
        if (a < 0) a += two_pi;
    }
    return result;
}

SearchResult minimize_feedback(const FeedbackSearchProblem& problem,
                               const SearchOptions& opts) {
    const std::size_t dim = problem.free_params.size();
    if (dim == 0 || problem.lo.size() != dim || problem.hi.size() != dim)
        throw std::invalid_argument("minimize_feedback: inconsistent free parameters");
    if (opts.max_iter < dim + 1)
        throw std::invalid_argument("minimize_feedback: evaluation budget below dim + 1");

    SearchBox box{problem.lo, problem.hi, {}};
    for (std::size_t i = 0; i < dim; ++i) {
        const std::string& name = problem.free_params[i];
        if (name == "theta1" || name == "theta2") box.periodic.push_back(i);
        else if (name != "omega_r" && name != "delta_nu" && name != "k1")
            throw std::invalid_argument("minimize_feedback: unknown parameter " + name);
    }

    auto objective = [&](const std::vector<double>& x) {
        AtomParams p = problem.base;
        FeedbackSpec fb = problem.base_fb;
        for (std::size_t i = 0; i < dim; ++i) {
            const std::string& name = problem.free_params[i];
            if (name == "omega_r") p.omega_r = x[i];
            else if (name == "delta_nu") { p.nu = 0; p.nu0 = x[i]; }
            else if (name == "k1") fb.k1 = x[i];
            else if (name == "theta1") p.epsilon1 = x[i] - std::arg(p.alpha1);
            else p.epsilon2 = x[i] - std::arg(p.alpha2);
        }
        try {
            const BlochSystem bs = build_bloch(p, fb);
            if (problem.objective == SearchObjective::s_inel_at)
                return spectrum_inelastic(bs, problem.mu_star);
            return mandel_q3_longtime(bs, std::norm(p.beta3));
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    return minimize(objective, box, opts);
}

}  // namespace qfb
