#include "qfb/noise.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <random>

namespace qfb {

GridSpec GridSpec::make(double t_end, double step) {
    if (step <= 0) throw std::invalid_argument("GridSpec: step must be > 0");
    if (t_end < 0) throw std::invalid_argument("GridSpec: t_end must be >= 0");
    GridSpec g;
    g.step = step;
    g.n_steps = static_cast<std::size_t>(std::llround(t_end / step));
    g.t_end = t_end;
    if (std::abs(static_cast<double>(g.n_steps) * step - t_end) > 1e-12 * std::max(1.0, t_end))
        throw std::invalid_argument("GridSpec: t_end is not an integer multiple of step");
    return g;
}

ChannelLayout ChannelLayout::all_wiener() {
    ChannelLayout l;
    l.wiener.fill(true);
    return l;
}

void ChannelLayout::set_lambda(int label, double value) {
    if (value <= 0) throw std::invalid_argument("reference intensity must be > 0");
    lambda[poisson_slot(label)] = value;
}

std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t trajectory_index) {
    // splitmix64 finalizer on the combined word
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (trajectory_index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

std::mt19937_64 channel_engine(std::uint64_t path_seed, int channel_tag) {
    return std::mt19937_64(split_seed(path_seed, 0x100 + static_cast<std::uint64_t>(channel_tag)));
}

}  // namespace

NoisePath sample_path(const GridSpec& spec, const ChannelLayout& layout, std::uint64_t seed) {
    NoisePath path;
    path.grid = spec;
    path.seed = seed;
    const double sd = std::sqrt(spec.step);
    for (int label = -2; label <= 2; ++label) {
        const std::size_t slot = wiener_slot(label);
        if (!layout.wiener[slot]) continue;
        auto eng = channel_engine(seed, label);
        std::normal_distribution<double> gauss(0.0, sd);
        auto& inc = path.wiener[slot];
        inc.resize(spec.n_steps);
        for (auto& x : inc) x = gauss(eng);
    }
    for (int label = 3; label <= 6; ++label) {
        const std::size_t slot = poisson_slot(label);
        const double lam = layout.lambda[slot];
        path.intensity[slot] = lam;
        if (lam == 0.0) continue;
        if (lam < 0.0) throw std::invalid_argument("reference intensity must be > 0");
        auto eng = channel_engine(seed, 16 + label);
        std::exponential_distribution<double> expo(lam);
        double t = 0.0;
        auto& jumps = path.jump_times[slot];
        for (;;) {
            t += expo(eng);
            if (t > spec.t_end) break;
            jumps.push_back(t);
        }
    }
    return path;
}

std::vector<std::uint32_t> NoisePath::jumps_per_step(int label) const {
    std::vector<std::uint32_t> counts(grid.n_steps, 0);
    for (double t : jumps(label)) {
        // jump at t lands in step n with n h < t <= (n+1) h
        std::size_t n = static_cast<std::size_t>(std::ceil(t / grid.step)) - 1;
        if (n >= grid.n_steps) n = grid.n_steps - 1;
        ++counts[n];
    }
    return counts;
}

void dump_path(const NoisePath& path, std::ostream& os) {
    // Layout: magic "QFBNOISE", u64 seed, u64 n_steps, f64 step, then for
    // each Wiener slot: u64 count + f64 data; for each Poisson slot:
    // f64 intensity, u64 count + f64 jump times.
    os.write("QFBNOISE", 8);
    auto put_u64 = [&os](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(path.seed);
    put_u64(path.grid.n_steps);
    put_f64(path.grid.step);
    for (const auto& ch : path.wiener) {
        put_u64(ch.size());
        for (double x : ch) put_f64(x);
    }
    for (std::size_t s = 0; s < kNumPoisson; ++s) {
        put_f64(path.intensity[s]);
        put_u64(path.jump_times[s].size());
        for (double x : path.jump_times[s]) put_f64(x);
    }
}

}  // namespace qfb
