#pragma once

// Reproducible realizations of the driving noises under the reference
// probability Q: Wiener increments for channels B_{-2}..B_2 and Poisson
// jump times for channels N_3..N_6, on a fixed time grid.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace qfb {

struct GridSpec {
    double t_end = 0.0;
    double step = 0.0;
    std::size_t n_steps = 0;

    static GridSpec make(double t_end, double step);
    double time_at(std::size_t n) const { return static_cast<double>(n) * step; }
};

// Wiener channels are labelled -2..2 (B_0 = laser phase noise, B_1, B_2 =
// homodyne outputs, B_{-1}, B_{-2} = heterodyne local-oscillator noise).
// Counting channels are labelled 3..6.
constexpr int kNumWiener = 5;
constexpr int kNumPoisson = 4;

inline std::size_t wiener_slot(int label) {
    if (label < -2 || label > 2) throw std::invalid_argument("wiener label out of range");
    return static_cast<std::size_t>(label + 2);
}

inline std::size_t poisson_slot(int label) {
    if (label < 3 || label > 6) throw std::invalid_argument("poisson label out of range");
    return static_cast<std::size_t>(label - 3);
}

struct NoisePath {
    GridSpec grid;
    std::uint64_t seed = 0;
    // Per Wiener channel: n_steps increments, each N(0, step). Empty vector
    // means the channel was not requested.
    std::array<std::vector<double>, kNumWiener> wiener;
    // Per Poisson channel: sorted jump times in (0, t_end], and intensity.
    std::array<std::vector<double>, kNumPoisson> jump_times;
    std::array<double, kNumPoisson> intensity{};

    const std::vector<double>& dB(int label) const { return wiener[wiener_slot(label)]; }
    const std::vector<double>& jumps(int label) const { return jump_times[poisson_slot(label)]; }
    double lambda(int label) const { return intensity[poisson_slot(label)]; }

    // Number of jumps of channel `label` inside step n, i.e. in (n h, (n+1) h].
    std::vector<std::uint32_t> jumps_per_step(int label) const;
};

struct ChannelLayout {
    std::array<bool, kNumWiener> wiener{};      // which Wiener labels to generate
    std::array<double, kNumPoisson> lambda{};   // reference intensity, 0 = channel absent

    static ChannelLayout all_wiener();
    void require_wiener(int label) { wiener[wiener_slot(label)] = true; }
    void set_lambda(int label, double value);
};

NoisePath sample_path(const GridSpec& spec, const ChannelLayout& layout, std::uint64_t seed);

// Splitmix-style derivation of per-trajectory seeds from a master seed.
std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t trajectory_index);

// Debug binary dump: fixed header, then per-channel arrays. Layout
// documented in the implementation file.
void dump_path(const NoisePath& path, std::ostream& os);

}  // namespace qfb
