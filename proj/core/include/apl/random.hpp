#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace apl {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a labelled sub-stream, e.g. derive_seed(master, {demo, estimator}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> labels) noexcept {
    std::uint64_t h = mix_seed(master);
    for (auto label : labels) h = mix_seed(h ^ mix_seed(label + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) {
    return std::generate_canonical<double, 53>(rng);
}

/// Index drawn from unnormalized non-negative weights (inverse CDF).
inline std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01(rng) * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return last_positive;
}

inline double sample_beta(double a, double b, Rng& rng) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

inline double sample_normal(double mean, double sd, Rng& rng) {
    std::normal_distribution<double> n(mean, sd);
    return n(rng);
}

}  // namespace apl
