// Independent reference computations used by the tests. Nothing here calls the
// library's filtering or solving code.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "apl/pomdp.hpp"
#include "apl/random.hpp"

namespace oracle {

using apl::DemoTrace;
using apl::Index;
using apl::Pomdp;

inline std::vector<double> random_simplex(std::size_t n, apl::Rng& rng) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        x = 0.05 + apl::uniform01(rng);
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

/// Dense random model with strictly positive probabilities and rewards in [-1, 1].
inline Pomdp random_pomdp(std::size_t S, std::size_t A, std::size_t Z, apl::Rng& rng, double discount = 0.9) {
    Pomdp m(S, A, Z, discount);
    for (Index s = 0; s < S; ++s)
        for (Index a = 0; a < A; ++a) {
            auto row = random_simplex(S, rng);
            for (Index n = 0; n < S; ++n) m.set_transition(s, a, n, row[n]);
            m.set_reward(s, a, 2.0 * apl::uniform01(rng) - 1.0);
        }
    for (Index a = 0; a < A; ++a)
        for (Index n = 0; n < S; ++n) {
            auto row = random_simplex(Z, rng);
            for (Index z = 0; z < Z; ++z) m.set_observation(a, n, z, row[z]);
        }
    auto b0 = random_simplex(S, rng);
    for (Index s = 0; s < S; ++s) m.set_initial(s, b0[s]);
    m.validate();
    return m;
}

inline DemoTrace random_trace(const Pomdp& m, std::size_t L, apl::Rng& rng) {
    DemoTrace t;
    for (std::size_t i = 0; i < L; ++i)
        t.steps.push_back({static_cast<Index>(rng() % m.num_actions()), static_cast<Index>(rng() % m.num_observations())});
    return t;
}

/// Calls f(path, joint probability) for every hidden path s_0..s_L.
inline void for_each_path(const Pomdp& m, const DemoTrace& t,
                          const std::function<void(const std::vector<Index>&, double)>& f) {
    const std::size_t S = m.num_states(), L = t.size();
    std::vector<Index> path(L + 1, 0);
    while (true) {
        double p = m.initial(path[0]);
        for (std::size_t i = 0; i < L; ++i) {
            const auto [a, z] = t.steps[i];
            p *= m.transition(path[i], a, path[i + 1]) * m.observation(a, path[i + 1], z);
        }
        f(path, p);
        std::size_t k = 0;
        while (k <= L && ++path[k] == S) path[k++] = 0;
        if (k > L) break;
    }
}

inline double brute_force_loglik(const Pomdp& m, const DemoTrace& t) {
    double total = 0.0;
    for_each_path(m, t, [&](const std::vector<Index>&, double p) { total += p; });
    return std::log(total);
}

/// P(s_i | D) for i = 0..L by enumeration.
inline std::vector<std::vector<double>> brute_force_marginals(const Pomdp& m, const DemoTrace& t) {
    std::vector<std::vector<double>> out(t.size() + 1, std::vector<double>(m.num_states(), 0.0));
    double total = 0.0;
    for_each_path(m, t, [&](const std::vector<Index>& path, double p) {
        total += p;
        for (std::size_t i = 0; i < path.size(); ++i) out[i][path[i]] += p;
    });
    for (auto& row : out)
        for (auto& x : row) x /= total;
    return out;
}

/// Optimal values of the fully observable MDP; an upper bound on the POMDP value.
inline std::vector<double> mdp_values(const Pomdp& m) {
    const std::size_t S = m.num_states(), A = m.num_actions();
    std::vector<double> v(S, 0.0), next(S);
    for (int it = 0; it < 5000; ++it) {
        double delta = 0.0;
        for (Index s = 0; s < S; ++s) {
            double best = -1e300;
            for (Index a = 0; a < A; ++a) {
                double q = m.reward(s, a);
                for (Index n = 0; n < S; ++n) q += m.discount() * m.transition(s, a, n) * v[n];
                best = std::max(best, q);
            }
            next[s] = best;
            delta = std::max(delta, std::abs(best - v[s]));
        }
        v.swap(next);
        if (delta < 1e-12) break;
    }
    return v;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
    }
    return d;
}

/// Critical value of the two-sample KS statistic at the 5% level.
inline double ks_critical_5pct(std::size_t n, std::size_t m) {
    return 1.358 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

/// One-sample KS statistic against a CDF.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

/// CDF on a grid from an unnormalized density over [lo, hi] (trapezoid rule).
class GridCdf {
public:
    GridCdf(const std::function<double(double)>& density, double lo, double hi, std::size_t n = 20000)
        : lo_(lo), h_((hi - lo) / static_cast<double>(n)), cdf_(n + 1, 0.0) {
        double prev = density(lo);
        for (std::size_t i = 1; i <= n; ++i) {
            const double cur = density(lo + h_ * static_cast<double>(i));
            cdf_[i] = cdf_[i - 1] + 0.5 * h_ * (prev + cur);
            prev = cur;
        }
        mass_ = cdf_.back();
        for (auto& c : cdf_) c /= mass_;
    }
    double operator()(double x) const {
        if (x <= lo_) return 0.0;
        const double pos = (x - lo_) / h_;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= cdf_.size()) return 1.0;
        const double f = pos - static_cast<double>(i);
        return cdf_[i] * (1.0 - f) + cdf_[i + 1] * f;
    }
    /// Integral of the density before normalization.
    double mass() const { return mass_; }

private:
    double lo_, h_, mass_ = 0.0;
    std::vector<double> cdf_;
};

}  // namespace oracle
