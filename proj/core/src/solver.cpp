#include "apl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>

#include "apl/errors.hpp"

namespace apl {

namespace {

constexpr std::size_t kImpossible = std::numeric_limits<std::size_t>::max();

/// All alpha-vectors of a value function in a flat, stable order.
std::vector<const std::vector<double>*> flatten(const ValueFunction& vf) {
    std::vector<const std::vector<double>*> out;
    for (Index a = 0; a < vf.num_actions(); ++a)
        for (const auto& alpha : vf.vectors(a)) out.push_back(&alpha);
    return out;
}

/// Successor beliefs b^a_z of a fixed belief set, deduplicated.
struct SuccessorTable {
    std::vector<Belief> unique;
    /// [point][a][z] -> index into `unique`, kImpossible when P(z | b, a) = 0.
    std::vector<std::size_t> id;
};

SuccessorTable successors(const Pomdp& model, const std::vector<Belief>& beliefs) {
    const std::size_t A = model.num_actions(), Z = model.num_observations();
    SuccessorTable table;
    table.id.assign(beliefs.size() * A * Z, kImpossible);
    std::map<Belief, std::size_t> seen;
    Belief next;
    for (std::size_t i = 0; i < beliefs.size(); ++i)
        for (Index a = 0; a < A; ++a)
            for (Index z = 0; z < Z; ++z) {
                if (update_belief_into(model, beliefs[i], a, z, next) <= 0.0) continue;
                auto [it, inserted] = seen.try_emplace(next, table.unique.size());
                if (inserted) table.unique.push_back(next);
                table.id[(i * A + a) * Z + z] = it->second;
            }
    return table;
}

/// Index of the first alpha maximizing alpha . b.
std::size_t best_alpha(const std::vector<const std::vector<double>*>& alphas, std::span<const double> b) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const double v = dot(*alphas[k], b);
        if (v > best_value) {
            best_value = v;
            best = k;
        }
    }
    return best;
}

/// alpha(s) = R(s,a) + gamma sum_z sum_s' T(s,a,s') O(a,s',z) chosen_z(s').
std::vector<double> assemble(const Pomdp& model, Index a, const std::vector<const std::vector<double>*>& alphas,
                             std::span<const std::size_t> chosen) {
    const std::size_t S = model.num_states();
    std::vector<double> future(S, 0.0);
    for (Index z = 0; z < chosen.size(); ++z) {
        const auto& alpha = *alphas[chosen[z]];
        for (Index next = 0; next < S; ++next) future[next] += model.observation(a, next, z) * alpha[next];
    }
    std::vector<double> out(S);
    for (Index s = 0; s < S; ++s) {
        const auto row = model.transition_row(s, a);
        double acc = 0.0;
        for (Index next = 0; next < S; ++next)
            if (row[next] != 0.0) acc += row[next] * future[next];
        out[s] = model.reward(s, a) + model.discount() * acc;
    }
    return out;
}

double l1_distance(std::span<const double> x, std::span<const double> y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
    return d;
}

double distance_to_set(std::span<const double> b, const std::vector<Belief>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : set) {
        best = std::min(best, l1_distance(b, p));
        if (best == 0.0) break;
    }
    return best;
}

/**
 * Keeps, per action, only vectors that are the first maximizer at some belief
 * point, and records Q(b, a) for every point into `q` ([point][a]).
 */
void prune(ValueFunction& vf, const std::vector<Belief>& beliefs, std::vector<double>& q) {
    const std::size_t A = vf.num_actions();
    q.assign(beliefs.size() * A, 0.0);
    for (Index a = 0; a < A; ++a) {
        auto& set = vf.mutable_vectors(a);
        std::vector<char> keep(set.size(), 0);
        for (std::size_t i = 0; i < beliefs.size(); ++i) {
            std::size_t best = 0;
            double best_value = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < set.size(); ++k) {
                const double v = dot(set[k], beliefs[i]);
                if (v > best_value) {
                    best_value = v;
                    best = k;
                }
            }
            keep[best] = 1;
            q[i * A + a] = best_value;
        }
        if (set.size() <= 1) continue;
        std::vector<std::vector<double>> kept;
        for (std::size_t k = 0; k < set.size(); ++k)
            if (keep[k]) kept.push_back(std::move(set[k]));
        set = std::move(kept);
    }
}

}  // namespace

ValueFunction blind_lower_bound(const Pomdp& model) {
    const std::size_t S = model.num_states();
    const double gamma = model.discount();
    ValueFunction vf(model.num_actions(), S);
    for (Index a = 0; a < model.num_actions(); ++a) {
        std::vector<double> alpha(S, 0.0);
        std::vector<double> next(S);
        for (int iter = 0; iter < 100000; ++iter) {
            double change = 0.0;
            for (Index s = 0; s < S; ++s) {
                next[s] = model.reward(s, a) + gamma * dot(model.transition_row(s, a), alpha);
                change = std::max(change, std::abs(next[s] - alpha[s]));
            }
            alpha.swap(next);
            if (change <= 1e-12 * std::max(1.0, model.max_abs_reward() / (1.0 - gamma))) break;
        }
        vf.add(a, std::move(alpha));
    }
    return vf;
}

std::vector<Belief> expand_beliefs(const Pomdp& model, const SolverConfig& config) {
    const std::size_t A = model.num_actions();
    const std::size_t Z = model.num_observations();
    const bool enumerate = A * Z <= config.max_enumerated_branches;
    Rng rng(config.seed);

    std::vector<Belief> set;
    set.emplace_back(model.initial_belief().begin(), model.initial_belief().end());
    Belief successor;
    while (set.size() < config.belief_set_limit) {
        const std::size_t frontier = set.size();
        std::size_t added = 0;
        for (std::size_t i = 0; i < frontier && set.size() < config.belief_set_limit; ++i) {
            Belief best;
            double best_distance = config.min_belief_distance;
            auto consider = [&](Index a, Index z) {
                if (update_belief_into(model, set[i], a, z, successor) <= 0.0) return;
                const double d = distance_to_set(successor, set);
                if (d > best_distance) {
                    best_distance = d;
                    best = successor;
                }
            };
            for (Index a = 0; a < A; ++a) {
                if (enumerate) {
                    for (Index z = 0; z < Z; ++z) consider(a, z);
                } else {
                    const auto pz = observation_distribution(model, set[i], a);
                    consider(a, sample_index(pz, rng));
                }
            }
            if (!best.empty()) {
                set.push_back(std::move(best));
                ++added;
            }
        }
        if (added == 0) break;
    }
    return set;
}

std::vector<double> action_backup(const Pomdp& model, const ValueFunction& vf, std::span<const double> b,
                                  Index action) {
    const auto alphas = flatten(vf);
    std::vector<std::size_t> chosen(model.num_observations(), 0);
    Belief next;
    for (Index z = 0; z < chosen.size(); ++z)
        if (update_belief_into(model, b, action, z, next) > 0.0) chosen[z] = best_alpha(alphas, next);
    return assemble(model, action, alphas, chosen);
}

AlphaVector point_backup(const Pomdp& model, const ValueFunction& vf, std::span<const double> b) {
    AlphaVector best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < model.num_actions(); ++a) {
        auto alpha = action_backup(model, vf, b, a);
        const double v = dot(alpha, b);
        if (v > best_value) {
            best_value = v;
            best = {a, std::move(alpha)};
        }
    }
    return best;
}

ValueFunction solve(const Pomdp& model, const SolverConfig& config, SolveStats* stats) {
    model.validate();
    if (!(config.precision > 0.0)) throw ConfigError("solver precision must be positive");
    if (config.belief_set_limit == 0) throw ConfigError("belief_set_limit must be at least 1");

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();

    ValueFunction vf = blind_lower_bound(model);
    const auto beliefs = expand_beliefs(model, config);
    const auto succ = successors(model, beliefs);
    const std::size_t A = model.num_actions();
    const std::size_t Z = model.num_observations();

    SolveStats local;
    local.belief_points = beliefs.size();
    std::vector<double> q;
    prune(vf, beliefs, q);

    std::vector<std::size_t> best_at_successor(succ.unique.size());
    std::map<std::vector<std::size_t>, std::size_t> fresh_index;
    std::vector<std::vector<double>> fresh;
    std::vector<Index> fresh_action;
    std::vector<char> fresh_wanted;
    std::vector<std::size_t> key(1 + Z);
    for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
        const auto alphas = flatten(vf);
        for (std::size_t u = 0; u < succ.unique.size(); ++u) best_at_successor[u] = best_alpha(alphas, succ.unique[u]);

        fresh_index.clear();
        fresh.clear();
        fresh_action.clear();
        fresh_wanted.clear();
        double improvement = 0.0;
        for (std::size_t i = 0; i < beliefs.size(); ++i) {
            for (Index a = 0; a < A; ++a) {
                key[0] = a;
                for (Index z = 0; z < Z; ++z) {
                    const std::size_t u = succ.id[(i * A + a) * Z + z];
                    key[1 + z] = u == kImpossible ? 0 : best_at_successor[u];
                }
                auto [it, inserted] = fresh_index.try_emplace(key, fresh.size());
                if (inserted) {
                    fresh.push_back(assemble(model, a, alphas, std::span<const std::size_t>(key).subspan(1)));
                    fresh_action.push_back(a);
                    fresh_wanted.push_back(0);
                }
                const double gain = dot(fresh[it->second], beliefs[i]) - q[i * A + a];
                improvement = std::max(improvement, gain);
                if (gain > 0.0) fresh_wanted[it->second] = 1;
            }
        }
        for (std::size_t k = 0; k < fresh.size(); ++k)
            if (fresh_wanted[k]) vf.add(fresh_action[k], std::move(fresh[k]));
        prune(vf, beliefs, q);

        local.iterations = iter + 1;
        local.last_improvement = improvement;
        if (improvement < config.precision) {
            local.converged = true;
            break;
        }
        if (config.time_budget > 0.0 &&
            std::chrono::duration<double>(Clock::now() - start).count() >= config.time_budget)
            break;
    }
    if (stats) *stats = local;
    return vf;
}

SolverConfig with_environment_overrides(SolverConfig config) {
    if (const char* env = std::getenv("APL_TIME_BUDGET_SECS")) {
        char* end = nullptr;
        const double secs = std::strtod(env, &end);
        if (end == env || *end != '\0' || !(secs >= 0.0))
            throw ConfigError(std::string("APL_TIME_BUDGET_SECS is not a non-negative number: ") + env);
        config.time_budget = secs;
    }
    return config;
}

}  // namespace apl
