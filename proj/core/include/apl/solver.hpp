#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "apl/pomdp.hpp"

namespace apl {

struct SolverConfig {
    /// Stop once no Q(b, a) at a retained belief improves by this much in a sweep.
    double precision = 1e-3;
    std::size_t max_iterations = 500;
    /// Wall-clock budget in seconds; 0 means unlimited.
    double time_budget = 0.0;
    std::size_t belief_set_limit = 256;
    std::uint64_t seed = 0;
    /// Successor beliefs closer than this (L1) to the retained set are not added.
    double min_belief_distance = 1e-6;
    /// Above this many (a, z) branches per belief, observations are sampled instead of enumerated.
    std::size_t max_enumerated_branches = 64;
};

struct SolveStats {
    std::size_t iterations = 0;
    std::size_t belief_points = 0;
    double last_improvement = 0.0;
    bool converged = false;
};

/// Value of repeating each action forever, one alpha-vector per action.
ValueFunction blind_lower_bound(const Pomdp& model);

/// Reachable belief points from b0, grown by farthest-successor expansion.
std::vector<Belief> expand_beliefs(const Pomdp& model, const SolverConfig& config);

/// Point-based Bellman backup at b restricted to one action.
std::vector<double> action_backup(const Pomdp& model, const ValueFunction& vf, std::span<const double> b,
                                  Index action);

/// Point-based Bellman backup at b; the returned vector belongs to the maximizing action.
AlphaVector point_backup(const Pomdp& model, const ValueFunction& vf, std::span<const double> b);

/**
 * Point-based value iteration from the blind lower bound.
 *
 * Every sweep backs up every action at every retained belief, so Q(b, a) is a
 * one-step lookahead value for all actions, not only the greedy one. Sets are
 * pruned to vectors that win somewhere on the belief set; no set is ever emptied.
 */
ValueFunction solve(const Pomdp& model, const SolverConfig& config, SolveStats* stats = nullptr);

/// Applies the APL_TIME_BUDGET_SECS environment override when it is set.
SolverConfig with_environment_overrides(SolverConfig config);

}  // namespace apl
