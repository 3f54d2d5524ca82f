#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "apl/estimators.hpp"
#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"

namespace apl {

/**
 * POMDP over pairs [s, m]: the hidden state of the base model plus the index m of
 * the posterior sample that generated the world. m is uniform at the start and
 * never changes, so T is block diagonal in m.
 *
 * Extended state [s, m] has index m * base_states + s.
 */
struct ExtendedPomdp {
    Pomdp model;
    std::size_t base_states = 0;
    std::size_t samples = 0;

    Index index(Index s, Index m) const noexcept { return m * base_states + s; }
    Index base_state(Index i) const noexcept { return i % base_states; }
    Index sample(Index i) const noexcept { return i / base_states; }
};

/// True when some state is absorbing with zero reward under every action (a terminal state).
bool is_episodic(const ParametricTemplate& tpl);

/// Throws EpisodicTemplate for templates with terminal states, ConfigError for an empty sample list.
ExtendedPomdp extend(std::span<const ParamVector> samples, const ParametricTemplate& tpl);
ExtendedPomdp extend(const SampleSet& samples, const ParametricTemplate& tpl);

/// Posterior mass of each sample index m under an extended belief.
std::vector<double> sample_marginal(const ExtendedPomdp& ext, std::span<const double> belief);

/**
 * Greedy policy over the solved extended POMDP. The agent filters its extended
 * belief with the extended model; the environment only supplies observations.
 * An observation impossible under every sample resets the belief to b~0.
 */
class PosteriorPolicy : public Policy {
public:
    PosteriorPolicy(ExtendedPomdp ext, ValueFunction vf);

    void reset() override;
    std::vector<double> action_distribution() const override;
    void observe(Index action, Index observation) override;
    std::size_t belief_resets() const override { return resets_; }

    const ExtendedPomdp& extended() const noexcept { return ext_; }
    const ValueFunction& value_function() const noexcept { return vf_; }
    const Belief& belief() const noexcept { return belief_; }
    std::vector<double> sample_marginal() const { return apl::sample_marginal(ext_, belief_); }
    /// V at the initial extended belief.
    double initial_value() const;

private:
    ExtendedPomdp ext_;
    ValueFunction vf_;
    Belief belief_;
    Belief scratch_;
    std::size_t resets_ = 0;
};

PosteriorPolicy plan_posterior(std::span<const ParamVector> samples, const ParametricTemplate& tpl,
                               const SolverConfig& solver_cfg);
PosteriorPolicy plan_posterior(const SampleSet& samples, const ParametricTemplate& tpl,
                               const SolverConfig& solver_cfg);

}  // namespace apl
