#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"

namespace apl {

/**
 * Hidden-state path for a trace of length L: `initial` is the state before the
 * first action (drawn from b0), `states[i]` the state after step i + 1.
 */
struct StateSequence {
    Index initial = 0;
    std::vector<Index> states;
    friend bool operator==(const StateSequence&, const StateSequence&) = default;
};

/// log P(z_1..z_L | a_1..a_L) by the scaled forward algorithm; -infinity for impossible traces.
double obs_loglik(const Pomdp& model, const DemoTrace& trace);

/// sum_i log softmax(beta Q(b_i, .))[a_i] with b_1 = b0; -infinity if filtering fails.
double action_loglik(const Pomdp& model, const ValueFunction& vf, const PolicyConfig& cfg,
                     const DemoTrace& trace);

struct PosteriorTerms {
    double log_prior = 0.0;
    double obs_loglik = 0.0;
    double action_loglik = 0.0;
    double total() const noexcept { return log_prior + obs_loglik + action_loglik; }
};

/// Each of the three terms of the unnormalized log posterior at theta.
PosteriorTerms posterior_terms(const ParametricTemplate& tpl, std::span<const double> theta,
                               const DemoTrace& trace, const PolicyConfig& cfg,
                               const SolverConfig& solver_cfg);

/// log p(theta) + log p(z | a, theta) + log p(a | z, theta); -infinity outside the support.
double log_posterior(const ParametricTemplate& tpl, std::span<const double> theta, const DemoTrace& trace,
                     const PolicyConfig& cfg, const SolverConfig& solver_cfg);

/**
 * Exact forward-backward posteriors over hidden states with actions as inputs.
 * `marginals[0]` is the initial state, `marginals[i]` the state after step i;
 * `pairwise[i]` holds P(s_i = s, s_{i+1} = s') row-major in (s, s').
 */
struct Smoothing {
    std::vector<Belief> marginals;
    std::vector<std::vector<double>> pairwise;
    double loglik = 0.0;
};

/// Throws ImpossibleTrace when the trace has zero likelihood.
Smoothing smoothed_marginals(const Pomdp& model, const DemoTrace& trace);

/// Joint posterior draw of the hidden path by forward filtering, backward sampling.
StateSequence ffbs(const Pomdp& model, const DemoTrace& trace, Rng& rng);
StateSequence ffbs(const Pomdp& model, const DemoTrace& trace, std::uint64_t seed);

}  // namespace apl
