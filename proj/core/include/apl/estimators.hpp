#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apl/likelihood.hpp"
#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"

namespace apl {

struct McmcConfig {
    std::size_t total_sweeps = 1000;
    std::size_t burn_in = 100;
    std::size_t thin = 10;
    std::uint64_t seed = 0;
    /// Keep the solved value function of each retained sample (Metropolis chains only).
    bool keep_value_functions = false;

    /// Number of retained samples, (total_sweeps - burn_in) / thin.
    std::size_t retained() const noexcept;
    void validate() const;
};

struct MapConfig {
    std::optional<ParamVector> start;
    std::size_t max_evaluations = 200;
    double step_tolerance = 1e-3;
    /// Probability parameters are searched inside [margin, 1 - margin].
    double probability_margin = 1e-4;
    /// Normal parameters are searched inside mean +- normal_sigmas * sd.
    double normal_sigmas = 4.0;
};

struct EmConfig {
    std::size_t max_iterations = 200;
    double tolerance = 1e-6;
};

struct SampleSet {
    std::vector<ParamVector> samples;
    std::vector<ValueFunction> value_functions;
    std::size_t proposals = 0;
    std::size_t accepted = 0;

    std::size_t size() const noexcept { return samples.size(); }
    double acceptance_rate() const noexcept;
    ParamVector mean() const;
    /// Per-component sample standard deviation (n - 1 denominator).
    ParamVector sd() const;
};

struct MapResult {
    ParamVector estimate;
    double log_posterior = 0.0;
    double start_log_posterior = 0.0;
    std::size_t evaluations = 0;
};

struct EmResult {
    ParamVector estimate;
    /// Observation log-posterior at the start and after every iteration.
    std::vector<double> log_posterior_trace;
    std::size_t iterations = 0;
};

enum class ParameterRole {
    /// Appears only in entries theta_k or 1 - theta_k of T, O or b0 (and possibly rewards).
    BernoulliTied,
    /// Appears only in reward entries.
    RewardOnly,
};

/// Throws UnsupportedParameterRole for anything else.
ParameterRole classify_parameter(const ParametricTemplate& tpl, Index k);

struct TiedCounts {
    double successes = 0.0;  ///< occurrences of an entry theta_k
    double failures = 0.0;   ///< occurrences of an entry 1 - theta_k
};

/// Counts how often the complete data (path, trace) passes through theta_k / 1 - theta_k entries.
TiedCounts count_tied_outcomes(const ParametricTemplate& tpl, Index k, const StateSequence& path,
                               const DemoTrace& trace);

/**
 * Draw of theta_k from its IO-HMM full conditional given the hidden path:
 * Beta(a + successes, b + failures) for tied probabilities, the prior for reward-only parameters.
 */
double conditional_draw(const ParametricTemplate& tpl, std::span<const double> theta, Index k,
                        const StateSequence& path, const DemoTrace& trace, Rng& rng);

/// Metropolis rule: accept iff u < min(1, p'/p), evaluated in log space. log p = -inf always accepts.
bool metropolis_accept(double log_p_current, double log_p_proposed, double u) noexcept;

/**
 * Metropolis-within-Gibbs posterior sampler. Each sweep draws the hidden path by
 * FFBS, then for every parameter in random order proposes from the IO-HMM
 * conditional and accepts on the expert-action likelihood ratio alone.
 */
SampleSet mcmc_posterior(const ParametricTemplate& tpl, const DemoTrace& trace, const PolicyConfig& cfg,
                         const McmcConfig& mcmc_cfg, const SolverConfig& solver_cfg);

/// The same sweep with every proposal accepted: Gibbs on the IO-HMM posterior only.
SampleSet iohmm_gibbs(const ParametricTemplate& tpl, const DemoTrace& trace, const McmcConfig& mcmc_cfg);

/// MAP-EM on the observation likelihood with Beta pseudo-counts; rewards stay at the prior mean.
EmResult iohmm_em(const ParametricTemplate& tpl, const DemoTrace& trace, const EmConfig& em_cfg = {});

/// log p(theta) restricted to tied parameters + obs_loglik; the quantity EM ascends.
double observation_log_posterior(const ParametricTemplate& tpl, std::span<const double> theta,
                                 const DemoTrace& trace);

/// Box-constrained Nelder-Mead on log_posterior; each evaluation solves P_theta.
MapResult map_estimate(const ParametricTemplate& tpl, const DemoTrace& trace, const PolicyConfig& cfg,
                       const MapConfig& map_cfg, const SolverConfig& solver_cfg);

}  // namespace apl
