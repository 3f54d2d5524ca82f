#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apl/estimators.hpp"
#include "apl/model_family.hpp"
#include "apl/planning.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"

namespace apl {

enum class Method { Map, Mcmc, Em, Gibbs };

std::string_view method_name(Method m) noexcept;
/// Accepts "map", "mcmc", "em", "gibbs"; throws ConfigError otherwise.
Method parse_method(std::string_view name);
bool is_sampler(Method m) noexcept;
/// The proposed methods use the expert-action likelihood; the IO-HMM baselines do not.
bool uses_action_likelihood(Method m) noexcept;

struct ExperimentConfig {
    std::string model = "builtin:tiger";
    ParamVector true_theta = tiger::kTrueTheta;
    double beta = 0.3;
    std::size_t demo_length = 100;
    std::size_t demos = 10;
    std::vector<Method> methods{Method::Em, Method::Gibbs, Method::Map, Method::Mcmc};
    McmcConfig mcmc{500, 100, 10, 0, false};
    MapConfig map;
    EmConfig em;
    SolverConfig solver;
    std::size_t eval_steps = 10000;
    std::size_t expert_eval_steps = 100000;
    std::uint64_t seed = 1;
    /// Worker threads for (demo, method) cells; 0 uses the hardware concurrency.
    std::size_t threads = 1;
    double histogram_min = -1.0;
    double histogram_bin_width = 0.25;

    /// 10 demos x 100 steps, MCMC 500/100/10, 10k evaluation steps.
    static ExperimentConfig desk_scale();
    /// 100 demos x 100 steps, MCMC 1000/100/10, 100k evaluation steps.
    static ExperimentConfig full_scale();
    void validate() const;
};

/// Result of one estimator on one demonstration.
struct RunRecord {
    std::size_t demo = 0;
    Method method = Method::Map;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;

    ParamVector estimate;
    std::vector<ParamVector> samples;
    ParamVector sample_sd;
    ParamVector estimate_error;

    double average_reward = 0.0;
    double reward_se = 0.0;
    std::size_t belief_resets = 0;
    double wall_seconds = 0.0;

    double acceptance_rate = 0.0;
    std::size_t iterations = 0;  ///< EM iterations or MAP objective evaluations
};

struct Histogram {
    double min = 0.0;
    double bin_width = 0.25;
    /// Count below `min` (the "Less" bar).
    std::size_t less = 0;
    std::vector<std::size_t> counts;

    std::size_t total() const noexcept;
};

Histogram make_histogram(std::span<const double> values, double min, double bin_width);

struct MethodSummary {
    Method method = Method::Map;
    std::size_t runs = 0;
    std::size_t failures = 0;
    ParamVector mean_error;
    ParamVector rmse;
    /// Average within-chain standard deviation; empty for point estimators.
    ParamVector sd_samples;
    /// Per parameter: false where the method has no information (rewards under IO-HMM methods).
    std::vector<bool> estimable;
    std::vector<double> rewards;
    Histogram histogram;
};

struct ResultsBundle {
    ExperimentConfig config;
    std::vector<std::string> param_names;
    /// Parameters that only enter rewards; observation-only methods cannot estimate them.
    std::vector<bool> reward_only;
    ParamVector prior_mean;
    ParamVector prior_mean_error;
    double expert_reward = 0.0;
    double expert_se = 0.0;
    std::vector<std::size_t> demo_episodes;
    std::vector<RunRecord> runs;
    std::vector<MethodSummary> summaries;

    const MethodSummary* summary(Method m) const noexcept;
    std::vector<const RunRecord*> runs_of(Method m) const;
};

/// Runs one estimator on one demonstration and evaluates the derived policy.
RunRecord run_estimator(const ParametricTemplate& tpl, const DemoTrace& trace, Method method,
                        const ExperimentConfig& config, std::uint64_t seed, const Pomdp* environment);

/// Aggregates per-method statistics from the bundle's run records.
void summarize(ResultsBundle& bundle);

using ProgressFn = std::function<void(const RunRecord&)>;

/// The full demonstrate-estimate-plan-evaluate pipeline; failures are recorded, never thrown.
ResultsBundle run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Table of mean error / RMSE / s.d. samples per parameter and method, plus reward summary.
std::string report_table(const ResultsBundle& bundle);
/// CSV rows `method,bin_lower,bin_upper,count`; the underflow bin has lower bound -inf.
std::string report_histogram_csv(const ResultsBundle& bundle);

std::string bundle_to_json(const ResultsBundle& bundle);
ResultsBundle bundle_from_json(std::string_view text);

std::string record_to_json(const RunRecord& record, const std::vector<std::string>& param_names);
RunRecord record_from_json(std::string_view text);

/// Serialized executable policy: the sample list it was planned over plus its alpha-vectors.
std::string policy_to_json(const PosteriorPolicy& policy, std::span<const ParamVector> samples,
                           const std::vector<std::string>& param_names);
/// Rebuilds the extended model from the samples and the template.
PosteriorPolicy policy_from_json(std::string_view text, const ParametricTemplate& tpl);

/// Number of steps that take a door-opening style action (any action that is not `listen`).
std::size_t count_episodes(const DemoTrace& trace, Index listen_action = tiger::kListen);

}  // namespace apl
