#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apl/random.hpp"

namespace apl {

using Index = std::size_t;

/// Probability distribution over hidden states.
using Belief = std::vector<double>;

/**
 * Finite discrete POMDP <S, A, Z, T, O, b0, R, gamma>.
 *
 * Tables are dense: T(s, a, s'), O(a, s', z), b0(s), R(s, a). Entries are set
 * through the setters and checked as a whole by validate(); after that the
 * model is treated as an immutable value.
 */
class Pomdp {
public:
    Pomdp() = default;
    Pomdp(std::size_t states, std::size_t actions, std::size_t observations, double discount);

    std::size_t num_states() const noexcept { return states_; }
    std::size_t num_actions() const noexcept { return actions_; }
    std::size_t num_observations() const noexcept { return observations_; }
    double discount() const noexcept { return discount_; }

    double transition(Index s, Index a, Index next) const noexcept {
        return transition_[(s * actions_ + a) * states_ + next];
    }
    double observation(Index a, Index next, Index z) const noexcept {
        return observation_[(a * states_ + next) * observations_ + z];
    }
    double initial(Index s) const noexcept { return initial_[s]; }
    double reward(Index s, Index a) const noexcept { return reward_[s * actions_ + a]; }

    /// Row T(s, a, .) as a contiguous span.
    std::span<const double> transition_row(Index s, Index a) const noexcept {
        return {transition_.data() + (s * actions_ + a) * states_, states_};
    }
    std::span<const double> initial_belief() const noexcept { return initial_; }

    void set_transition(Index s, Index a, Index next, double p);
    void set_observation(Index a, Index next, Index z, double p);
    void set_initial(Index s, double p);
    void set_reward(Index s, Index a, double r);
    void set_discount(double discount) { discount_ = discount; }

    const std::vector<std::string>& state_names() const noexcept { return state_names_; }
    const std::vector<std::string>& action_names() const noexcept { return action_names_; }
    const std::vector<std::string>& observation_names() const noexcept { return observation_names_; }
    void set_names(std::vector<std::string> states, std::vector<std::string> actions,
                   std::vector<std::string> observations);

    /// Invariant violations as readable messages; empty when the model is valid.
    std::vector<std::string> violations() const;
    /// Throws InvalidModel listing the first violation.
    void validate() const;

    double max_abs_reward() const noexcept;

    friend bool operator==(const Pomdp&, const Pomdp&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::size_t observations_ = 0;
    double discount_ = 0.0;
    std::vector<double> transition_;
    std::vector<double> observation_;
    std::vector<double> initial_;
    std::vector<double> reward_;
    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::vector<std::string> observation_names_;
};

/// One step of an expert demonstration: the action taken and the observation that followed.
struct Step {
    Index action = 0;
    Index observation = 0;
    friend bool operator==(const Step&, const Step&) = default;
};

/// Demonstration D = (a1 z1 ... aL zL).
struct DemoTrace {
    std::vector<Step> steps;

    std::size_t size() const noexcept { return steps.size(); }
    bool empty() const noexcept { return steps.empty(); }
    friend bool operator==(const DemoTrace&, const DemoTrace&) = default;
};

/// Throws InvalidModel if any index in the trace is out of range for the model.
void check_trace(const Pomdp& model, const DemoTrace& trace);

/**
 * Bayes filter step: b'(s') proportional to O(a,s',z) * sum_s T(s,a,s') b(s).
 *
 * Writes the normalized belief into `out` and returns the normalizer, i.e.
 * P(z | b, a). When the normalizer is 0 `out` is left unnormalized (all zero).
 */
double update_belief_into(const Pomdp& model, std::span<const double> b, Index a, Index z,
                          Belief& out);

struct BeliefUpdate {
    Belief belief;
    double normalizer = 0.0;
};

/// Throws ZeroProbabilityObservation when z is impossible after (b, a).
BeliefUpdate belief_update(const Pomdp& model, std::span<const double> b, Index a, Index z);

/// P(z | b, a) for every z.
std::vector<double> observation_distribution(const Pomdp& model, std::span<const double> b, Index a);

struct AlphaVector {
    Index action = 0;
    std::vector<double> values;
};

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

/**
 * Piecewise-linear convex value function: one set Gamma(a) of alpha-vectors per action.
 * Q(b, a) = max over Gamma(a) of alpha . b and V(b) = max_a Q(b, a).
 */
class ValueFunction {
public:
    ValueFunction() = default;
    ValueFunction(std::size_t actions, std::size_t states);

    std::size_t num_actions() const noexcept { return sets_.size(); }
    std::size_t num_states() const noexcept { return states_; }

    void add(Index action, std::vector<double> values);
    const std::vector<std::vector<double>>& vectors(Index action) const { return sets_.at(action); }
    std::vector<std::vector<double>>& mutable_vectors(Index action) { return sets_.at(action); }
    std::size_t size() const noexcept;

    /// True when every Gamma(a) is non-empty and all values are finite.
    bool valid() const noexcept;

    std::vector<AlphaVector> alpha_vectors() const;

    friend bool operator==(const ValueFunction&, const ValueFunction&) = default;

private:
    std::size_t states_ = 0;
    std::vector<std::vector<std::vector<double>>> sets_;
};

struct ActionValues {
    std::vector<double> q;
    double value = 0.0;
};

ActionValues action_values(const ValueFunction& vf, std::span<const double> b);

struct PolicyConfig {
    double beta = 0.3;
};

/// Boltzmann distribution exp(beta q_a) / sum exp(beta q_a'), max-shifted for stability.
std::vector<double> softmax(std::span<const double> q, double beta);
std::vector<double> softmax_policy(const ValueFunction& vf, const PolicyConfig& cfg,
                                   std::span<const double> b);

/// argmax_a Q(b, a); ties go to the lowest action index.
Index argmax(std::span<const double> q) noexcept;
Index greedy_action(const ValueFunction& vf, std::span<const double> b);

/**
 * An acting agent. It keeps its own internal state (usually a belief under its
 * own model) and reports a distribution over actions for the next step.
 */
class Policy {
public:
    virtual ~Policy() = default;
    virtual void reset() = 0;
    virtual std::vector<double> action_distribution() const = 0;
    virtual void observe(Index action, Index observation) = 0;
    /// Number of times the agent had to reset after an impossible observation.
    virtual std::size_t belief_resets() const { return 0; }
};

/// Filters a belief under `model` and maps it to an action distribution.
class BeliefPolicy : public Policy {
public:
    using DecisionRule = std::function<std::vector<double>(std::span<const double>)>;

    BeliefPolicy(Pomdp model, DecisionRule rule);

    void reset() override;
    std::vector<double> action_distribution() const override;
    void observe(Index action, Index observation) override;
    std::size_t belief_resets() const override { return resets_; }

    const Belief& belief() const noexcept { return belief_; }
    const Pomdp& model() const noexcept { return model_; }

private:
    Pomdp model_;
    DecisionRule rule_;
    Belief belief_;
    Belief scratch_;
    std::size_t resets_ = 0;
};

std::unique_ptr<BeliefPolicy> make_softmax_policy(const Pomdp& model, ValueFunction vf, PolicyConfig cfg);
std::unique_ptr<BeliefPolicy> make_greedy_policy(const Pomdp& model, ValueFunction vf);
std::unique_ptr<BeliefPolicy> make_constant_policy(const Pomdp& model, Index action);
std::unique_ptr<BeliefPolicy> make_uniform_policy(const Pomdp& model);

struct SimulationResult {
    DemoTrace trace;
    double total_reward = 0.0;
    double average_reward = 0.0;
    /// Standard error of the average reward, estimated by batch means.
    double standard_error = 0.0;
    std::size_t belief_resets = 0;
};

/**
 * Runs `policy` against `environment` for `steps` steps. Hidden states follow the
 * environment dynamics; the policy only sees (action, observation) pairs.
 */
SimulationResult simulate(const Pomdp& environment, Policy& policy, std::size_t steps,
                          std::uint64_t seed, bool record_trace = true);

/// Expert demonstration of length `length` under the soft-max policy of `vf_true`.
DemoTrace generate_demo(const Pomdp& model, const ValueFunction& vf_true, const PolicyConfig& cfg,
                        std::size_t length, std::uint64_t seed);

}  // namespace apl
