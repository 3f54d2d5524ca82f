#include "apl/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "apl/errors.hpp"

namespace apl {

namespace {

constexpr double kRowTolerance = 1e-9;

std::vector<std::string> default_names(const char* prefix, std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

}  // namespace

Pomdp::Pomdp(std::size_t states, std::size_t actions, std::size_t observations, double discount)
    : states_(states),
      actions_(actions),
      observations_(observations),
      discount_(discount),
      transition_(states * actions * states, 0.0),
      observation_(actions * states * observations, 0.0),
      initial_(states, 0.0),
      reward_(states * actions, 0.0),
      state_names_(default_names("s", states)),
      action_names_(default_names("a", actions)),
      observation_names_(default_names("z", observations)) {}

void Pomdp::set_transition(Index s, Index a, Index next, double p) {
    transition_.at((s * actions_ + a) * states_ + next) = p;
}

void Pomdp::set_observation(Index a, Index next, Index z, double p) {
    observation_.at((a * states_ + next) * observations_ + z) = p;
}

void Pomdp::set_initial(Index s, double p) { initial_.at(s) = p; }

void Pomdp::set_reward(Index s, Index a, double r) { reward_.at(s * actions_ + a) = r; }

void Pomdp::set_names(std::vector<std::string> states, std::vector<std::string> actions,
                      std::vector<std::string> observations) {
    if (states.size() != states_ || actions.size() != actions_ || observations.size() != observations_)
        throw InvalidModel("name list sizes do not match the model dimensions");
    state_names_ = std::move(states);
    action_names_ = std::move(actions);
    observation_names_ = std::move(observations);
}

std::vector<std::string> Pomdp::violations() const {
    std::vector<std::string> out;
    auto report = [&](auto&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        out.push_back(os.str());
    };
    if (states_ == 0 || actions_ == 0 || observations_ == 0) report("empty state, action or observation set");
    if (!(discount_ >= 0.0 && discount_ < 1.0)) report("discount ", discount_, " outside [0, 1)");

    auto probability = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };

    for (Index s = 0; s < states_; ++s) {
        for (Index a = 0; a < actions_; ++a) {
            double sum = 0.0;
            for (Index n = 0; n < states_; ++n) {
                const double p = transition(s, a, n);
                if (!probability(p)) report("T(", s, ",", a, ",", n, ") = ", p, " outside [0, 1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowTolerance) report("T(", s, ",", a, ",.) sums to ", sum);
            if (!std::isfinite(reward(s, a))) report("R(", s, ",", a, ") is not finite");
        }
    }
    for (Index a = 0; a < actions_; ++a) {
        for (Index n = 0; n < states_; ++n) {
            double sum = 0.0;
            for (Index z = 0; z < observations_; ++z) {
                const double p = observation(a, n, z);
                if (!probability(p)) report("O(", a, ",", n, ",", z, ") = ", p, " outside [0, 1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowTolerance) report("O(", a, ",", n, ",.) sums to ", sum);
        }
    }
    double sum = 0.0;
    for (Index s = 0; s < states_; ++s) {
        if (!probability(initial_[s])) report("b0(", s, ") = ", initial_[s], " outside [0, 1]");
        sum += initial_[s];
    }
    if (states_ > 0 && std::abs(sum - 1.0) > kRowTolerance) report("b0 sums to ", sum);
    return out;
}

void Pomdp::validate() const {
    const auto problems = violations();
    if (!problems.empty()) throw InvalidModel("invalid POMDP: " + problems.front());
}

double Pomdp::max_abs_reward() const noexcept {
    double m = 0.0;
    for (double r : reward_) m = std::max(m, std::abs(r));
    return m;
}

void check_trace(const Pomdp& model, const DemoTrace& trace) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& step = trace.steps[i];
        if (step.action >= model.num_actions() || step.observation >= model.num_observations())
            throw InvalidModel("trace step " + std::to_string(i + 1) + " has an out-of-range index");
    }
}

double update_belief_into(const Pomdp& model, std::span<const double> b, Index a, Index z,
                          Belief& out) {
    const std::size_t n = model.num_states();
    out.assign(n, 0.0);
    for (Index s = 0; s < n; ++s) {
        const double w = b[s];
        if (w == 0.0) continue;
        const auto row = model.transition_row(s, a);
        for (Index next = 0; next < n; ++next) out[next] += row[next] * w;
    }
    double norm = 0.0;
    for (Index next = 0; next < n; ++next) {
        out[next] *= model.observation(a, next, z);
        norm += out[next];
    }
    if (norm > 0.0) {
        const double inv = 1.0 / norm;
        for (double& x : out) x *= inv;
    }
    return norm;
}

BeliefUpdate belief_update(const Pomdp& model, std::span<const double> b, Index a, Index z) {
    BeliefUpdate result;
    result.normalizer = update_belief_into(model, b, a, z, result.belief);
    if (!(result.normalizer > 0.0))
        throw ZeroProbabilityObservation("observation " + std::to_string(z) + " has zero probability after action " +
                                         std::to_string(a));
    return result;
}

std::vector<double> observation_distribution(const Pomdp& model, std::span<const double> b, Index a) {
    const std::size_t n = model.num_states();
    std::vector<double> predicted(n, 0.0);
    for (Index s = 0; s < n; ++s) {
        if (b[s] == 0.0) continue;
        const auto row = model.transition_row(s, a);
        for (Index next = 0; next < n; ++next) predicted[next] += row[next] * b[s];
    }
    std::vector<double> pz(model.num_observations(), 0.0);
    for (Index next = 0; next < n; ++next) {
        if (predicted[next] == 0.0) continue;
        for (Index z = 0; z < pz.size(); ++z) pz[z] += predicted[next] * model.observation(a, next, z);
    }
    return pz;
}

ValueFunction::ValueFunction(std::size_t actions, std::size_t states) : states_(states), sets_(actions) {}

void ValueFunction::add(Index action, std::vector<double> values) {
    if (values.size() != states_) throw InvalidModel("alpha-vector length does not match the state count");
    sets_.at(action).push_back(std::move(values));
}

std::size_t ValueFunction::size() const noexcept {
    std::size_t n = 0;
    for (const auto& set : sets_) n += set.size();
    return n;
}

bool ValueFunction::valid() const noexcept {
    if (sets_.empty()) return false;
    for (const auto& set : sets_) {
        if (set.empty()) return false;
        for (const auto& alpha : set)
            for (double v : alpha)
                if (!std::isfinite(v)) return false;
    }
    return true;
}

std::vector<AlphaVector> ValueFunction::alpha_vectors() const {
    std::vector<AlphaVector> out;
    for (Index a = 0; a < sets_.size(); ++a)
        for (const auto& alpha : sets_[a]) out.push_back({a, alpha});
    return out;
}

ActionValues action_values(const ValueFunction& vf, std::span<const double> b) {
    ActionValues out;
    out.q.assign(vf.num_actions(), -std::numeric_limits<double>::infinity());
    for (Index a = 0; a < vf.num_actions(); ++a)
        for (const auto& alpha : vf.vectors(a)) out.q[a] = std::max(out.q[a], dot(alpha, b));
    out.value = *std::max_element(out.q.begin(), out.q.end());
    return out;
}

std::vector<double> softmax(std::span<const double> q, double beta) {
    std::vector<double> p(q.size(), 0.0);
    if (q.empty()) return p;
    const double top = *std::max_element(q.begin(), q.end());
    double total = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        p[i] = beta == 0.0 ? 1.0 : std::exp(beta * (q[i] - top));
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

std::vector<double> softmax_policy(const ValueFunction& vf, const PolicyConfig& cfg,
                                   std::span<const double> b) {
    return softmax(action_values(vf, b).q, cfg.beta);
}

Index argmax(std::span<const double> q) noexcept {
    Index best = 0;
    for (Index i = 1; i < q.size(); ++i)
        if (q[i] > q[best]) best = i;
    return best;
}

Index greedy_action(const ValueFunction& vf, std::span<const double> b) {
    return argmax(action_values(vf, b).q);
}

BeliefPolicy::BeliefPolicy(Pomdp model, DecisionRule rule)
    : model_(std::move(model)), rule_(std::move(rule)) {
    reset();
}

void BeliefPolicy::reset() {
    const auto b0 = model_.initial_belief();
    belief_.assign(b0.begin(), b0.end());
}

std::vector<double> BeliefPolicy::action_distribution() const { return rule_(belief_); }

void BeliefPolicy::observe(Index action, Index observation) {
    const double norm = update_belief_into(model_, belief_, action, observation, scratch_);
    if (norm > 0.0) {
        belief_.swap(scratch_);
    } else {
        ++resets_;
        reset();
    }
}

std::unique_ptr<BeliefPolicy> make_softmax_policy(const Pomdp& model, ValueFunction vf, PolicyConfig cfg) {
    return std::make_unique<BeliefPolicy>(model, [vf = std::move(vf), cfg](std::span<const double> b) {
        return softmax_policy(vf, cfg, b);
    });
}

std::unique_ptr<BeliefPolicy> make_greedy_policy(const Pomdp& model, ValueFunction vf) {
    const std::size_t actions = model.num_actions();
    return std::make_unique<BeliefPolicy>(model, [vf = std::move(vf), actions](std::span<const double> b) {
        std::vector<double> p(actions, 0.0);
        p[greedy_action(vf, b)] = 1.0;
        return p;
    });
}

std::unique_ptr<BeliefPolicy> make_constant_policy(const Pomdp& model, Index action) {
    const std::size_t actions = model.num_actions();
    return std::make_unique<BeliefPolicy>(model, [action, actions](std::span<const double>) {
        std::vector<double> p(actions, 0.0);
        p.at(action) = 1.0;
        return p;
    });
}

std::unique_ptr<BeliefPolicy> make_uniform_policy(const Pomdp& model) {
    const std::size_t actions = model.num_actions();
    return std::make_unique<BeliefPolicy>(model, [actions](std::span<const double>) {
        return std::vector<double>(actions, 1.0 / static_cast<double>(actions));
    });
}

SimulationResult simulate(const Pomdp& environment, Policy& policy, std::size_t steps,
                          std::uint64_t seed, bool record_trace) {
    if (steps == 0) throw ConfigError("simulate needs at least one step");
    Rng rng(seed);
    SimulationResult result;
    if (record_trace) result.trace.steps.reserve(steps);

    const std::size_t batches = std::min<std::size_t>(100, steps);
    const std::size_t batch_size = steps / batches;
    std::vector<double> batch_means;
    batch_means.reserve(batches);
    double batch_sum = 0.0;
    std::size_t in_batch = 0;

    std::vector<double> obs_weights(environment.num_observations());
    Index state = sample_index(environment.initial_belief(), rng);
    policy.reset();
    const std::size_t resets_before = policy.belief_resets();
    for (std::size_t t = 0; t < steps; ++t) {
        const auto dist = policy.action_distribution();
        const Index a = sample_index(dist, rng);
        const double r = environment.reward(state, a);
        const Index next = sample_index(environment.transition_row(state, a), rng);
        for (Index z = 0; z < obs_weights.size(); ++z) obs_weights[z] = environment.observation(a, next, z);
        const Index z = sample_index(obs_weights, rng);
        policy.observe(a, z);
        if (record_trace) result.trace.steps.push_back({a, z});
        state = next;

        result.total_reward += r;
        batch_sum += r;
        if (++in_batch == batch_size && batch_means.size() < batches) {
            batch_means.push_back(batch_sum / static_cast<double>(batch_size));
            batch_sum = 0.0;
            in_batch = 0;
        }
    }
    result.average_reward = result.total_reward / static_cast<double>(steps);
    result.belief_resets = policy.belief_resets() - resets_before;

    if (batch_means.size() > 1) {
        double mean = 0.0;
        for (double m : batch_means) mean += m;
        mean /= static_cast<double>(batch_means.size());
        double var = 0.0;
        for (double m : batch_means) var += (m - mean) * (m - mean);
        var /= static_cast<double>(batch_means.size() - 1);
        result.standard_error = std::sqrt(var / static_cast<double>(batch_means.size()));
    }
    return result;
}

DemoTrace generate_demo(const Pomdp& model, const ValueFunction& vf_true, const PolicyConfig& cfg,
                        std::size_t length, std::uint64_t seed) {
    auto expert = make_softmax_policy(model, vf_true, cfg);
    return simulate(model, *expert, length, seed).trace;
}

}  // namespace apl
