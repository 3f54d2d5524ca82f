#include "apl/planning.hpp"

#include "apl/errors.hpp"

namespace apl {

bool is_episodic(const ParametricTemplate& tpl) {
    for (Index s = 0; s < tpl.num_states(); ++s) {
        bool absorbing = true;
        for (Index a = 0; a < tpl.num_actions() && absorbing; ++a) {
            const auto& stay = tpl.transition(s, a, s);
            const auto& r = tpl.reward(s, a);
            absorbing = stay.is_constant() && stay.constant == 1.0 && r.is_constant() && r.constant == 0.0;
        }
        if (absorbing) return true;
    }
    return false;
}

ExtendedPomdp extend(std::span<const ParamVector> samples, const ParametricTemplate& tpl) {
    if (samples.empty()) throw ConfigError("cannot extend over an empty sample set");
    if (is_episodic(tpl))
        throw EpisodicTemplate("template has an absorbing terminal state; convert it to a non-episodic model first");

    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
    const std::size_t M = samples.size();
    ExtendedPomdp ext{Pomdp(S * M, A, Z, tpl.discount()), S, M};
    const double weight = 1.0 / static_cast<double>(M);

    std::vector<std::string> names;
    for (Index m = 0; m < M; ++m) {
        const Pomdp base = instantiate(tpl, samples[m]);
        for (Index s = 0; s < S; ++s) {
            const Index i = ext.index(s, m);
            names.push_back(tpl.state_names()[s] + "@" + std::to_string(m));
            ext.model.set_initial(i, base.initial(s) * weight);
            for (Index a = 0; a < A; ++a) {
                ext.model.set_reward(i, a, base.reward(s, a));
                for (Index n = 0; n < S; ++n) ext.model.set_transition(i, a, ext.index(n, m), base.transition(s, a, n));
                for (Index z = 0; z < Z; ++z) ext.model.set_observation(a, i, z, base.observation(a, s, z));
            }
        }
    }
    ext.model.set_names(std::move(names), tpl.action_names(), tpl.observation_names());
    return ext;
}

ExtendedPomdp extend(const SampleSet& samples, const ParametricTemplate& tpl) {
    return extend(std::span<const ParamVector>(samples.samples), tpl);
}

std::vector<double> sample_marginal(const ExtendedPomdp& ext, std::span<const double> belief) {
    std::vector<double> out(ext.samples, 0.0);
    for (Index i = 0; i < belief.size(); ++i) out[ext.sample(i)] += belief[i];
    return out;
}

PosteriorPolicy::PosteriorPolicy(ExtendedPomdp ext, ValueFunction vf) : ext_(std::move(ext)), vf_(std::move(vf)) {
    reset();
}

void PosteriorPolicy::reset() {
    const auto b0 = ext_.model.initial_belief();
    belief_.assign(b0.begin(), b0.end());
}

std::vector<double> PosteriorPolicy::action_distribution() const {
    std::vector<double> p(ext_.model.num_actions(), 0.0);
    p[greedy_action(vf_, belief_)] = 1.0;
    return p;
}

void PosteriorPolicy::observe(Index action, Index observation) {
    const double norm = update_belief_into(ext_.model, belief_, action, observation, scratch_);
    if (norm > 0.0) {
        belief_.swap(scratch_);
    } else {
        ++resets_;
        reset();
    }
}

double PosteriorPolicy::initial_value() const { return action_values(vf_, ext_.model.initial_belief()).value; }

PosteriorPolicy plan_posterior(std::span<const ParamVector> samples, const ParametricTemplate& tpl,
                               const SolverConfig& solver_cfg) {
    auto ext = extend(samples, tpl);
    auto vf = solve(ext.model, solver_cfg);
    return PosteriorPolicy(std::move(ext), std::move(vf));
}

PosteriorPolicy plan_posterior(const SampleSet& samples, const ParametricTemplate& tpl,
                               const SolverConfig& solver_cfg) {
    return plan_posterior(std::span<const ParamVector>(samples.samples), tpl, solver_cfg);
}

}  // namespace apl
