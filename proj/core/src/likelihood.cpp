#include "apl/likelihood.hpp"

#include <cmath>
#include <limits>

#include "apl/errors.hpp"

namespace apl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Filtered beliefs f[0] = b0, f[i] = P(s_i | z_1..z_i); returns the log-likelihood or -inf.
double forward(const Pomdp& model, const DemoTrace& trace, std::vector<Belief>& filtered) {
    filtered.assign(1, Belief(model.initial_belief().begin(), model.initial_belief().end()));
    filtered.reserve(trace.size() + 1);
    double loglik = 0.0;
    Belief next;
    for (const auto& step : trace.steps) {
        const double norm = update_belief_into(model, filtered.back(), step.action, step.observation, next);
        if (!(norm > 0.0)) return kNegInf;
        loglik += std::log(norm);
        filtered.push_back(next);
    }
    return loglik;
}

}  // namespace

double obs_loglik(const Pomdp& model, const DemoTrace& trace) {
    check_trace(model, trace);
    Belief b(model.initial_belief().begin(), model.initial_belief().end());
    Belief next;
    double loglik = 0.0;
    for (const auto& step : trace.steps) {
        const double norm = update_belief_into(model, b, step.action, step.observation, next);
        if (!(norm > 0.0)) return kNegInf;
        loglik += std::log(norm);
        b.swap(next);
    }
    return loglik;
}

double action_loglik(const Pomdp& model, const ValueFunction& vf, const PolicyConfig& cfg,
                     const DemoTrace& trace) {
    check_trace(model, trace);
    Belief b(model.initial_belief().begin(), model.initial_belief().end());
    Belief next;
    double loglik = 0.0;
    for (const auto& step : trace.steps) {
        const auto q = action_values(vf, b).q;
        const double top = q[argmax(q)];
        double log_norm = 0.0;
        for (double v : q) log_norm += std::exp(cfg.beta * (v - top));
        loglik += cfg.beta * (q[step.action] - top) - std::log(log_norm);
        const double norm = update_belief_into(model, b, step.action, step.observation, next);
        if (!(norm > 0.0)) return kNegInf;
        b.swap(next);
    }
    return loglik;
}

PosteriorTerms posterior_terms(const ParametricTemplate& tpl, std::span<const double> theta,
                               const DemoTrace& trace, const PolicyConfig& cfg,
                               const SolverConfig& solver_cfg) {
    PosteriorTerms terms;
    terms.log_prior = log_prior(tpl, theta);
    if (terms.log_prior == kNegInf) {
        terms.obs_loglik = terms.action_loglik = kNegInf;
        return terms;
    }
    const Pomdp model = instantiate(tpl, theta);
    terms.obs_loglik = obs_loglik(model, trace);
    if (terms.obs_loglik == kNegInf) {
        terms.action_loglik = kNegInf;
        return terms;
    }
    const ValueFunction vf = solve(model, solver_cfg);
    terms.action_loglik = action_loglik(model, vf, cfg, trace);
    return terms;
}

double log_posterior(const ParametricTemplate& tpl, std::span<const double> theta, const DemoTrace& trace,
                     const PolicyConfig& cfg, const SolverConfig& solver_cfg) {
    return posterior_terms(tpl, theta, trace, cfg, solver_cfg).total();
}

Smoothing smoothed_marginals(const Pomdp& model, const DemoTrace& trace) {
    check_trace(model, trace);
    const std::size_t S = model.num_states();
    const std::size_t L = trace.size();
    Smoothing out;
    std::vector<Belief> filtered;
    out.loglik = forward(model, trace, filtered);
    if (out.loglik == kNegInf) throw ImpossibleTrace("trace has zero probability under the model");

    // Scaled backward messages: beta_i(s) proportional to P(z_{i+1..L} | s_i = s).
    out.marginals.assign(L + 1, Belief(S, 0.0));
    out.pairwise.assign(L, std::vector<double>(S * S, 0.0));
    Belief beta(S, 1.0);
    out.marginals[L] = filtered[L];
    for (std::size_t i = L; i-- > 0;) {
        const auto& step = trace.steps[i];
        // joint(s, s') = f_i(s) T(s,a,s') O(a,s',z) beta(s'), normalized.
        auto& joint = out.pairwise[i];
        double total = 0.0;
        for (Index s = 0; s < S; ++s) {
            if (filtered[i][s] == 0.0) continue;
            const auto row = model.transition_row(s, step.action);
            for (Index n = 0; n < S; ++n) {
                const double w = filtered[i][s] * row[n] * model.observation(step.action, n, step.observation) * beta[n];
                joint[s * S + n] = w;
                total += w;
            }
        }
        for (double& w : joint) w /= total;
        Belief next_beta(S, 0.0);
        double beta_total = 0.0;
        for (Index s = 0; s < S; ++s) {
            const auto row = model.transition_row(s, step.action);
            double acc = 0.0;
            for (Index n = 0; n < S; ++n) acc += row[n] * model.observation(step.action, n, step.observation) * beta[n];
            next_beta[s] = acc;
            beta_total += acc;
        }
        for (double& v : next_beta) v /= beta_total;
        beta.swap(next_beta);
        for (Index s = 0; s < S; ++s)
            for (Index n = 0; n < S; ++n) out.marginals[i][s] += joint[s * S + n];
    }
    return out;
}

StateSequence ffbs(const Pomdp& model, const DemoTrace& trace, Rng& rng) {
    check_trace(model, trace);
    const std::size_t S = model.num_states();
    const std::size_t L = trace.size();
    std::vector<Belief> filtered;
    if (forward(model, trace, filtered) == kNegInf) throw ImpossibleTrace("trace has zero probability under the model");

    StateSequence path;
    path.states.assign(L, 0);
    Index next = sample_index(filtered[L], rng);
    std::vector<double> weights(S);
    for (std::size_t i = L; i-- > 0;) {
        path.states[i] = next;
        // P(s_i = s | s_{i+1} = next, z_{1..L}) proportional to f_i(s) T(s, a_{i+1}, next).
        const Index a = trace.steps[i].action;
        for (Index s = 0; s < S; ++s) weights[s] = filtered[i][s] * model.transition(s, a, next);
        next = sample_index(weights, rng);
    }
    path.initial = next;
    return path;
}

StateSequence ffbs(const Pomdp& model, const DemoTrace& trace, std::uint64_t seed) {
    Rng rng(seed);
    return ffbs(model, trace, rng);
}

}  // namespace apl
