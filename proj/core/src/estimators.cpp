#include "apl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "apl/errors.hpp"

namespace apl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class EntryRole { None, Success, Failure };

EntryRole entry_role(const ParamExpr& e, Index k) {
    if (!e.mentions(k)) return EntryRole::None;
    if (e.terms.size() == 1) {
        if (e.constant == 0.0 && e.terms[0].coefficient == 1.0) return EntryRole::Success;
        if (e.constant == 1.0 && e.terms[0].coefficient == -1.0) return EntryRole::Failure;
    }
    throw UnsupportedParameterRole("parameter index " + std::to_string(k) +
                                   " appears in a probability entry that is not theta or 1 - theta");
}

void tally(TiedCounts& c, EntryRole role, double weight) {
    if (role == EntryRole::Success) c.successes += weight;
    if (role == EntryRole::Failure) c.failures += weight;
}

/// Expected tied counts under the smoothed posterior (the EM E-step).
TiedCounts expected_tied_counts(const ParametricTemplate& tpl, Index k, const Smoothing& sm,
                                const DemoTrace& trace) {
    const std::size_t S = tpl.num_states();
    TiedCounts c;
    for (Index s = 0; s < S; ++s) tally(c, entry_role(tpl.initial(s), k), sm.marginals[0][s]);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& step = trace.steps[i];
        for (Index s = 0; s < S; ++s)
            for (Index n = 0; n < S; ++n) {
                const double w = sm.pairwise[i][s * S + n];
                if (w != 0.0) tally(c, entry_role(tpl.transition(s, step.action, n), k), w);
            }
        for (Index n = 0; n < S; ++n)
            tally(c, entry_role(tpl.observation(step.action, n, step.observation), k), sm.marginals[i + 1][n]);
    }
    return c;
}

/// Draws theta from the prior until the trace has positive observation likelihood.
ParamVector feasible_prior_draw(const ParametricTemplate& tpl, const DemoTrace& trace, Rng& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto theta = sample_prior(tpl, rng);
        if (obs_loglik(instantiate(tpl, theta), trace) > kNegInf) return theta;
    }
    throw ImpossibleTrace("no prior draw gives the trace positive probability");
}

struct SweepCallbacks {
    bool metropolis = false;
    const PolicyConfig* cfg = nullptr;
    const SolverConfig* solver_cfg = nullptr;
};

SampleSet run_chain(const ParametricTemplate& tpl, const DemoTrace& trace, const McmcConfig& mcmc_cfg,
                    const SweepCallbacks& cb) {
    mcmc_cfg.validate();
    const std::size_t K = tpl.num_params();
    for (Index k = 0; k < K; ++k) classify_parameter(tpl, k);

    Rng rng(mcmc_cfg.seed);
    SampleSet out;
    out.samples.reserve(mcmc_cfg.retained());

    ParamVector theta = feasible_prior_draw(tpl, trace, rng);
    double log_p = kNegInf;  // "infinitesimal positive value": the first proposal is always accepted
    ValueFunction vf;

    std::vector<Index> order(K);
    for (std::size_t sweep = 1; sweep <= mcmc_cfg.total_sweeps; ++sweep) {
        const Pomdp current = instantiate(tpl, theta);
        const StateSequence path = ffbs(current, trace, rng);
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (Index k : order) {
            ParamVector proposal = theta;
            proposal[k] = conditional_draw(tpl, theta, k, path, trace, rng);
            ++out.proposals;
            if (!cb.metropolis) {
                theta = std::move(proposal);
                ++out.accepted;
                continue;
            }
            const Pomdp model = instantiate(tpl, proposal);
            ValueFunction proposal_vf = solve(model, *cb.solver_cfg);
            const double log_p_new = action_loglik(model, proposal_vf, *cb.cfg, trace);
            if (metropolis_accept(log_p, log_p_new, uniform01(rng))) {
                theta = std::move(proposal);
                log_p = log_p_new;
                vf = std::move(proposal_vf);
                ++out.accepted;
            }
        }
        if (sweep > mcmc_cfg.burn_in && (sweep - mcmc_cfg.burn_in) % mcmc_cfg.thin == 0) {
            out.samples.push_back(theta);
            if (mcmc_cfg.keep_value_functions && cb.metropolis) out.value_functions.push_back(vf);
        }
    }
    return out;
}

}  // namespace

std::size_t McmcConfig::retained() const noexcept {
    if (thin == 0 || total_sweeps <= burn_in) return 0;
    return (total_sweeps - burn_in) / thin;
}

void McmcConfig::validate() const {
    if (thin == 0) throw ConfigError("thin must be at least 1");
    if (burn_in >= total_sweeps) throw ConfigError("burn_in must be smaller than total_sweeps");
    if (retained() == 0) throw ConfigError("MCMC schedule retains no samples");
}

double SampleSet::acceptance_rate() const noexcept {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
}

ParamVector SampleSet::mean() const {
    if (samples.empty()) return {};
    ParamVector m(samples.front().size(), 0.0);
    for (const auto& s : samples)
        for (std::size_t k = 0; k < m.size(); ++k) m[k] += s[k];
    for (double& v : m) v /= static_cast<double>(samples.size());
    return m;
}

ParamVector SampleSet::sd() const {
    if (samples.empty()) return {};
    const auto m = mean();
    ParamVector var(m.size(), 0.0);
    if (samples.size() < 2) return var;
    for (const auto& s : samples)
        for (std::size_t k = 0; k < m.size(); ++k) var[k] += (s[k] - m[k]) * (s[k] - m[k]);
    for (double& v : var) v = std::sqrt(v / static_cast<double>(samples.size() - 1));
    return var;
}

ParameterRole classify_parameter(const ParametricTemplate& tpl, Index k) {
    if (k >= tpl.num_params()) throw UnsupportedParameterRole("no parameter with index " + std::to_string(k));
    if (is_reward_only(tpl, k)) return ParameterRole::RewardOnly;
    const auto& p = tpl.params()[k];
    if (!p.prior.is_beta())
        throw UnsupportedParameterRole("parameter " + p.name + " enters probabilities but has a normal prior");
    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
    for (Index s = 0; s < S; ++s) {
        entry_role(tpl.initial(s), k);
        for (Index a = 0; a < A; ++a)
            for (Index n = 0; n < S; ++n) entry_role(tpl.transition(s, a, n), k);
    }
    for (Index a = 0; a < A; ++a)
        for (Index n = 0; n < S; ++n)
            for (Index z = 0; z < Z; ++z) entry_role(tpl.observation(a, n, z), k);
    return ParameterRole::BernoulliTied;
}

TiedCounts count_tied_outcomes(const ParametricTemplate& tpl, Index k, const StateSequence& path,
                               const DemoTrace& trace) {
    if (path.states.size() != trace.size()) throw ConfigError("state path and trace lengths differ");
    TiedCounts c;
    tally(c, entry_role(tpl.initial(path.initial), k), 1.0);
    Index prev = path.initial;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& step = trace.steps[i];
        const Index s = path.states[i];
        tally(c, entry_role(tpl.transition(prev, step.action, s), k), 1.0);
        tally(c, entry_role(tpl.observation(step.action, s, step.observation), k), 1.0);
        prev = s;
    }
    return c;
}

double conditional_draw(const ParametricTemplate& tpl, std::span<const double> theta, Index k,
                        const StateSequence& path, const DemoTrace& trace, Rng& rng) {
    (void)theta;  // the conditional of theta_k depends on the rest of theta only through the path
    const auto& prior = tpl.params().at(k).prior;
    if (classify_parameter(tpl, k) == ParameterRole::RewardOnly) return prior.sample(rng);
    const auto c = count_tied_outcomes(tpl, k, path, trace);
    return sample_beta(prior.a + c.successes, prior.b + c.failures, rng);
}

bool metropolis_accept(double log_p_current, double log_p_proposed, double u) noexcept {
    if (log_p_current == kNegInf) return true;
    if (log_p_proposed >= log_p_current) return u < 1.0;
    return u < std::exp(log_p_proposed - log_p_current);
}

SampleSet mcmc_posterior(const ParametricTemplate& tpl, const DemoTrace& trace, const PolicyConfig& cfg,
                         const McmcConfig& mcmc_cfg, const SolverConfig& solver_cfg) {
    return run_chain(tpl, trace, mcmc_cfg, {true, &cfg, &solver_cfg});
}

SampleSet iohmm_gibbs(const ParametricTemplate& tpl, const DemoTrace& trace, const McmcConfig& mcmc_cfg) {
    return run_chain(tpl, trace, mcmc_cfg, {false, nullptr, nullptr});
}

double observation_log_posterior(const ParametricTemplate& tpl, std::span<const double> theta,
                                 const DemoTrace& trace) {
    double lp = 0.0;
    for (Index k = 0; k < tpl.num_params(); ++k)
        if (!is_reward_only(tpl, k)) lp += tpl.params()[k].prior.log_density(theta[k]);
    if (lp == kNegInf) return kNegInf;
    return lp + obs_loglik(instantiate(tpl, theta), trace);
}

EmResult iohmm_em(const ParametricTemplate& tpl, const DemoTrace& trace, const EmConfig& em_cfg) {
    const std::size_t K = tpl.num_params();
    std::vector<ParameterRole> roles(K);
    for (Index k = 0; k < K; ++k) roles[k] = classify_parameter(tpl, k);

    EmResult out;
    out.estimate = prior_mean(tpl);
    double current = observation_log_posterior(tpl, out.estimate, trace);
    if (current == kNegInf) throw ImpossibleTrace("trace has zero probability at the prior mean");
    out.log_posterior_trace.push_back(current);

    for (std::size_t iter = 0; iter < em_cfg.max_iterations; ++iter) {
        const auto sm = smoothed_marginals(instantiate(tpl, out.estimate), trace);
        ParamVector next = out.estimate;
        for (Index k = 0; k < K; ++k) {
            if (roles[k] != ParameterRole::BernoulliTied) continue;
            const auto c = expected_tied_counts(tpl, k, sm, trace);
            const auto& prior = tpl.params()[k].prior;
            const double num = c.successes + prior.a - 1.0;
            const double den = c.successes + c.failures + prior.a + prior.b - 2.0;
            next[k] = den > 0.0 ? num / den : prior.mean();
            next[k] = std::clamp(next[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
        }
        const double value = observation_log_posterior(tpl, next, trace);
        out.estimate = std::move(next);
        out.log_posterior_trace.push_back(value);
        out.iterations = iter + 1;
        const double gain = value - current;
        current = value;
        if (gain < em_cfg.tolerance) break;
    }
    return out;
}

MapResult map_estimate(const ParametricTemplate& tpl, const DemoTrace& trace, const PolicyConfig& cfg,
                       const MapConfig& map_cfg, const SolverConfig& solver_cfg) {
    const std::size_t K = tpl.num_params();
    if (map_cfg.max_evaluations == 0) throw ConfigError("max_evaluations must be at least 1");

    std::vector<double> lo(K), hi(K);
    for (Index k = 0; k < K; ++k) {
        const auto& prior = tpl.params()[k].prior;
        if (prior.is_beta()) {
            lo[k] = map_cfg.probability_margin;
            hi[k] = 1.0 - map_cfg.probability_margin;
        } else {
            lo[k] = prior.a - map_cfg.normal_sigmas * prior.b;
            hi[k] = prior.a + map_cfg.normal_sigmas * prior.b;
        }
    }

    MapResult out;
    if (trace.empty()) {
        out.estimate = prior_mode(tpl);
        for (Index k = 0; k < K; ++k) out.estimate[k] = std::clamp(out.estimate[k], lo[k], hi[k]);
        out.log_posterior = out.start_log_posterior = log_prior(tpl, out.estimate);
        return out;
    }

    const ParamVector start = map_cfg.start.value_or(prior_mean(tpl));
    if (start.size() != K || log_prior(tpl, start) == kNegInf)
        throw NoFeasibleStart("MAP start point is outside the prior support");

    // Nelder-Mead in the unit box u = (theta - lo) / (hi - lo).
    using Point = std::vector<double>;
    auto to_theta = [&](const Point& u) {
        ParamVector theta(K);
        for (Index k = 0; k < K; ++k) theta[k] = lo[k] + u[k] * (hi[k] - lo[k]);
        return theta;
    };
    auto clamp_unit = [](Point u) {
        for (double& x : u) x = std::clamp(x, 0.0, 1.0);
        return u;
    };

    double best_value = kNegInf;
    ParamVector best_theta = start;
    auto objective = [&](const ParamVector& theta) {
        ++out.evaluations;
        const double lp = log_posterior(tpl, theta, trace, cfg, solver_cfg);
        if (lp > best_value) {
            best_value = lp;
            best_theta = theta;
        }
        return lp == kNegInf ? kInf : -lp;
    };

    out.start_log_posterior = log_posterior(tpl, start, trace, cfg, solver_cfg);
    ++out.evaluations;
    best_value = out.start_log_posterior;
    best_theta = start;
    auto budget_left = [&] { return out.evaluations < map_cfg.max_evaluations; };

    Point u0(K);
    for (Index k = 0; k < K; ++k) u0[k] = std::clamp((start[k] - lo[k]) / (hi[k] - lo[k]), 0.0, 1.0);
    std::vector<Point> simplex{u0};
    std::vector<double> f{out.start_log_posterior == kNegInf ? kInf : -out.start_log_posterior};
    for (Index k = 0; k < K && budget_left(); ++k) {
        Point u = u0;
        u[k] += u[k] + 0.1 <= 1.0 ? 0.1 : -0.1;
        simplex.push_back(u);
        f.push_back(objective(to_theta(u)));
    }

    while (simplex.size() == K + 1 && budget_left()) {
        std::vector<std::size_t> idx(simplex.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        std::vector<Point> sorted_simplex;
        std::vector<double> sorted_f;
        for (auto i : idx) {
            sorted_simplex.push_back(simplex[i]);
            sorted_f.push_back(f[i]);
        }
        simplex = std::move(sorted_simplex);
        f = std::move(sorted_f);

        double spread = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            for (Index k = 0; k < K; ++k) spread = std::max(spread, std::abs(simplex[i][k] - simplex[0][k]));
        if (spread < map_cfg.step_tolerance) break;

        Point centroid(K, 0.0);
        for (std::size_t i = 0; i < K; ++i)
            for (Index k = 0; k < K; ++k) centroid[k] += simplex[i][k] / static_cast<double>(K);
        auto along = [&](const Point& from, double t) {
            Point p(K);
            for (Index k = 0; k < K; ++k) p[k] = centroid[k] + t * (from[k] - centroid[k]);
            return clamp_unit(p);
        };

        const Point& worst = simplex[K];
        const Point reflected = along(worst, -1.0);
        const double fr = objective(to_theta(reflected));
        if (fr < f[0]) {
            if (!budget_left()) {
                simplex[K] = reflected;
                f[K] = fr;
                break;
            }
            const Point expanded = along(worst, -2.0);
            const double fe = objective(to_theta(expanded));
            if (fe < fr) {
                simplex[K] = expanded;
                f[K] = fe;
            } else {
                simplex[K] = reflected;
                f[K] = fr;
            }
            continue;
        }
        if (fr < f[K - 1]) {
            simplex[K] = reflected;
            f[K] = fr;
            continue;
        }
        if (!budget_left()) break;
        const bool outside = fr < f[K];
        const Point contracted = outside ? along(worst, -0.5) : along(worst, 0.5);
        const double fc = objective(to_theta(contracted));
        if (fc < std::min(fr, f[K])) {
            simplex[K] = contracted;
            f[K] = fc;
            continue;
        }
        for (std::size_t i = 1; i < simplex.size() && budget_left(); ++i) {
            for (Index k = 0; k < K; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
            f[i] = objective(to_theta(simplex[i]));
        }
    }

    out.estimate = best_theta;
    out.log_posterior = best_value;
    return out;
}

}  // namespace apl
