#include "apl/model_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "apl/errors.hpp"

namespace apl {

namespace {

constexpr double kIdentityTolerance = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string describe(const char* table, std::initializer_list<Index> idx) {
    std::ostringstream os;
    os << table << '(';
    bool first = true;
    for (Index i : idx) {
        if (!first) os << ',';
        os << i;
        first = false;
    }
    os << ')';
    return os.str();
}

}  // namespace

bool Prior::valid() const noexcept {
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return is_beta() ? (a > 0.0 && b > 0.0) : b > 0.0;
}

double Prior::mean() const noexcept { return is_beta() ? a / (a + b) : a; }

double Prior::mode() const noexcept {
    if (!is_beta()) return a;
    if (a > 1.0 && b > 1.0) return (a - 1.0) / (a + b - 2.0);
    return mean();
}

bool Prior::in_support(double x) const noexcept {
    if (!std::isfinite(x)) return false;
    return is_beta() ? (x > 0.0 && x < 1.0) : true;
}

double Prior::log_density(double x) const noexcept {
    if (!in_support(x)) return kNegInf;
    if (is_beta()) {
        const double log_beta_fn = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn;
    }
    const double z = (x - a) / b;
    return -0.5 * z * z - std::log(b * std::sqrt(2.0 * std::numbers::pi));
}

double Prior::sample(Rng& rng) const {
    return is_beta() ? sample_beta(a, b, rng) : sample_normal(a, b, rng);
}

std::pair<double, double> Prior::range() const noexcept {
    if (is_beta()) return {0.0, 1.0};
    return {a - 4.0 * b, a + 4.0 * b};
}

double ParamExpr::evaluate(std::span<const double> theta) const noexcept {
    double v = constant;
    for (const auto& t : terms) v += t.coefficient * theta[t.parameter];
    return v;
}

double ParamExpr::coefficient(Index k) const noexcept {
    double c = 0.0;
    for (const auto& t : terms)
        if (t.parameter == k) c += t.coefficient;
    return c;
}

bool ParamExpr::mentions(Index k) const noexcept {
    return std::any_of(terms.begin(), terms.end(), [k](const Term& t) { return t.parameter == k; });
}

ParametricTemplate::ParametricTemplate(std::vector<std::string> states, std::vector<std::string> actions,
                                       std::vector<std::string> observations, double discount,
                                       std::vector<Parameter> params)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      observations_(std::move(observations)),
      discount_(discount),
      params_(std::move(params)) {
    const std::size_t S = states_.size(), A = actions_.size(), Z = observations_.size();
    transition_.assign(S * A * S, ParamExpr::value(0.0));
    observation_.assign(A * S * Z, ParamExpr::value(0.0));
    initial_.assign(S, ParamExpr::value(0.0));
    reward_.assign(S * A, ParamExpr::value(0.0));
}

void ParametricTemplate::set_transition(Index s, Index a, Index next, ParamExpr e) {
    transition_.at((s * num_actions() + a) * num_states() + next) = std::move(e);
}

void ParametricTemplate::set_observation(Index a, Index next, Index z, ParamExpr e) {
    observation_.at((a * num_states() + next) * num_observations() + z) = std::move(e);
}

void ParametricTemplate::set_initial(Index s, ParamExpr e) { initial_.at(s) = std::move(e); }

void ParametricTemplate::set_reward(Index s, Index a, ParamExpr e) {
    reward_.at(s * num_actions() + a) = std::move(e);
}

Index ParametricTemplate::param_index(const std::string& name) const {
    for (Index k = 0; k < params_.size(); ++k)
        if (params_[k].name == name) return k;
    throw ConfigError("unknown parameter '" + name + "'");
}

ParamVector clamp_to_support(const ParametricTemplate& tpl, std::span<const double> theta) {
    if (theta.size() != tpl.num_params())
        throw OutOfSupport("expected " + std::to_string(tpl.num_params()) + " parameters, got " +
                           std::to_string(theta.size()));
    ParamVector out(theta.begin(), theta.end());
    for (Index k = 0; k < out.size(); ++k) {
        const auto& p = tpl.params()[k];
        if (!std::isfinite(out[k]) || (p.prior.is_beta() && (out[k] < 0.0 || out[k] > 1.0)))
            throw OutOfSupport("parameter " + p.name + " = " + std::to_string(out[k]) + " is outside its support");
        if (p.prior.is_beta()) out[k] = std::clamp(out[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
    }
    return out;
}

Pomdp instantiate(const ParametricTemplate& tpl, std::span<const double> theta) {
    const auto t = clamp_to_support(tpl, theta);
    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
    Pomdp m(S, A, Z, tpl.discount());
    for (Index s = 0; s < S; ++s) {
        m.set_initial(s, tpl.initial(s).evaluate(t));
        for (Index a = 0; a < A; ++a) {
            m.set_reward(s, a, tpl.reward(s, a).evaluate(t));
            for (Index n = 0; n < S; ++n) m.set_transition(s, a, n, tpl.transition(s, a, n).evaluate(t));
        }
    }
    for (Index a = 0; a < A; ++a)
        for (Index n = 0; n < S; ++n)
            for (Index z = 0; z < Z; ++z) m.set_observation(a, n, z, tpl.observation(a, n, z).evaluate(t));
    m.set_names(tpl.state_names(), tpl.action_names(), tpl.observation_names());
    return m;
}

ParamVector sample_prior(const ParametricTemplate& tpl, Rng& rng) {
    ParamVector theta;
    theta.reserve(tpl.num_params());
    for (const auto& p : tpl.params()) theta.push_back(p.prior.sample(rng));
    return theta;
}

ParamVector sample_prior(const ParametricTemplate& tpl, std::uint64_t seed) {
    Rng rng(seed);
    return sample_prior(tpl, rng);
}

double log_prior(const ParametricTemplate& tpl, std::span<const double> theta) {
    if (theta.size() != tpl.num_params()) return kNegInf;
    double lp = 0.0;
    for (Index k = 0; k < theta.size(); ++k) lp += tpl.params()[k].prior.log_density(theta[k]);
    return lp;
}

ParamVector prior_mean(const ParametricTemplate& tpl) {
    ParamVector out;
    for (const auto& p : tpl.params()) out.push_back(p.prior.mean());
    return out;
}

ParamVector prior_mode(const ParametricTemplate& tpl) {
    ParamVector out;
    for (const auto& p : tpl.params()) out.push_back(p.prior.mode());
    return out;
}

bool is_reward_only(const ParametricTemplate& tpl, Index k) {
    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
    for (Index s = 0; s < S; ++s) {
        if (tpl.initial(s).mentions(k)) return false;
        for (Index a = 0; a < A; ++a)
            for (Index n = 0; n < S; ++n)
                if (tpl.transition(s, a, n).mentions(k)) return false;
    }
    for (Index a = 0; a < A; ++a)
        for (Index n = 0; n < S; ++n)
            for (Index z = 0; z < Z; ++z)
                if (tpl.observation(a, n, z).mentions(k)) return false;
    return true;
}

std::vector<std::string> validate_template(const ParametricTemplate& tpl, std::uint64_t seed) {
    std::vector<std::string> out;
    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations(),
                      K = tpl.num_params();
    if (S == 0 || A == 0 || Z == 0) out.push_back("empty state, action or observation set");
    if (!(tpl.discount() >= 0.0 && tpl.discount() < 1.0)) out.push_back("discount outside [0, 1)");
    for (const auto& p : tpl.params())
        if (!p.prior.valid()) out.push_back("parameter " + p.name + " has invalid prior hyperparameters");

    auto check_indices = [&](const ParamExpr& e, const std::string& where) {
        for (const auto& t : e.terms)
            if (t.parameter >= K) {
                out.push_back(where + " references unknown parameter index " + std::to_string(t.parameter));
                return false;
            }
        return true;
    };

    auto check_probability = [&](const ParamExpr& e, const std::string& where) {
        if (!check_indices(e, where)) return;
        std::map<Index, double> coef;
        for (const auto& t : e.terms) coef[t.parameter] += t.coefficient;
        double lo = e.constant, hi = e.constant;
        for (const auto& [k, c] : coef) {
            const auto [pl, ph] = tpl.params()[k].prior.range();
            lo += std::min(c * pl, c * ph);
            hi += std::max(c * pl, c * ph);
        }
        if (lo < -kIdentityTolerance || hi > 1.0 + kIdentityTolerance)
            out.push_back(where + ": range exceeds [0,1]");
    };

    auto check_row = [&](const std::vector<const ParamExpr*>& row, const std::string& where) {
        double constant = 0.0;
        std::vector<double> coef(K, 0.0);
        for (const auto* e : row) {
            constant += e->constant;
            for (const auto& t : e->terms)
                if (t.parameter < K) coef[t.parameter] += t.coefficient;
        }
        bool ok = std::abs(constant - 1.0) <= kIdentityTolerance;
        for (double c : coef) ok = ok && std::abs(c) <= kIdentityTolerance;
        if (!ok) out.push_back(where + ": row sum ≠ 1");
    };

    std::vector<const ParamExpr*> row;
    for (Index s = 0; s < S; ++s) {
        for (Index a = 0; a < A; ++a) {
            row.clear();
            for (Index n = 0; n < S; ++n) {
                check_probability(tpl.transition(s, a, n), describe("T", {s, a, n}));
                row.push_back(&tpl.transition(s, a, n));
            }
            check_row(row, describe("T", {s, a}));
            check_indices(tpl.reward(s, a), describe("R", {s, a}));
        }
    }
    for (Index a = 0; a < A; ++a) {
        for (Index n = 0; n < S; ++n) {
            row.clear();
            for (Index z = 0; z < Z; ++z) {
                check_probability(tpl.observation(a, n, z), describe("O", {a, n, z}));
                row.push_back(&tpl.observation(a, n, z));
            }
            check_row(row, describe("O", {a, n}));
        }
    }
    row.clear();
    for (Index s = 0; s < S; ++s) {
        check_probability(tpl.initial(s), describe("b0", {s}));
        row.push_back(&tpl.initial(s));
    }
    if (S > 0) check_row(row, "b0");
    if (!out.empty()) return out;

    // Numeric spot checks at prior draws.
    Rng rng(seed);
    for (int i = 0; i < 100; ++i) {
        const auto theta = sample_prior(tpl, rng);
        const auto problems = instantiate(tpl, theta).violations();
        if (!problems.empty()) {
            out.push_back("prior sample " + std::to_string(i) + ": " + problems.front());
            break;
        }
    }
    return out;
}

ParametricTemplate tiger_template() {
    using namespace tiger;
    ParametricTemplate t({"tiger-left", "tiger-right"}, {"listen", "open-left", "open-right"},
                         {"hear-left", "hear-right"}, 0.9,
                         {{"p_i", Prior::beta(3, 3)},
                          {"p_l", Prior::beta(5, 3)},
                          {"p_r", Prior::beta(5, 3)},
                          {"r_t", Prior::normal(-50, 50)}});

    t.set_initial(kLeft, ParamExpr::param(kInitial));
    t.set_initial(kRight, ParamExpr::complement(kInitial));

    for (Index s : {kLeft, kRight}) {
        t.set_transition(s, kListen, s, ParamExpr::value(1.0));
        for (Index a : {kOpenLeft, kOpenRight}) {
            t.set_transition(s, a, kLeft, ParamExpr::param(kInitial));
            t.set_transition(s, a, kRight, ParamExpr::complement(kInitial));
        }
        t.set_reward(s, kListen, ParamExpr::value(-1.0));
    }
    t.set_reward(kLeft, kOpenLeft, ParamExpr::param(kTigerReward));
    t.set_reward(kRight, kOpenLeft, ParamExpr::value(10.0));
    t.set_reward(kRight, kOpenRight, ParamExpr::param(kTigerReward));
    t.set_reward(kLeft, kOpenRight, ParamExpr::value(10.0));

    t.set_observation(kListen, kLeft, kHearLeft, ParamExpr::param(kHearLeftAccuracy));
    t.set_observation(kListen, kLeft, kHearRight, ParamExpr::complement(kHearLeftAccuracy));
    t.set_observation(kListen, kRight, kHearRight, ParamExpr::param(kHearRightAccuracy));
    t.set_observation(kListen, kRight, kHearLeft, ParamExpr::complement(kHearRightAccuracy));
    for (Index a : {kOpenLeft, kOpenRight})
        for (Index s : {kLeft, kRight})
            for (Index z : {kHearLeft, kHearRight}) t.set_observation(a, s, z, ParamExpr::value(0.5));
    return t;
}

}  // namespace apl
