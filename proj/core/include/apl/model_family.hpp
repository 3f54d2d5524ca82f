#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apl/pomdp.hpp"
#include "apl/random.hpp"

namespace apl {

/// Parameter vector theta. Probability components are unitless, reward components in task-reward units.
using ParamVector = std::vector<double>;

/// Beta(a, b) over (0, 1) or Normal(mean, sd^2) over the real line.
struct Prior {
    enum class Kind { Beta, Normal };

    Kind kind = Kind::Beta;
    double a = 1.0;  ///< Beta alpha, or the normal mean.
    double b = 1.0;  ///< Beta beta, or the normal standard deviation.

    static Prior beta(double alpha, double beta) { return {Kind::Beta, alpha, beta}; }
    static Prior normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }

    bool is_beta() const noexcept { return kind == Kind::Beta; }
    bool valid() const noexcept;
    double mean() const noexcept;
    double mode() const noexcept;
    bool in_support(double x) const noexcept;
    /// -infinity outside the support.
    double log_density(double x) const noexcept;
    double sample(Rng& rng) const;
    /// Range used by the affine range check: [0, 1] for Beta, mean +- 4 sd for Normal.
    std::pair<double, double> range() const noexcept;

    friend bool operator==(const Prior&, const Prior&) = default;
};

struct Parameter {
    std::string name;
    Prior prior;
    friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Affine expression c0 + sum_k c_k theta_k.
struct ParamExpr {
    struct Term {
        double coefficient = 0.0;
        Index parameter = 0;
        friend bool operator==(const Term&, const Term&) = default;
    };

    double constant = 0.0;
    std::vector<Term> terms;

    static ParamExpr value(double c) { return {c, {}}; }
    static ParamExpr param(Index k) { return {0.0, {{1.0, k}}}; }
    /// 1 - theta_k
    static ParamExpr complement(Index k) { return {1.0, {{-1.0, k}}}; }

    double evaluate(std::span<const double> theta) const noexcept;
    bool is_constant() const noexcept { return terms.empty(); }
    /// Net coefficient of parameter k (terms may repeat a parameter).
    double coefficient(Index k) const noexcept;
    bool mentions(Index k) const noexcept;

    friend bool operator==(const ParamExpr&, const ParamExpr&) = default;
};

/**
 * A POMDP family P_theta whose T, O, b0 and R entries are affine in theta.
 * Table layouts follow Pomdp: T(s, a, s'), O(a, s', z), b0(s), R(s, a).
 */
class ParametricTemplate {
public:
    ParametricTemplate() = default;
    ParametricTemplate(std::vector<std::string> states, std::vector<std::string> actions,
                       std::vector<std::string> observations, double discount,
                       std::vector<Parameter> params);

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    std::size_t num_observations() const noexcept { return observations_.size(); }
    std::size_t num_params() const noexcept { return params_.size(); }
    double discount() const noexcept { return discount_; }

    const std::vector<std::string>& state_names() const noexcept { return states_; }
    const std::vector<std::string>& action_names() const noexcept { return actions_; }
    const std::vector<std::string>& observation_names() const noexcept { return observations_; }
    const std::vector<Parameter>& params() const noexcept { return params_; }

    const ParamExpr& transition(Index s, Index a, Index next) const {
        return transition_.at((s * num_actions() + a) * num_states() + next);
    }
    const ParamExpr& observation(Index a, Index next, Index z) const {
        return observation_.at((a * num_states() + next) * num_observations() + z);
    }
    const ParamExpr& initial(Index s) const { return initial_.at(s); }
    const ParamExpr& reward(Index s, Index a) const { return reward_.at(s * num_actions() + a); }

    void set_transition(Index s, Index a, Index next, ParamExpr e);
    void set_observation(Index a, Index next, Index z, ParamExpr e);
    void set_initial(Index s, ParamExpr e);
    void set_reward(Index s, Index a, ParamExpr e);

    /// Index of the named parameter; throws ConfigError when unknown.
    Index param_index(const std::string& name) const;

    friend bool operator==(const ParametricTemplate&, const ParametricTemplate&) = default;

private:
    std::vector<std::string> states_;
    std::vector<std::string> actions_;
    std::vector<std::string> observations_;
    double discount_ = 0.0;
    std::vector<Parameter> params_;
    std::vector<ParamExpr> transition_;
    std::vector<ParamExpr> observation_;
    std::vector<ParamExpr> initial_;
    std::vector<ParamExpr> reward_;
};

/// Probability components are clamped into [kProbabilityClamp, 1 - kProbabilityClamp] before instantiation.
inline constexpr double kProbabilityClamp = 1e-6;

/// Throws OutOfSupport for a wrong-sized or out-of-support theta.
ParamVector clamp_to_support(const ParametricTemplate& tpl, std::span<const double> theta);

/// Concrete POMDP at theta (after clamping); throws OutOfSupport.
Pomdp instantiate(const ParametricTemplate& tpl, std::span<const double> theta);

ParamVector sample_prior(const ParametricTemplate& tpl, Rng& rng);
ParamVector sample_prior(const ParametricTemplate& tpl, std::uint64_t seed);

/// Sum of component log-densities; -infinity outside the support.
double log_prior(const ParametricTemplate& tpl, std::span<const double> theta);

ParamVector prior_mean(const ParametricTemplate& tpl);
ParamVector prior_mode(const ParametricTemplate& tpl);

/// Symbolic and sampled checks of the template invariants; returns violations (empty = ok).
std::vector<std::string> validate_template(const ParametricTemplate& tpl, std::uint64_t seed = 0);

/// True when a parameter appears only in reward entries.
bool is_reward_only(const ParametricTemplate& tpl, Index k);

/**
 * Bayesian Tiger: states {tiger-left, tiger-right}, actions {listen, open-left,
 * open-right}, observations {hear-left, hear-right}, parameters
 * p_i ~ Beta(3,3), p_l ~ Beta(5,3), p_r ~ Beta(5,3), r_t ~ N(-50, 50^2), gamma 0.9.
 * Opening a door re-draws the tiger (left with p_i) and yields an uninformative observation.
 */
ParametricTemplate tiger_template();

namespace tiger {
inline constexpr Index kLeft = 0;
inline constexpr Index kRight = 1;
inline constexpr Index kListen = 0;
inline constexpr Index kOpenLeft = 1;
inline constexpr Index kOpenRight = 2;
inline constexpr Index kHearLeft = 0;
inline constexpr Index kHearRight = 1;
inline constexpr Index kInitial = 0;
inline constexpr Index kHearLeftAccuracy = 1;
inline constexpr Index kHearRightAccuracy = 2;
inline constexpr Index kTigerReward = 3;
/// (p_i, p_l, p_r, r_t) of the true environment.
inline const ParamVector kTrueTheta{0.6, 0.85, 0.85, -100.0};
}  // namespace tiger

}  // namespace apl
