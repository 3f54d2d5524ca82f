#include <doctest.h>

#include <cmath>
#include <numbers>

#include "apl/errors.hpp"
#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"
#include "oracles.hpp"

using namespace apl;

namespace {

std::string joined(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += s + "\n";
    return out;
}

ParametricTemplate coin_template() {
    ParametricTemplate t({"a", "b"}, {"go"}, {"x", "y"}, 0.9, {{"p", Prior::beta(2, 2)}});
    t.set_transition(0, 0, 0, ParamExpr::value(1.0));
    t.set_transition(1, 0, 1, ParamExpr::value(1.0));
    t.set_observation(0, 0, 0, ParamExpr::param(0));
    t.set_observation(0, 0, 1, ParamExpr::complement(0));
    t.set_observation(0, 1, 0, ParamExpr::value(0.5));
    t.set_observation(0, 1, 1, ParamExpr::value(0.5));
    t.set_initial(0, ParamExpr::value(0.5));
    t.set_initial(1, ParamExpr::value(0.5));
    return t;
}

}  // namespace

TEST_CASE("tiger template") {
    const auto tpl = tiger_template();
    CHECK(validate_template(tpl).empty());
    CHECK(tpl.num_states() == 2);
    CHECK(tpl.num_actions() == 3);
    CHECK(tpl.num_observations() == 2);
    CHECK(tpl.discount() == 0.9);
    const auto mean = prior_mean(tpl);
    CHECK(mean == ParamVector{0.5, 0.625, 0.625, -50.0});

    const Pomdp m = instantiate(tpl, tiger::kTrueTheta);
    CHECK(m.observation(tiger::kListen, tiger::kLeft, tiger::kHearLeft) == 0.85);
    CHECK(m.observation(tiger::kListen, tiger::kRight, tiger::kHearRight) == 0.85);
    CHECK(m.initial(tiger::kLeft) == 0.6);
    CHECK(m.initial(tiger::kRight) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(m.reward(tiger::kLeft, tiger::kOpenLeft) == -100.0);
    CHECK(m.reward(tiger::kRight, tiger::kOpenRight) == -100.0);
    CHECK(m.reward(tiger::kRight, tiger::kOpenLeft) == 10.0);
    CHECK(m.reward(tiger::kLeft, tiger::kListen) == -1.0);
    CHECK(m.transition(tiger::kLeft, tiger::kListen, tiger::kLeft) == 1.0);
    CHECK(m.transition(tiger::kLeft, tiger::kOpenRight, tiger::kLeft) == 0.6);
    CHECK(m.observation(tiger::kOpenLeft, tiger::kLeft, tiger::kHearLeft) == 0.5);
}

TEST_CASE("symmetric observations never move the belief under listening") {
    const Pomdp m = instantiate(tiger_template(), ParamVector{0.5, 0.5, 0.5, -50.0});
    Belief b{0.5, 0.5};
    for (Index z : {0u, 1u, 1u, 0u, 0u}) {
        b = belief_update(m, b, tiger::kListen, z).belief;
        CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("constant templates instantiate identically for every theta") {
    ParametricTemplate t({"a"}, {"go"}, {"x"}, 0.5, {{"p", Prior::beta(1, 1)}});
    t.set_transition(0, 0, 0, ParamExpr::value(1.0));
    t.set_observation(0, 0, 0, ParamExpr::value(1.0));
    t.set_initial(0, ParamExpr::value(1.0));
    t.set_reward(0, 0, ParamExpr::value(3.0));
    CHECK(instantiate(t, ParamVector{0.1}) == instantiate(t, ParamVector{0.9}));
}

TEST_CASE("instantiate support checks") {
    const auto tpl = tiger_template();
    CHECK_THROWS_AS(instantiate(tpl, ParamVector{0.6, 1.2, 0.85, -100.0}), OutOfSupport);
    CHECK_THROWS_AS(instantiate(tpl, ParamVector{0.6, 0.85, 0.85, NAN}), OutOfSupport);
    CHECK_THROWS_AS(instantiate(tpl, ParamVector{0.6, 0.85}), OutOfSupport);
    const Pomdp edge = instantiate(tpl, ParamVector{0.0, 1.0, 0.85, -100.0});
    CHECK(edge.initial(0) == kProbabilityClamp);
    CHECK(edge.observation(tiger::kListen, tiger::kLeft, tiger::kHearLeft) == 1.0 - kProbabilityClamp);
    CHECK(edge.violations().empty());
}

TEST_CASE("prior densities and draws") {
    SUBCASE("normal log density at the mean") {
        const Prior p = Prior::normal(-50.0, 50.0);
        CHECK(p.log_density(-50.0) == doctest::Approx(-std::log(50.0 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-14));
    }
    SUBCASE("beta sample means") {
        const auto tpl = tiger_template();
        Rng rng(99);
        double s0 = 0.0, s1 = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            auto th = sample_prior(tpl, rng);
            s0 += th[0];
            s1 += th[1];
        }
        CHECK(std::abs(s0 / n - 0.5) < 0.005);
        CHECK(std::abs(s1 / n - 0.625) < 0.005);
    }
    SUBCASE("log prior is minus infinity outside the support") {
        CHECK(log_prior(tiger_template(), ParamVector{1.5, 0.5, 0.5, 0.0}) == -INFINITY);
    }
    SUBCASE("prior mode") {
        CHECK(prior_mode(tiger_template()) == ParamVector{0.5, 4.0 / 6.0, 4.0 / 6.0, -50.0});
    }
}

TEST_CASE("template validation reports defects") {
    SUBCASE("row sum") {
        auto t = coin_template();
        t.set_observation(0, 0, 1, ParamExpr{1.1, {{-1.0, 0}}});
        CHECK(joined(validate_template(t)).find("row sum") != std::string::npos);
    }
    SUBCASE("range") {
        auto t = coin_template();
        t.set_observation(0, 0, 0, ParamExpr{0.0, {{2.0, 0}}});
        t.set_observation(0, 0, 1, ParamExpr{1.0, {{-2.0, 0}}});
        CHECK(joined(validate_template(t)).find("range exceeds [0,1]") != std::string::npos);
    }
    SUBCASE("valid coin") { CHECK(validate_template(coin_template()).empty()); }
}

TEST_CASE("parameter roles") {
    const auto tpl = tiger_template();
    CHECK_FALSE(is_reward_only(tpl, tiger::kInitial));
    CHECK_FALSE(is_reward_only(tpl, tiger::kHearLeftAccuracy));
    CHECK(is_reward_only(tpl, tiger::kTigerReward));
}

TEST_SUITE("invariants") {
    TEST_CASE("instantiated rows sum to one for prior draws") {
        const auto tpl = tiger_template();
        Rng rng(2024);
        for (int i = 0; i < 1000; ++i) {
            const Pomdp m = instantiate(tpl, sample_prior(tpl, rng));
            CHECK(m.violations().empty());
            for (Index s = 0; s < m.num_states(); ++s)
                for (Index a = 0; a < m.num_actions(); ++a) {
                    double total = 0.0;
                    for (Index n = 0; n < m.num_states(); ++n) total += m.transition(s, a, n);
                    CHECK(std::abs(total - 1.0) <= 1e-9);
                }
            for (Index a = 0; a < m.num_actions(); ++a)
                for (Index n = 0; n < m.num_states(); ++n) {
                    double total = 0.0;
                    for (Index z = 0; z < m.num_observations(); ++z) total += m.observation(a, n, z);
                    CHECK(std::abs(total - 1.0) <= 1e-9);
                }
            CHECK(std::abs(m.initial(0) + m.initial(1) - 1.0) <= 1e-9);
        }
    }

    TEST_CASE("tiger rows sum to one identically in theta") {
        const auto tpl = tiger_template();
        const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
        auto check_row = [&](const std::vector<const ParamExpr*>& row) {
            double c = 0.0;
            for (auto* e : row) c += e->constant;
            CHECK(std::abs(c - 1.0) <= 1e-12);
            for (Index k = 0; k < tpl.num_params(); ++k) {
                double ck = 0.0;
                for (auto* e : row) ck += e->coefficient(k);
                CHECK(std::abs(ck) <= 1e-12);
            }
        };
        for (Index s = 0; s < S; ++s)
            for (Index a = 0; a < A; ++a) {
                std::vector<const ParamExpr*> row;
                for (Index n = 0; n < S; ++n) row.push_back(&tpl.transition(s, a, n));
                check_row(row);
            }
        for (Index a = 0; a < A; ++a)
            for (Index n = 0; n < S; ++n) {
                std::vector<const ParamExpr*> row;
                for (Index z = 0; z < Z; ++z) row.push_back(&tpl.observation(a, n, z));
                check_row(row);
            }
        check_row({&tpl.initial(0), &tpl.initial(1)});
    }

    TEST_CASE("prior densities integrate to one and match their samplers") {
        for (const Prior& p : {Prior::beta(3, 3), Prior::beta(5, 3), Prior::beta(0.7, 2.5), Prior::normal(-50, 50)}) {
            const double lo = p.is_beta() ? 0.0 : p.a - 12.0 * p.b;
            const double hi = p.is_beta() ? 1.0 : p.a + 12.0 * p.b;
            auto density = [&](double x) {
                const double ld = p.log_density(x);
                return std::isfinite(ld) ? std::exp(ld) : 0.0;
            };
            oracle::GridCdf cdf(density, lo, hi, 200000);
            // The Beta(0.7, .) density is unbounded at 0, so its quadrature converges slowly.
            CHECK(std::abs(cdf.mass() - 1.0) < (p.is_beta() && p.a < 1.0 ? 2e-2 : 1e-6));
            Rng rng(17);
            std::vector<double> xs(10000);
            for (auto& x : xs) x = p.sample(rng);
            CHECK(oracle::ks_statistic(xs, cdf) < 0.02);
        }
    }
}
