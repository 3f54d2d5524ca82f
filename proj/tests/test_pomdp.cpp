#include <doctest.h>

#include <cmath>
#include <numeric>

#include "apl/errors.hpp"
#include "apl/likelihood.hpp"
#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"
#include "oracles.hpp"

using namespace apl;

namespace {

Pomdp tiger_at(const ParamVector& theta) { return instantiate(tiger_template(), theta); }

ValueFunction make_vf(std::size_t actions, std::size_t states,
                      std::initializer_list<std::pair<Index, std::vector<double>>> vectors) {
    ValueFunction vf(actions, states);
    for (const auto& [a, v] : vectors) vf.add(a, v);
    return vf;
}

}  // namespace

TEST_CASE("pomdp validation reports bad rows") {
    Pomdp m(2, 1, 2, 0.9);
    m.set_transition(0, 0, 0, 1.0);
    m.set_transition(1, 0, 1, 1.0);
    m.set_observation(0, 0, 0, 1.0);
    m.set_observation(0, 1, 1, 1.0);
    m.set_initial(0, 1.0);
    CHECK(m.violations().empty());
    m.set_transition(1, 0, 0, 0.5);
    CHECK_FALSE(m.violations().empty());
    CHECK_THROWS_AS(m.validate(), InvalidModel);
}

TEST_CASE("belief update") {
    SUBCASE("identity transition and uniform observations leave the belief unchanged") {
        Pomdp m(3, 2, 2, 0.9);
        for (Index s = 0; s < 3; ++s)
            for (Index a = 0; a < 2; ++a) {
                m.set_transition(s, a, s, 1.0);
                m.set_observation(a, s, 0, 0.5);
                m.set_observation(a, s, 1, 0.5);
            }
        m.set_initial(0, 1.0);
        const Belief b{0.2, 0.3, 0.5};
        for (Index a = 0; a < 2; ++a)
            for (Index z = 0; z < 2; ++z) {
                auto u = belief_update(m, b, a, z);
                for (Index s = 0; s < 3; ++s) CHECK(u.belief[s] == doctest::Approx(b[s]).epsilon(1e-15));
            }
    }
    const Pomdp tiger = tiger_at(tiger::kTrueTheta);
    SUBCASE("tiger listen hear-left from uniform") {
        auto u = belief_update(tiger, Belief{0.5, 0.5}, tiger::kListen, tiger::kHearLeft);
        CHECK(u.belief[0] == doctest::Approx(0.85).epsilon(1e-12));
        CHECK(u.belief[1] == doctest::Approx(0.15).epsilon(1e-12));
        CHECK(u.normalizer == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("tiger listen twice") {
        auto u = belief_update(tiger, Belief{0.85, 0.15}, tiger::kListen, tiger::kHearLeft);
        const double expect = 0.85 * 0.85 * 0.5 / (0.85 * 0.85 * 0.5 + 0.15 * 0.15 * 0.5);
        CHECK(u.belief[0] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(std::abs(u.belief[0] - 0.969798) < 1e-6);
    }
    SUBCASE("opening re-draws the tiger from p_i") {
        for (Index a : {tiger::kOpenLeft, tiger::kOpenRight})
            for (Index z : {tiger::kHearLeft, tiger::kHearRight})
                for (double p : {0.0, 0.3, 1.0}) {
                    auto u = belief_update(tiger, Belief{p, 1.0 - p}, a, z);
                    CHECK(u.belief[0] == doctest::Approx(0.6).epsilon(1e-12));
                    CHECK(u.belief[1] == doctest::Approx(0.4).epsilon(1e-12));
                }
    }
    SUBCASE("impossible observation raises") {
        Pomdp m(2, 1, 2, 0.9);
        m.set_transition(0, 0, 0, 1.0);
        m.set_transition(1, 0, 1, 1.0);
        m.set_observation(0, 0, 0, 1.0);
        m.set_observation(0, 1, 1, 1.0);
        m.set_initial(0, 1.0);
        CHECK_THROWS_AS(belief_update(m, Belief{1.0, 0.0}, 0, 1), ZeroProbabilityObservation);
    }
}

TEST_CASE("action values") {
    const Belief b{0.3, 0.7};
    SUBCASE("zero vectors give zero Q") {
        auto vf = make_vf(2, 2, {{0, {0.0, 0.0}}, {1, {0.0, 0.0}}});
        auto av = action_values(vf, b);
        CHECK(av.q[0] == 0.0);
        CHECK(av.q[1] == 0.0);
    }
    SUBCASE("max over the set") {
        auto vf = make_vf(1, 2, {{0, {1.0, 0.0}}, {0, {0.0, 1.0}}});
        auto av = action_values(vf, b);
        CHECK(av.q[0] == doctest::Approx(0.7));
        CHECK(av.value == doctest::Approx(0.7));
    }
    SUBCASE("identical sets give identical Q") {
        auto vf = make_vf(2, 2, {{0, {1.0, -2.0}}, {0, {0.5, 0.5}}, {1, {1.0, -2.0}}, {1, {0.5, 0.5}}});
        for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) {
            auto av = action_values(vf, Belief{p, 1.0 - p});
            CHECK(av.q[0] == av.q[1]);
        }
    }
}

TEST_CASE("softmax policy") {
    SUBCASE("beta 0 is exactly uniform") {
        auto p = softmax(std::vector<double>{5.0, -3.0, 100.0}, 0.0);
        for (double x : p) CHECK(x == 1.0 / 3.0);
    }
    SUBCASE("equal Q is uniform for any beta") {
        for (double beta : {0.1, 1.0, 50.0}) {
            auto p = softmax(std::vector<double>{2.0, 2.0, 2.0, 2.0}, beta);
            for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
        }
    }
    SUBCASE("two actions at beta 0.3") {
        auto p = softmax(std::vector<double>{1.0, 0.0}, 0.3);
        CHECK(p[0] == doctest::Approx(std::exp(0.3) / (std::exp(0.3) + 1.0)).epsilon(1e-14));
        CHECK(std::abs(p[0] - 0.57444) < 1e-5);
        CHECK(std::abs(p[1] - 0.42556) < 1e-5);
    }
    SUBCASE("large values do not overflow") {
        auto p = softmax(std::vector<double>{1e6, 1e6 - 1.0}, 1.0);
        CHECK(std::isfinite(p[0]));
        CHECK(p[0] + p[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("greedy action") {
    CHECK(argmax(std::vector<double>{1.0, 2.0, 0.0}) == 1);
    CHECK(argmax(std::vector<double>{2.0, 2.0, 0.0}) == 0);
    auto vf = make_vf(3, 2, {{0, {1.0, 0.0}}, {1, {0.0, 1.0}}, {2, {0.4, 0.4}}});
    CHECK(greedy_action(vf, Belief{0.8, 0.2}) == 0);
    CHECK(greedy_action(vf, Belief{0.2, 0.8}) == 1);
    CHECK(greedy_action(vf, Belief{0.5, 0.5}) == 0);
}

TEST_CASE("simulate baselines") {
    const Pomdp tiger = tiger_at(tiger::kTrueTheta);
    SUBCASE("always listen earns exactly -1 per step") {
        auto listen = make_constant_policy(tiger, tiger::kListen);
        auto r = simulate(tiger, *listen, 5000, 11);
        CHECK(r.average_reward == -1.0);
        CHECK(r.trace.size() == 5000);
    }
    SUBCASE("zero reward model") {
        Pomdp m(2, 2, 2, 0.9);
        for (Index s = 0; s < 2; ++s)
            for (Index a = 0; a < 2; ++a) {
                m.set_transition(s, a, 1 - s, 1.0);
                m.set_observation(a, s, s, 1.0);
            }
        m.set_initial(0, 0.5);
        m.set_initial(1, 0.5);
        auto u = make_uniform_policy(m);
        CHECK(simulate(m, *u, 1000, 3).average_reward == 0.0);
    }
    SUBCASE("zero steps is a configuration error") {
        auto u = make_uniform_policy(tiger);
        CHECK_THROWS_AS(simulate(tiger, *u, 0, 1), ConfigError);
    }
}

TEST_CASE("generate demo") {
    const Pomdp tiger = tiger_at(tiger::kTrueTheta);
    const ValueFunction vf = solve(tiger, SolverConfig{});
    SUBCASE("large beta follows the greedy action") {
        // Replay the trace through the belief filter and compare with the argmax at each step.
        auto trace = generate_demo(tiger, vf, PolicyConfig{100.0}, 2000, 5);
        Belief b(tiger.initial_belief().begin(), tiger.initial_belief().end());
        std::size_t agree = 0;
        for (const auto& st : trace.steps) {
            if (st.action == greedy_action(vf, b)) ++agree;
            b = belief_update(tiger, b, st.action, st.observation).belief;
        }
        CHECK(static_cast<double>(agree) / trace.size() >= 0.99);
    }
    SUBCASE("episode count matches the expert's typical behaviour") {
        double episodes = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto trace = generate_demo(tiger, vf, PolicyConfig{0.3}, 100, 1000 + seed);
            for (const auto& st : trace.steps) episodes += st.action != tiger::kListen;
        }
        CHECK(std::abs(episodes / 100.0 - 22.0) <= 6.0);
    }
}

TEST_CASE("belief policy resets on an observation its model rules out") {
    Pomdp agent_model(2, 1, 2, 0.9);
    agent_model.set_transition(0, 0, 0, 1.0);
    agent_model.set_transition(1, 0, 1, 1.0);
    agent_model.set_observation(0, 0, 0, 1.0);
    agent_model.set_observation(0, 1, 1, 1.0);
    agent_model.set_initial(0, 1.0);
    auto policy = make_uniform_policy(agent_model);
    policy->reset();
    policy->observe(0, 1);
    CHECK(policy->belief_resets() == 1);
    CHECK(policy->belief()[0] == 1.0);
}

TEST_SUITE("invariants") {
    TEST_CASE("belief normalization and filtering consistency on random models") {
        Rng rng(77);
        for (int rep = 0; rep < 200; ++rep) {
            const Pomdp m = oracle::random_pomdp(1 + rng() % 4, 1 + rng() % 3, 1 + rng() % 3, rng);
            const DemoTrace t = oracle::random_trace(m, rng() % 12, rng);
            Belief b(m.initial_belief().begin(), m.initial_belief().end());
            double log_norm = 0.0;
            for (const auto& st : t.steps) {
                auto u = belief_update(m, b, st.action, st.observation);
                double total = 0.0;
                for (double x : u.belief) {
                    CHECK(x >= 0.0);
                    total += x;
                }
                CHECK(std::abs(total - 1.0) <= 1e-9);
                log_norm += std::log(u.normalizer);
                b = u.belief;
            }
            const double ll = obs_loglik(m, t);
            CHECK(std::abs(ll - log_norm) <= 1e-9 * std::max(1.0, std::abs(ll)));
        }
    }

    TEST_CASE("softmax shift invariance and monotonicity") {
        Rng rng(5);
        for (int rep = 0; rep < 500; ++rep) {
            std::vector<double> q(2 + rng() % 4);
            for (auto& x : q) x = 20.0 * uniform01(rng) - 10.0;
            const double beta = 3.0 * uniform01(rng);
            const double c = 200.0 * uniform01(rng) - 100.0;
            auto p = softmax(q, beta);
            auto shifted = q;
            for (auto& x : shifted) x += c;
            auto ps = softmax(shifted, beta);
            CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
            for (std::size_t i = 0; i < q.size(); ++i) {
                CHECK(std::abs(p[i] - ps[i]) <= 1e-12);
                for (std::size_t j = 0; j < q.size(); ++j)
                    if (q[i] > q[j]) CHECK(p[i] >= p[j]);
            }
            auto u = softmax(q, 0.0);
            for (double x : u) CHECK(x == 1.0 / static_cast<double>(q.size()));
        }
    }

    TEST_CASE("greedy action invariant under shift and positive scaling") {
        Rng rng(9);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t A = 2 + rng() % 3, S = 2 + rng() % 3;
            ValueFunction vf(A, S), moved(A, S);
            const double c = 50.0 * uniform01(rng) - 25.0, k = 0.1 + 5.0 * uniform01(rng);
            for (Index a = 0; a < A; ++a)
                for (int n = 0; n < 3; ++n) {
                    std::vector<double> v(S);
                    for (auto& x : v) x = 10.0 * uniform01(rng);
                    std::vector<double> w = v;
                    for (auto& x : w) x = k * x + c;
                    vf.add(a, v);
                    moved.add(a, w);
                }
            const auto b = oracle::random_simplex(S, rng);
            CHECK(greedy_action(vf, b) == greedy_action(moved, b));
        }
    }

    TEST_CASE("simulate and generate_demo are reproducible from the seed") {
        const Pomdp tiger = tiger_at(tiger::kTrueTheta);
        const ValueFunction vf = solve(tiger, SolverConfig{});
        auto p1 = make_softmax_policy(tiger, vf, PolicyConfig{0.3});
        auto p2 = make_softmax_policy(tiger, vf, PolicyConfig{0.3});
        auto r1 = simulate(tiger, *p1, 3000, 42);
        auto r2 = simulate(tiger, *p2, 3000, 42);
        CHECK(r1.trace == r2.trace);
        CHECK(r1.total_reward == r2.total_reward);
        CHECK(generate_demo(tiger, vf, PolicyConfig{0.3}, 100, 8) == generate_demo(tiger, vf, PolicyConfig{0.3}, 100, 8));
        CHECK_FALSE(generate_demo(tiger, vf, PolicyConfig{0.3}, 100, 8) == generate_demo(tiger, vf, PolicyConfig{0.3}, 100, 9));
    }
}
