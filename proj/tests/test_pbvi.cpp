#include "oracles.hpp"

#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/pbvi.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace lpomdp;
using namespace lpomdp::pbvi;

namespace {

std::vector<double> rewards_of(const pomdp::Pomdp& m) { return m.rewards; }

oracle::DenseModel identity_observed(oracle::DenseModel d) {
    const std::size_t n = d.P.size();
    d.Z.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        d.Z[s][s] = 1.0;
    }
    return d;
}

SolverConfig tight_config() {
    SolverConfig cfg;
    cfg.n_beliefs = 200;
    cfg.max_backup_rounds = 5000;
    cfg.bellman_tolerance = 1e-11;
    cfg.expansion_min_distance = 1e-6;
    return cfg;
}

} // namespace

TEST_CASE("single state, single action, reward 1, gamma 0.5") {
    oracle::DenseModel d;
    d.atoms = {"a"};
    d.labels = {{}};
    d.P = {{{1.0}}};
    d.Z = {{1.0}};
    d.init = {1.0};
    d.r = {{1.0}};
    const auto m = oracle::build(d);
    const auto p = solve_discounted(m.dynamics, rewards_of(m.dynamics), 0.5, tight_config());
    REQUIRE(p.stage(0).size() == 1);
    CHECK(p.stage(0)[0].values[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(p.converged);
    CHECK(initial_value(p, m.dynamics) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("fully observable models match exact value iteration") {
    CounterRng rng(51);
    for (int inst = 0; inst < 12; ++inst) {
        const std::size_t n = 2 + rng.below(4);
        auto d = identity_observed(oracle::random_dense(rng, n, 2 + rng.below(2), 1));
        d.init.assign(n, 1.0 / static_cast<double>(n));
        const auto m = oracle::build(d);
        const double gamma = 0.9;
        const auto reward = rewards_of(m.dynamics);
        const auto p = solve_discounted(m.dynamics, reward, gamma, tight_config());
        const auto exact = oracle::mdp_discounted_values(m.dynamics, reward, gamma);
        for (std::size_t s = 0; s < n; ++s) {
            pomdp::Belief b{std::vector<double>(n, 0.0)};
            b.prob[s] = 1.0;
            CAPTURE(inst);
            CAPTURE(s);
            CHECK(std::abs(policy_value(p, b) - exact[s]) < 1e-6);
        }
    }
}

TEST_CASE("value at the initial belief agrees with rollouts") {
    CounterRng rng(52);
    for (int inst = 0; inst < 3; ++inst) {
        auto d = oracle::random_dense(rng, 4, 2, 2);
        d.stopping = pomdp::StoppingModel::geometric(0.8);
        const auto m = oracle::build(d);
        SolverConfig cfg;
        cfg.n_beliefs = 150;
        cfg.bellman_tolerance = 1e-8;
        const auto p = solve_discounted(m.dynamics, rewards_of(m.dynamics), 0.8, cfg);
        const auto selector = as_selector(p);
        const std::size_t n = 10000;
        double sum = 0.0;
        double sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = pomdp::sample_trajectory(m.dynamics, selector, derive_seed(7, i)).total_reward();
            sum += r;
            sum2 += r * r;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sum2 / n - mean * mean) / n);
        CAPTURE(inst);
        CHECK(std::abs(initial_value(p, m.dynamics) - mean) < 3.0 * se + 1e-3);
    }
}

TEST_CASE("alpha entries stay within reward bounds and solves are deterministic") {
    CounterRng rng(53);
    for (int inst = 0; inst < 10; ++inst) {
        const auto m = oracle::build(oracle::random_dense(rng, 3 + rng.below(4), 3, 2 + rng.below(2)));
        const auto reward = rewards_of(m.dynamics);
        const double gamma = 0.95;
        SolverConfig cfg;
        cfg.n_beliefs = 60;
        cfg.expansion_seed = static_cast<std::uint64_t>(inst);
        const auto p = solve_discounted(m.dynamics, reward, gamma, cfg);
        const double lo = *std::min_element(reward.begin(), reward.end()) / (1 - gamma);
        const double hi = *std::max_element(reward.begin(), reward.end()) / (1 - gamma);
        for (const auto& alpha : p.stage(0)) {
            for (double v : alpha.values) {
                CHECK(v >= lo - 1e-9);
                CHECK(v <= hi + 1e-9);
            }
        }
        CHECK(solve_discounted(m.dynamics, reward, gamma, cfg) == p);
    }
}

TEST_CASE("monotone improvement across backup rounds") {
    CounterRng rng(54);
    for (int inst = 0; inst < 5; ++inst) {
        const auto m = oracle::build(oracle::random_dense(rng, 5, 3, 2));
        const auto reward = rewards_of(m.dynamics);
        SolverConfig cfg;
        cfg.n_beliefs = 40;
        cfg.bellman_tolerance = 1e-12;
        double previous = -1e300;
        for (std::size_t rounds = 1; rounds <= 30; ++rounds) {
            cfg.max_backup_rounds = rounds;
            const double v = initial_value(solve_discounted(m.dynamics, reward, 0.9, cfg), m.dynamics);
            CHECK(v >= previous - 1e-12);
            previous = v;
        }
    }
}

TEST_CASE("finite horizon agrees with the history-tree oracle") {
    CounterRng rng(55);
    for (int inst = 0; inst < 40; ++inst) {
        const std::size_t n = 2 + rng.below(5);
        const std::size_t no = 1 + rng.below(2);
        const std::size_t T = rng.below(4);
        auto d = oracle::random_dense(rng, n, 2, no);
        d.stopping = pomdp::StoppingModel::fixed(T);
        const auto m = oracle::build(d);
        const auto reward = rewards_of(m.dynamics);
        std::vector<double> terminal(n);
        for (auto& t : terminal) {
            t = rng.uniform();
        }
        SolverConfig cfg;
        cfg.n_beliefs = 100000;
        const auto p = solve_finite_horizon(m.dynamics, reward, terminal, T, cfg);
        CHECK(p.kind == AlphaPolicy::Kind::TimeIndexed);
        CHECK(p.stages.size() == T + 1);
        const double exact = exact_value_oracle(m.dynamics, reward, terminal, T);
        CAPTURE(inst);
        CHECK(std::abs(initial_value(p, m.dynamics) - exact) < 1e-9);
    }
}

TEST_CASE("history-tree oracle on closed-form cases") {
    CounterRng rng(56);
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n = 2 + rng.below(3);
        const std::size_t T = rng.below(4);
        auto d = oracle::random_dense(rng, n, 2, 2);
        const double c = rng.uniform() * 3 - 1;
        for (auto& row : d.r) {
            std::fill(row.begin(), row.end(), c);
        }
        d.stopping = pomdp::StoppingModel::fixed(T);
        const auto m = oracle::build(d);
        const std::vector<double> zero(n, 0.0);
        CHECK(exact_value_oracle(m.dynamics, rewards_of(m.dynamics), zero, T) ==
              doctest::Approx(c * static_cast<double>(T + 1)).epsilon(1e-12));

        auto full = identity_observed(oracle::random_dense(rng, n, 2, 1));
        full.stopping = pomdp::StoppingModel::fixed(T);
        const auto mf = oracle::build(full);
        std::vector<double> terminal(n);
        for (auto& t : terminal) {
            t = rng.uniform();
        }
        const auto reward = rewards_of(mf.dynamics);
        CHECK(exact_value_oracle(mf.dynamics, reward, terminal, T) ==
              doctest::Approx(oracle::mdp_finite_value(mf.dynamics, reward, terminal, T)).epsilon(1e-12));
    }

    // Deterministic chain, T = 1: go earns 1 then 3 from s1, wait earns 2 twice.
    oracle::DenseModel chain;
    chain.atoms = {"a"};
    chain.labels = {{}, {"a"}};
    chain.P = {{{0, 1}, {1, 0}}, {{0, 1}, {0, 1}}};
    chain.Z = {{1}, {1}};
    chain.init = {1, 0};
    chain.r = {{1, 2}, {3, 0}};
    chain.stopping = pomdp::StoppingModel::fixed(1);
    const auto mc = oracle::build(chain);
    CHECK(exact_value_oracle(mc.dynamics, rewards_of(mc.dynamics), std::vector<double>{0.0, 0.0}, 1) == doctest::Approx(4.0));

    auto big = oracle::random_dense(rng, 3, 3, 3);
    big.stopping = pomdp::StoppingModel::fixed(12);
    const auto mb = oracle::build(big);
    CHECK_THROWS_AS(exact_value_oracle(mb.dynamics, rewards_of(mb.dynamics), std::vector<double>(3, 0.0), 12), BudgetError);
}

TEST_CASE("finite horizon special cases") {
    CounterRng rng(57);
    auto d = oracle::random_dense(rng, 3, 3, 2);
    d.stopping = pomdp::StoppingModel::fixed(0);
    d.init = {0.2, 0.5, 0.3};
    d.Z = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    const auto m = oracle::build(d);
    const auto reward = rewards_of(m.dynamics);
    const std::vector<double> zero(3, 0.0);
    const auto p = solve_finite_horizon(m.dynamics, reward, zero, 0, SolverConfig{});
    const pomdp::Belief b0{{0.2, 0.5, 0.3}};
    std::size_t best = 0;
    double best_value = -1e300;
    for (std::size_t a = 0; a < 3; ++a) {
        double v = 0.0;
        for (std::size_t s = 0; s < 3; ++s) {
            v += b0[s] * m.dynamics.reward(s, a);
        }
        if (v > best_value) {
            best_value = v;
            best = a;
        }
    }
    CHECK(policy_action(p, b0, 0) == best);
    CHECK(policy_value(p, b0, 0) == doctest::Approx(best_value));

    const std::vector<double> zeros(reward.size(), 0.0);
    const auto pz = solve_finite_horizon(m.dynamics, zeros, zero, 2, SolverConfig{});
    CHECK(initial_value(pz, m.dynamics) == 0.0);
}

TEST_CASE("action selection contract") {
    AlphaPolicy p;
    p.n_states = 2;
    p.discount = 0.9;
    p.stages = {{{3, {1.0, 1.0}}}};
    CHECK(policy_action(p, pomdp::Belief{{0.3, 0.7}}) == 3);
    CHECK(policy_action(p, pomdp::Belief{{1.0, 0.0}}) == 3);

    p.stages = {{{2, {1.0, 0.0}}, {1, {0.0, 1.0}}}};
    CHECK(policy_action(p, pomdp::Belief{{0.5, 0.5}}) == 2);
    CHECK(policy_action(p, pomdp::Belief{{0.0, 1.0}}) == 1);
    p.stages = {{{1, {0.0, 1.0}}, {2, {1.0, 0.0}}}};
    CHECK(policy_action(p, pomdp::Belief{{0.5, 0.5}}) == 1);
    CHECK(best_vector(p.stage(0), pomdp::Belief{{0.5, 0.5}}) == 0);

    // Action 1 dominates at state 0: reward 5 against 0, one step.
    oracle::DenseModel d;
    d.atoms = {"a"};
    d.labels = {{}, {}};
    d.P = {{{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    d.Z = {{1, 0}, {0, 1}};
    d.init = {0.5, 0.5};
    d.r = {{0, 5}, {1, 0}};
    d.stopping = pomdp::StoppingModel::fixed(0);
    const auto m = oracle::build(d);
    const auto fh = solve_finite_horizon(m.dynamics, rewards_of(m.dynamics), std::vector<double>{0.0, 0.0}, 0, SolverConfig{});
    CHECK(policy_action(fh, pomdp::Belief{{1.0, 0.0}}, 0) == 1);
    CHECK(policy_action(fh, pomdp::Belief{{0.0, 1.0}}, 0) == 0);
    CHECK_THROWS_AS(policy_action(fh, pomdp::Belief{{1.0, 0.0}}, 1), ValidationError);
    CHECK_THROWS_AS(policy_action(fh, pomdp::Belief{{1.0}}, 0), ValidationError);
}

TEST_CASE("configuration validation") {
    SolverConfig cfg;
    cfg.n_beliefs = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SolverConfig{};
    cfg.bellman_tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
