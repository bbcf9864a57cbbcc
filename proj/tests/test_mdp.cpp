#include <doctest.h>

#include <numeric>
#include <random>

#include "llmrl/dsl/reward_expr.hpp"
#include "llmrl/env/chain.hpp"
#include "llmrl/errors.hpp"
#include "llmrl/mdp/episode.hpp"

using namespace llmrl;
using namespace llmrl::mdp;

namespace {

Policy always(int a) {
    return [a](const Eigen::VectorXd&, const std::optional<ActionMask>&) { return Action::discrete(a); };
}

}  // namespace

TEST_CASE("compute_return: examples") {
    const std::vector<double> r{7.0, 5.0, 3.0};
    CHECK(compute_return(r, 0.0) == 7.0);
    CHECK(compute_return(std::vector<double>{}, 0.9) == 0.0);
    CHECK(compute_return(std::vector<double>{1.0, 1.0, 1.0}, 0.5) == 1.75);
}

TEST_CASE("compute_return: gamma=1 is the plain sum") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> r(static_cast<std::size_t>(trial % 20));
        for (auto& x : r) x = std::round(u(rng));  // integers keep both sums exact
        CHECK(compute_return(r, 1.0) == std::accumulate(r.begin(), r.end(), 0.0));
    }
}

TEST_CASE("env: reset is deterministic per seed") {
    env::ChainEnv env;
    const auto a = env.reset(5);
    const auto b = env.reset(5);
    CHECK(a == b);
    int distinct = 0;
    for (std::uint64_t s = 0; s < 20; ++s) distinct += (env.reset(s) != a);
    CHECK(distinct > 0);
}

TEST_CASE("env: step contract") {
    env::ChainEnv env(0.9, 3);
    CHECK_THROWS_AS(env.step(Action::discrete(0)), UsageError);
    env.reset(0);
    CHECK_THROWS_AS(env.step(Action::discrete(2)), ContractError);
    CHECK_THROWS_AS(env.step(Action::continuous(Eigen::VectorXd::Zero(1))), ContractError);
    StepResult r;
    for (int i = 0; i < 3; ++i) r = env.step(Action::discrete(0));
    CHECK(r.done);
    CHECK(r.truncated);
    CHECK_THROWS_AS(env.step(Action::discrete(0)), UsageError);
}

TEST_CASE("run_episode: invariants and byte-identical replays") {
    env::ChainEnv env;
    const Episode a = run_episode(env, always(1), 11);
    const Episode b = run_episode(env, always(1), 11);
    CHECK(a.to_json().dump() == b.to_json().dump());
    REQUIRE_FALSE(a.transitions.empty());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) {
        CHECK(a.transitions[i].step_index == static_cast<int>(i));
        CHECK(a.transitions[i].done == (i + 1 == a.transitions.size()));
    }
    CHECK(a.total_reward == 10.0);
}

TEST_CASE("run_episode: reward override") {
    env::ChainEnv env(0.9, 20);
    RewardOverride zero{dsl::parse("0", {}), {}};
    const Episode e = run_episode(env, always(0), 3, &zero);
    CHECK(e.transitions.size() == 20);
    for (const auto& t : e.transitions) CHECK(t.reward == 0.0);

    // Reward equal to a state feature after the step.
    RewardOverride at_zero{dsl::parse("bonus * s0", {"s0", "bonus"}), {{"bonus", 2.0}}};
    const Episode f = run_episode(env, always(0), 3, &at_zero);
    for (const auto& t : f.transitions) CHECK(t.reward == 2.0 * t.next_state[0]);

    RewardOverride unknown{dsl::parse("altitude", {"altitude"}), {}};
    env.reset(9);
    CHECK_THROWS_AS(run_episode(env, always(0), 3, &unknown), ValidationError);
    CHECK(env.steps_taken() == 0);  // rejected before the first step
}

TEST_CASE("run_episode: compute_return of logged rewards is reproducible") {
    env::ChainEnv env;
    std::vector<double> returns;
    for (int rep = 0; rep < 2; ++rep) {
        const Episode e = run_episode(env, always(1), 4);
        std::vector<double> r;
        for (const auto& t : e.transitions) r.push_back(t.reward);
        returns.push_back(compute_return(r, env.spec().gamma));
    }
    CHECK(std::isfinite(returns[0]));
    CHECK(returns[0] == returns[1]);
}
