#include <doctest.h>

#include <cmath>
#include <random>

#include "llmrl/errors.hpp"
#include "llmrl/env/uav.hpp"
#include "llmrl/mdp/episode.hpp"

using namespace llmrl;
using namespace llmrl::env;

namespace {

// UAV starts exactly at the MBS (100, 100); one terminal at (150, 150).
UavScenario trace_scenario() {
    UavScenario s;
    s.terminals = {{150.0, 150.0}};
    s.start_radius = 0.0;
    return s;
}

mdp::Action velocity(double vx, double vy) { return mdp::Action::continuous(Eigen::Vector2d(vx, vy)); }

double feature(const UavEnv& env, const Eigen::VectorXd& obs, const std::string& name) {
    return obs[static_cast<Eigen::Index>(*env.spec().feature_index(name))];
}

double eval(const mdp::RewardOverride& r, const dsl::Bindings& features) {
    dsl::Bindings b = features;
    for (const auto& [k, v] : r.constants) b[k] = v;
    return dsl::evaluate(r.expr, b);
}

}  // namespace

TEST_CASE("uav: hovering away from terminals costs c_hover only") {
    UavEnv env(trace_scenario());
    env.reset(0);
    const auto r = env.step(velocity(0.0, 0.0));
    const auto& ledger = env.world().last_ledger;
    CHECK(ledger.move == 0.0);
    CHECK(ledger.transmit == 0.0);
    CHECK(ledger.hover == 1.0);
    CHECK(feature(env, r.observation, "energy") == 1.0);
    CHECK(r.reward == -1.0);
}

TEST_CASE("uav: hand-computed two-step trace") {
    UavEnv env(trace_scenario());
    env.reset(3);
    CHECK(env.world().position == Point{100.0, 100.0});

    // Step 1: move by (30, 20): 0.5 * (900 + 400) = 650 J.
    auto r1 = env.step(velocity(30.0, 20.0));
    CHECK(env.world().last_ledger.move == 650.0);
    CHECK(env.world().last_ledger.hover == 0.0);
    CHECK(env.world().battery == 4350.0);
    CHECK(env.world().position == Point{130.0, 120.0});
    CHECK(env.world().freshness[0] == 1.0);
    CHECK(r1.reward == -650.0);

    // Step 2: hover at (130, 120), 36.06 m from the terminal: collect 2 slots of data.
    auto r2 = env.step(velocity(0.0, 0.0));
    CHECK(env.world().last_ledger.hover == 1.0);
    CHECK(env.world().last_ledger.transmit == doctest::Approx(0.2));
    CHECK(env.world().battery == doctest::Approx(4348.8));
    CHECK(env.world().freshness[0] == 0.0);
    CHECK(env.world().collected == 2.0);
    CHECK(env.episode_energy() == doctest::Approx(651.2));
    const double d = std::hypot(20.0, 30.0);
    CHECK(feature(env, r2.observation, "position_score") == doctest::Approx(1.0 / (1.0 + d / (1000.0 * std::sqrt(2.0)))));
    CHECK(feature(env, r2.observation, "energy") == doctest::Approx(1.2));
}

TEST_CASE("uav: battery exhaustion ends the episode") {
    auto s = trace_scenario();
    s.battery_capacity = 1.5;
    UavEnv env(s);
    env.reset(0);
    CHECK_FALSE(env.step(velocity(0, 0)).done);
    const auto r = env.step(velocity(0, 0));
    CHECK(r.done);
    CHECK_FALSE(r.truncated);
    CHECK(env.world().battery == 0.0);
}

TEST_CASE("uav: energy ledger conservation on random trajectories") {
    UavScenario s;
    s.battery_capacity = 1e9;
    s.horizon = 150;
    UavEnv env(s);
    std::mt19937_64 rng(17);
    const double half = s.v_max / std::sqrt(2.0);
    std::uniform_real_distribution<double> u(-half, half);
    std::bernoulli_distribution hover(0.3);
    for (int ep = 0; ep < 20; ++ep) {
        env.reset(static_cast<std::uint64_t>(ep));
        double ledger_sum = 0.0;
        bool done = false;
        while (!done) {
            const double before = env.world().battery;
            const auto a = hover(rng) ? velocity(0, 0) : velocity(u(rng), u(rng));
            done = env.step(a).done;
            const auto& l = env.world().last_ledger;
            CHECK(env.world().battery == before - (l.move + l.hover + l.transmit));
            ledger_sum += l.total();
            CHECK(env.world().position[0] >= 0.0);
            CHECK(env.world().position[0] <= s.area_size);
            CHECK(env.world().position[1] >= 0.0);
            CHECK(env.world().position[1] <= s.area_size);
        }
        CHECK(env.episode_energy() == doctest::Approx(ledger_sum).epsilon(1e-12));
    }
}

TEST_CASE("uav: speed limit and action box") {
    UavEnv env(trace_scenario());
    env.reset(0);
    CHECK_THROWS_AS(env.step(velocity(40.0, 40.0)), ContractError);
    const double half = 50.0 / std::sqrt(2.0);
    CHECK_NOTHROW(env.step(velocity(half, -half)));
}

TEST_CASE("uav: boundary violation and low battery set the penalty") {
    auto s = trace_scenario();
    s.mbs = {10.0, 10.0};
    UavEnv env(s);
    env.reset(0);
    auto r = env.step(velocity(-30.0, 0.0));
    CHECK(env.world().boundary_violation);
    CHECK(feature(env, r.observation, "penalty") == 2.0);
    CHECK(env.world().position == Point{0.0, 10.0});
    r = env.step(velocity(5.0, 0.0));
    CHECK(feature(env, r.observation, "penalty") == 1.0);

    auto low = trace_scenario();
    low.battery_capacity = 100.0;
    UavEnv env2(low);
    env2.reset(0);
    r = env2.step(velocity(4.0, 0.0));  // 8 J: 92 left, not yet critical
    CHECK(feature(env2, r.observation, "penalty") == 1.0);
    r = env2.step(velocity(9.0, 0.0));  // 40.5 J: 51.5 left
    r = env2.step(velocity(9.0, 0.0));  // 11 J left, still above 10%
    CHECK(feature(env2, r.observation, "penalty") == 1.0);
    r = env2.step(velocity(2.0, 0.0));  // 2 J: 9 left, critical
    CHECK(feature(env2, r.observation, "penalty") == 2.0);
}

TEST_CASE("uav: mission quota ends the episode") {
    auto s = trace_scenario();
    s.mbs = {150.0, 150.0};
    s.mission_quota = 3.0;
    UavEnv env(s);
    env.reset(0);
    CHECK_FALSE(env.step(velocity(0, 0)).done);  // collects 1
    CHECK_FALSE(env.step(velocity(0, 0)).done);  // collects 1 more
    env.step(velocity(5, 0));                    // moves, freshness 1
    const auto r = env.step(velocity(0, 0));     // collects 2: total 4
    CHECK(r.done);
    CHECK(feature(env, r.observation, "mission_progress") == 1.0);
}

TEST_CASE("position_score: examples and radial monotonicity") {
    UavWorld w;
    w.terminals = {{100.0, 100.0}, {300.0, 100.0}};
    w.position = {200.0, 100.0};
    CHECK(position_score(w, 50.0) == 1.0);
    w.position = {200.0, 150.0};
    CHECK(position_score(w, 50.0) == 0.5);
    double prev = 2.0;
    for (double r = 0.0; r < 500.0; r += 7.5) {
        w.position = {200.0 + r * 0.6, 100.0 + r * 0.8};
        const double sc = position_score(w, 100.0);
        CHECK(sc < prev);
        CHECK(sc > 0.0);
        CHECK(sc <= 1.0);
        prev = sc;
    }
    w.terminals.clear();
    CHECK_THROWS_AS(position_score(w, 1.0), ContractError);
}

TEST_CASE("rewards: manual and enriched examples") {
    const auto manual = manual_reward(1.0);
    CHECK(eval(manual, {{"energy", 2.0}, {"penalty", 1.0}, {"position_score", 0.3}}) == -2.0);
    CHECK(eval(manual, {{"energy", 0.0}, {"penalty", 2.0}, {"position_score", 0.3}}) == 0.0);
    CHECK(eval(manual, {{"energy", 3.0}, {"penalty", 2.0}, {"position_score", 0.3}}) ==
          2.0 * eval(manual, {{"energy", 3.0}, {"penalty", 1.0}, {"position_score", 0.3}}));

    const auto enriched = enriched_reward(1.0, 0.5);
    CHECK(eval(enriched, {{"energy", 2.0}, {"penalty", 1.0}, {"position_score", 1.0}}) == -1.5);
    for (double w2 : {0.0, 0.5, 3.0}) {
        CHECK(eval(enriched_reward(1.0, w2), {{"energy", 4.0}, {"penalty", 2.0}, {"position_score", 0.0}}) ==
              eval(manual, {{"energy", 4.0}, {"penalty", 2.0}, {"position_score", 0.0}}));
    }
    CHECK_THROWS_AS(eval(manual, {{"energy", 1.0}}), EvaluationError);
}

TEST_CASE("rewards: w2 = 0 matches manual on every step of every trajectory") {
    UavEnv env(UavScenario{});
    const auto manual = manual_reward(1.0);
    const auto enriched = enriched_reward(1.0, 0.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-35.0, 35.0);
    for (int ep = 0; ep < 5; ++ep) {
        env.reset(static_cast<std::uint64_t>(ep));
        bool done = false;
        while (!done) {
            const auto r = env.step(velocity(u(rng), u(rng)));
            done = r.done;
            const double m = mdp::evaluate_override(manual, env.spec(), r.observation);
            CHECK(m == mdp::evaluate_override(enriched, env.spec(), r.observation));
            CHECK(m == r.reward);
        }
    }
}

TEST_CASE("uav: feature names match the declared schema") {
    UavScenario s;
    s.n_terminals = 3;
    UavEnv env(s);
    const std::vector<std::string> names{"energy",  "position_score", "penalty",          "battery_frac",
                                         "x",       "y",              "centroid_dx",      "centroid_dy",
                                         "mission_progress", "freshness_0", "freshness_1", "freshness_2"};
    CHECK(env.spec().feature_names == names);
    CHECK_NOTHROW(mdp::check_override(manual_reward(), env.spec()));
    CHECK_NOTHROW(mdp::check_override(enriched_reward(), env.spec()));
    const auto schema = mdp::reward_schema(env.spec(), enriched_reward().constants);
    CHECK(schema.size() == names.size() + 2);
}

TEST_CASE("uav: scenario json round trip and validation") {
    UavScenario s;
    s.layout = "cluster";
    s.mission_quota = 5.0;
    s.terminals = {{1.0, 2.0}};
    const auto back = UavScenario::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK_THROWS_AS(UavScenario::from_json({{"c_mvoe", 1.0}}), ConfigError);
    UavScenario bad;
    bad.v_max = -1.0;
    CHECK_THROWS_AS(UavEnv{bad}, ConfigError);
}

TEST_CASE("uav: layouts are deterministic in the layout seed") {
    UavScenario s;
    s.layout_seed = 9;
    CHECK(terminal_layout(s) == terminal_layout(s));
    auto t = s;
    t.layout_seed = 10;
    CHECK(terminal_layout(s) != terminal_layout(t));
    s.layout = "cluster";
    for (const auto& p : terminal_layout(s)) {
        CHECK(p[0] >= 0.0);
        CHECK(p[0] <= s.area_size);
    }
}
