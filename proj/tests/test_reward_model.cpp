#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"
#include "autopref/reward_model.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace autopref;
using fx::kLeft;
using fx::kRight;

namespace {

Preference pair_of(std::size_t winner, std::size_t loser) {
  return {winner, loser, 1.0, 0.0, Winner::kFirst};
}

// All strictly ordered pairs of a pool under the subtask score.
std::vector<Preference> subtask_prefs(const ProductMdp& mdp, const std::vector<Trajectory>& pool) {
  std::vector<Preference> out;
  const ScoreWeights w;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const double a = subtask_score(mdp, pool[i], w), b = subtask_score(mdp, pool[j], w);
      const Winner win = compare_scores(a, b);
      if (win != Winner::kIndifferent) out.push_back({i, j, a, b, win});
    }
  }
  return out;
}

// Loss as a function of one parameter, for finite differences.
double loss_at(RewardTable model, std::size_t idx, double value, std::span<const Trajectory> pool,
               std::span<const Preference> prefs) {
  model.theta()[idx] = value;
  return ranking_loss(model, pool, prefs);
}

}  // namespace

TEST_SUITE("reward_model") {

TEST_CASE("table access") {
  const auto& mdp = fx::chain3();
  RewardTable model(TableShape::of(mdp));
  CHECK(model.shape().size() == 4 * 3 * 2);
  for (double v : model.theta()) CHECK(v == 0.0);
  model.set(2, 1, 0, 2.5);
  CHECK(model.reward(2, 1, 0) == 2.5);
  CHECK(model.theta()[model.shape().index(2, 1, 0)] == 2.5);
  CHECK_THROWS_AS(model.reward(4, 0, 0), UsageError);
  CHECK_THROWS_AS(model.set(0, 3, 0, 1.0), UsageError);
  CHECK_THROWS_AS(model.reward(0, 0, 2), UsageError);
}

TEST_CASE("trajectory_return") {
  const auto& mdp = fx::chain3();
  RewardTable model(TableShape::of(mdp), 0.9);
  const auto t = fx::play(mdp, {kLeft, kLeft});
  CHECK(trajectory_return(model, t) == 0.0);
  model.set(0, 0, kLeft, 1.0);
  CHECK(trajectory_return(model, t) == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(trajectory_return(model, fx::play(mdp, {})) == 0.0);
}

TEST_CASE("ranking_loss, hand evaluated") {
  const auto& mdp = fx::chain3();
  RewardTable model(TableShape::of(mdp), 0.95, 1.0);
  const std::vector<Trajectory> pool{fx::play(mdp, {kRight}), fx::play(mdp, {kLeft})};
  const std::vector<Preference> prefs{pair_of(0, 1)};
  CHECK(ranking_loss(model, pool, prefs) == 1.0);  // zero model: one per pair

  model.set(0, 0, kRight, 10.0);
  model.set(0, 0, kLeft, 9.85);
  CHECK(ranking_loss(model, pool, prefs) == doctest::Approx(0.85).epsilon(1e-12));

  model.set(0, 0, kLeft, 8.0);
  CHECK(ranking_loss(model, pool, prefs) == 0.0);

  // A second-preferred entry reverses which trajectory is the winner.
  const std::vector<Preference> flipped{{0, 1, 0.0, 1.0, Winner::kSecond}};
  CHECK(ranking_loss(model, pool, flipped) == doctest::Approx(3.0));

  const std::vector<Preference> tie{{0, 1, 1.0, 1.0, Winner::kIndifferent}};
  CHECK_THROWS_AS(ranking_loss(model, pool, tie), UsageError);
  const std::vector<Preference> outside{pair_of(0, 5)};
  CHECK_THROWS_AS(ranking_loss(model, pool, outside), UsageError);
}

TEST_CASE("training basics") {
  const auto& mdp = fx::chain3();
  const std::vector<Trajectory> pool{fx::play(mdp, {kRight, kRight}), fx::play(mdp, {kLeft, kLeft})};
  const std::vector<Preference> prefs{pair_of(0, 1)};
  Rng rng(0);

  SUBCASE("one epoch separates a single pair") {
    RewardTable model(TableShape::of(mdp));
    train(model, pool, prefs, {0.1, 1, 0.0}, rng);
    CHECK(trajectory_return(model, pool[0]) - trajectory_return(model, pool[1]) > 0.0);
  }
  SUBCASE("separated pairs are left alone") {
    RewardTable model(TableShape::of(mdp));
    model.set(0, 0, kRight, 5.0);
    const RewardTable before = model;
    const auto report = train(model, pool, prefs, {0.1, 10, 0.0}, rng);
    CHECK(model == before);
    CHECK(report.final_loss == 0.0);
    CHECK(report.epochs_run == 1);
  }
  SUBCASE("zero learning rate changes nothing") {
    RewardTable model(TableShape::of(mdp));
    const RewardTable before = model;
    train(model, pool, prefs, {0.0, 10, 0.0}, rng);
    CHECK(model == before);
  }
  SUBCASE("invalid arguments") {
    RewardTable model(TableShape::of(mdp));
    CHECK_THROWS_AS(train(model, pool, {}, {}, rng), UsageError);
    CHECK_THROWS_AS(train(model, pool, prefs, {-0.1, 1, 0.0}, rng), UsageError);
    CHECK_THROWS_AS(train(model, pool, prefs, {0.1, 1, -1.0}, rng), UsageError);
  }
  SUBCASE("non-finite loss raises DivergenceError") {
    RewardTable model(TableShape::of(mdp));
    model.set(0, 0, kRight, -std::numeric_limits<double>::max());
    model.set(1, 0, kRight, -std::numeric_limits<double>::max());
    CHECK_THROWS_AS(train(model, pool, prefs, {0.1, 5, 0.0}, rng), DivergenceError);
  }
}

TEST_CASE("subgradient matches finite differences") {
  const auto& mdp = fx::chain3();
  Rng rng(21);
  std::normal_distribution<double> noise(0.0, 0.3);
  const Policy random = uniform_random_policy(mdp.num_actions());
  int checked = 0;
  for (int instance = 0; instance < 20; ++instance) {
    std::vector<Trajectory> pool;
    for (int i = 0; i < 8; ++i) pool.push_back(rollout(mdp, random, rng, 6));
    const auto prefs = subtask_prefs(mdp, pool);
    if (prefs.empty()) continue;
    RewardTable model(TableShape::of(mdp));
    for (double& v : model.theta()) v = noise(rng);

    // Keep only instances away from every hinge kink.
    bool near_kink = false;
    for (const auto& p : prefs) {
      const double gap = trajectory_return(model, pool[p.preferred()]) -
                         trajectory_return(model, pool[p.rejected()]);
      if (std::abs(gap - model.margin()) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;

    const auto grad = ranking_subgradient(model, pool, prefs);
    REQUIRE(grad.size() == model.theta().size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double v = model.theta()[i];
      const double fd =
          (loss_at(model, i, v + h, pool, prefs) - loss_at(model, i, v - h, pool, prefs)) / (2 * h);
      CHECK(std::abs(grad[i] - fd) < 1e-6);
    }
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("loss is non-increasing per epoch with lr <= 0.1 on chain3") {
  const auto& mdp = fx::chain3();
  const Policy random = uniform_random_policy(mdp.num_actions());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    std::vector<Trajectory> pool;
    for (int i = 0; i < 30; ++i) pool.push_back(rollout(mdp, random, rng, 6));
    const auto prefs = subtask_prefs(mdp, pool);
    REQUIRE_FALSE(prefs.empty());
    for (double lr : {0.01, 0.05, 0.1}) {
      RewardTable model(TableShape::of(mdp));
      double before = ranking_loss(model, pool, prefs);
      for (int epoch = 0; epoch < 40; ++epoch) {
        train(model, pool, prefs, {lr, 1, 0.0}, rng);
        const double after = ranking_loss(model, pool, prefs);
        CHECK(after <= before + 1e-9);
        before = after;
      }
    }
  }
}

TEST_CASE("all horizon-6 chain3 pairs are separated within 200 epochs") {
  const auto& mdp = fx::chain3();
  const auto pool = enumerate_trajectories(mdp, 6, 100000);
  const auto prefs = subtask_prefs(mdp, pool);
  REQUIRE(prefs.size() > 0);
  RewardTable model(TableShape::of(mdp));
  Rng rng(3);
  const auto report = train(model, pool, prefs, {0.05, 200, 0.0}, rng);
  CHECK(report.epochs_run <= 200);
  CHECK(report.pair_accuracy == 1.0);
  CHECK(report.final_loss == 0.0);
  CHECK(pair_accuracy(model, pool, prefs) == 1.0);
}

TEST_CASE("any strict order over disjoint one-step trajectories is learnable") {
  const auto& mdp = fx::task("dungeon_quest");
  Rng rng(8);
  // Ten single steps from distinct product states.
  std::vector<Trajectory> pool;
  for (EnvState s = 0; pool.size() < 10; s += 3) {
    ProductState ps{s, 0};
    Rng step_rng(0);
    const auto out = mdp.step(ps, 0, step_rng);
    pool.push_back({ps, {{ps, 0, out.next, out.event}}, false});
  }
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::size_t> rank(pool.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    std::vector<Preference> prefs;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        prefs.push_back(rank[i] > rank[j] ? pair_of(i, j) : pair_of(j, i));
      }
    }
    RewardTable model(TableShape::of(mdp));
    const auto report = train(model, pool, prefs, {0.05, 500, 0.0}, rng);
    CHECK(report.pair_accuracy == 1.0);
  }
}

TEST_CASE("shift_to_cost") {
  const auto& mdp = fx::chain3();
  RewardTable model(TableShape::of(mdp));
  model.set(1, 0, 1, 2.0);
  model.set(2, 1, 0, -3.0);
  shift_to_cost(model, 0.1);
  CHECK(*std::max_element(model.theta().begin(), model.theta().end()) == doctest::Approx(-0.1));
  CHECK(model.reward(2, 1, 0) == doctest::Approx(-5.1));
  CHECK_THROWS_AS(shift_to_cost(model, -1.0), UsageError);
}

TEST_CASE("snapshot round-trip is exact") {
  const auto& mdp = fx::task("dungeon_quest");
  RewardTable model(TableShape::of(mdp), 0.97, 0.5);
  Rng rng(1);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : model.theta()) v = noise(rng) / 3.0;
  const std::string text = serialize_reward_table(model);
  const RewardTable back = parse_reward_table(text);
  CHECK(back == model);
  CHECK(serialize_reward_table(back) == text);
}

TEST_CASE("snapshot parse errors") {
  const std::string head = "reward-table\nshape 1 1 2\ngamma 0.9\nmargin 1\n";
  CHECK_NOTHROW(parse_reward_table(head + "0 0 0 1\n0 0 1 2\n"));
  CHECK_THROWS_AS(parse_reward_table(head + "0 0 0 1\n"), ParseError);             // missing
  CHECK_THROWS_AS(parse_reward_table(head + "0 0 0 1\n0 0 0 2\n"), ParseError);    // duplicate
  CHECK_THROWS_AS(parse_reward_table(head + "0 0 0 1\n0 0 2 2\n"), ParseError);    // outside
  CHECK_THROWS_AS(parse_reward_table(head + "0 0 0 x\n0 0 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_reward_table("q-table\nshape 1 1 1\n"), ParseError);
}

}  // TEST_SUITE
