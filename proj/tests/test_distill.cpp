#include <algorithm>
#include <map>

#include "autopref/distill.hpp"
#include "autopref/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace autopref;
using fx::kLeft;
using fx::kRight;

namespace {

// A chain3 teacher solved under the known reward.
const QTable& chain3_teacher() {
  static const QTable qt =
      value_iteration(fx::chain3(), make_reward_fn(fx::chain3(), {RewardKind::kKnown}), 0.95);
  return qt;
}

ExperienceSample sample(const ProductMdp& mdp, ProductState from, ActionId a) {
  Rng rng(0);
  const auto out = mdp.step(from, a, rng);
  return {from, a, 0.0, out.next, out.event};
}

}  // namespace

TEST_SUITE("distill") {

TEST_CASE("teacher experience") {
  const auto& mdp = fx::chain3();
  Rng rng(4);
  const auto set = collect_teacher_experience(mdp, chain3_teacher(), 10, rng);
  CHECK(set.source_env == "chain3");
  CHECK(set.samples.size() >= 20);
  CHECK_NOTHROW(check_experience(mdp, set));
  for (const auto& s : set.samples) {
    CHECK(mdp.dfa().step(s.from.dfa, s.event) == s.to.dfa);
  }

  Rng none(4);
  CHECK(collect_teacher_experience(mdp, chain3_teacher(), 0, none).samples.empty());

  Rng a(9), b(9);
  const auto x = collect_teacher_experience(mdp, chain3_teacher(), 25, a);
  const auto y = collect_teacher_experience(mdp, chain3_teacher(), 25, b);
  REQUIRE(x.samples.size() == y.samples.size());
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    CHECK(x.samples[i].from == y.samples[i].from);
    CHECK(x.samples[i].action == y.samples[i].action);
    CHECK(x.samples[i].reward == y.samples[i].reward);
    CHECK(x.samples[i].to == y.samples[i].to);
    CHECK(x.samples[i].event == y.samples[i].event);
  }
}

TEST_CASE("check_experience rejects inconsistent samples") {
  const auto& mdp = fx::chain3();
  ExperienceSet set{"chain3", {sample(mdp, {1, 0}, kRight)}};
  CHECK_NOTHROW(check_experience(mdp, set));
  set.samples[0].to.dfa = 0;
  CHECK_THROWS_AS(check_experience(mdp, set), UsageError);
}

TEST_CASE("transition counts") {
  const auto& mdp = fx::chain3();
  const EventId a = mdp.dfa().event_index("a");
  CHECK(transition_counts({}).empty());

  ExperienceSet three{"chain3", {}};
  for (int i = 0; i < 3; ++i) three.samples.push_back(sample(mdp, {1, 0}, kRight));
  CHECK(transition_counts(three) == TransitionCounts{{{0, a}, 3}});

  Rng rng(12);
  const auto set = collect_teacher_experience(mdp, chain3_teacher(), 40, rng, {0.5, {}});
  const auto counts = transition_counts(set);
  std::size_t total = 0;
  for (const auto& [key, n] : counts) {
    CHECK(n >= 1);
    total += n;
  }
  CHECK(total == set.samples.size());
  CHECK(counts.size() > 1);
}

TEST_CASE("distilled values are sample means") {
  const auto& mdp = fx::chain3();
  QTable teacher = QTable::for_task(mdp);
  const ProductState p{1, 0};
  const ProductState p2{0, 0};
  teacher.set(mdp.index(p), kRight, 2.0);

  SUBCASE("two samples keyed (q0, a) with teacher values 2 and 4") {
    teacher.set(mdp.index(p), kLeft, 4.0);
    ExperienceSample other = sample(mdp, p, kRight);
    other.action = kLeft;  // same automaton transition, different teacher entry
    const ExperienceSet set{"chain3", {sample(mdp, p, kRight), other}};
    const auto table = distill_values(mdp, set, teacher);
    CHECK(table.value("q0", "a") == 3.0);
    CHECK(table.count("q0", "a") == 2);
  }

  SUBCASE("a single sample is copied exactly") {
    teacher.set(mdp.index(p), kRight, 0.1 + 0.2);
    const ExperienceSet set{"chain3", {sample(mdp, p, kRight)}};
    const auto table = distill_values(mdp, set, teacher);
    CHECK(table.value("q0", "a") == 0.1 + 0.2);
    CHECK(table.count("q0", "a") == 1);
  }

  SUBCASE("unseen transitions get the default") {
    ExperienceSet set{"chain3", {sample(mdp, p2, kRight)}};
    const auto table = distill_values(mdp, set, teacher, -0.5);
    CHECK(table.value("q1", "g") == -0.5);
    CHECK(table.default_value() == -0.5);
    CHECK(table.count("q0", "null") == 1);
  }
}

TEST_CASE("mean property and permutation invariance") {
  const auto& mdp = fx::task("dungeon_quest");
  LearnerConfig cfg;
  cfg.episodes = 400;
  Rng rng(6);
  const auto teacher = run_baseline(mdp, {RewardKind::kStepCost}, cfg, rng).policy;
  auto set = collect_teacher_experience(mdp, teacher, 30, rng, {0.3, {}});
  const auto table = distill_values(mdp, set, teacher);

  std::map<std::pair<DfaState, EventId>, double> sums;
  for (const auto& s : set.samples) {
    sums[{s.from.dfa, s.event}] += teacher.q(mdp.index(s.from), s.action);
  }
  const Dfa& d = mdp.dfa();
  for (const auto& [key, n] : transition_counts(set)) {
    const auto [q, e] = key;
    CHECK(table.count(d.state_name(q), d.event_name(e)) == n);
    CHECK(table.value(d, q, e) * double(n) == doctest::Approx(sums[key]).epsilon(1e-9));
  }

  std::shuffle(set.samples.begin(), set.samples.end(), rng);
  const auto shuffled = distill_values(mdp, set, teacher);
  for (const auto& [key, n] : transition_counts(set)) {
    CHECK(shuffled.value(d, key.first, key.second) ==
          doctest::Approx(table.value(d, key.first, key.second)).epsilon(1e-12));
  }
}

TEST_CASE("teacher shape must match") {
  const auto& mdp = fx::chain3();
  const QTable wrong(TableShape{2, 2, 2});
  ExperienceSet set{"chain3", {sample(mdp, {3, 0}, kRight)}};
  CHECK_THROWS_AS(distill_values(mdp, set, wrong), UsageError);
}

}  // TEST_SUITE
