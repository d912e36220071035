// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"

using namespace autopref;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<RewardKind> kBaselines{RewardKind::kKnown, RewardKind::kRewardMachine,
                                         RewardKind::kLpopl, RewardKind::kDistillShaping};

// 1. Q-learning with persistent exploration matches value iteration.
Outcome oracle_equivalence() {
  Outcome out{true, ""};
  for (const char* env : {"chain3", "dungeon_quest_3x3"}) {
    const ProductMdp mdp = make_task(env);
    const auto reach = mdp.reachable_states();
    for (RewardKind kind : kBaselines) {
      RewardSource src;
      src.kind = kind;
      const RewardFn reward = make_reward_fn(mdp, src);
      LearnerConfig cfg;
      cfg.episodes = 5000;
      cfg.epsilon = EpsilonSchedule::constant(1.0);
      const QTable optimum = value_iteration(mdp, reward, cfg.gamma, 1e-12);
      int close = 0;
      double slowest = 0.0, worst = 0.0;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto t0 = Clock::now();
        Rng rng(seed);
        const auto run = run_baseline(mdp, src, cfg, rng);
        slowest = std::max(slowest, seconds_since(t0));
        double dist = 0.0;
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
          if (!reach[s] || mdp.is_terminal(mdp.state(s))) continue;
          for (ActionId a = 0; a < mdp.num_actions(); ++a) {
            dist = std::max(dist, std::abs(run.policy.q(s, a) - optimum.q(s, a)));
          }
        }
        worst = std::max(worst, dist);
        close += dist < 0.05;
      }
      const bool ok = close >= 9 && slowest < 10.0;
      out.pass = out.pass && ok;
      out.detail += fmt("%s/%s %d/10 (max %.3f, %.2fs); ", env,
                        std::string(reward_kind_name(kind)).c_str(), close, worst, slowest);
    }
  }
  return out;
}

// 2. Desk-scale convergence check on chain3.
Outcome theorem_check() {
  const auto t0 = Clock::now();
  const ProductMdp mdp = make_task("chain3");
  const ConvergenceCheckConfig cfg;
  const auto report = check_convergence_theorem(mdp, cfg, LearnerConfig{}, 0);
  const double secs = seconds_since(t0);
  double gap = 0.0;
  for (const auto& t : report.trials) gap = std::max(gap, t.gap);
  return {report.passed && !report.vacuous && secs < 60.0,
          fmt("%zu/%zu trials within %.2f (largest gap %.2g), %zu of %zu pairs kept, %.1fs",
              report.trials_passed, report.trials.size(), cfg.epsilon, gap, report.pairs_kept,
              report.pairs_total, secs)};
}

// 3. Greedy policies under lpopl and its unshaped base agree everywhere reachable.
Outcome shaping_invariance() {
  Outcome out{true, ""};
  for (const auto& name : bundled_env_names()) {
    const auto t0 = Clock::now();
    const ProductMdp mdp = make_task(name);
    RewardSource shaped, base;
    shaped.kind = RewardKind::kLpopl;
    base.kind = RewardKind::kLpoplBase;
    const double gamma = shaped.gamma;
    const QTable a = value_iteration(mdp, make_reward_fn(mdp, shaped), gamma, 1e-12);
    const QTable b = value_iteration(mdp, make_reward_fn(mdp, base), gamma, 1e-12);
    const auto reach = mdp.reachable_states();
    std::size_t checked = 0, differ = 0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      if (!reach[s] || mdp.is_terminal(mdp.state(s))) continue;
      ++checked;
      differ += greedy_action(a, s, 1e-9) != greedy_action(b, s, 1e-9);
    }
    const double secs = seconds_since(t0);
    out.pass = out.pass && differ == 0 && secs < 30.0;
    out.detail += fmt("%s %zu/%zu (%.2fs); ", name.c_str(), checked - differ, checked, secs);
  }
  return out;
}

// 4. More completed subgoals always wins under default weights.
Outcome dominance() {
  Outcome out{true, ""};
  for (const auto& name : bundled_env_names()) {
    const ProductMdp mdp = make_task(name);
    const ScoreWeights w{};
    const auto scorer = make_scorer(mdp, {w.subgoal, w.distance, 0.0});
    Rng rng(17);
    const Policy random = uniform_random_policy(mdp.num_actions());
    std::uniform_int_distribution<std::size_t> len(1, mdp.horizon());
    std::size_t dominated = 0, right = 0;
    for (int k = 0; k < 1000; ++k) {
      const auto t1 = rollout(mdp, random, rng, len(rng));
      const auto t2 = rollout(mdp, random, rng, len(rng));
      const auto n1 = completed_subgoals(mdp, t1), n2 = completed_subgoals(mdp, t2);
      if (n1 == n2) continue;
      ++dominated;
      const auto p = prefer(t1, t2, scorer);
      right += p.winner == (n1 > n2 ? Winner::kFirst : Winner::kSecond);
    }
    out.pass = out.pass && right == dominated;
    out.detail += fmt("%s %zu/%zu; ", name.c_str(), right, dominated);
  }
  return out;
}

// 5. Consistent chain3 preferences are separated; subgradient matches finite differences.
Outcome separation() {
  const ProductMdp mdp = make_task("chain3");
  const auto pool = enumerate_trajectories(mdp, 6, 100000);
  const auto scorer = make_scorer(mdp, ScoreWeights{});
  std::vector<Preference> prefs;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const auto p = prefer(pool[i], pool[j], scorer);
      if (p.indifferent()) continue;
      Preference q = p;
      q.first = i;
      q.second = j;
      prefs.push_back(q);
    }
  }
  RewardTable model(TableShape::of(mdp), 0.99, 1.0);
  TrainConfig tc;
  tc.epochs = 200;
  Rng rng(0);
  const auto report = train(model, pool, prefs, tc, rng);
  const double loss = ranking_loss(model, pool, prefs);

  // Central differences at a random point.
  RewardTable probe(TableShape::of(mdp), 0.99, 1.0);
  std::normal_distribution<double> g(0.0, 0.3);
  for (double& v : probe.theta()) v = g(rng);
  const auto grad = ranking_subgradient(probe, pool, prefs);
  // The loss is piecewise linear, so differences are exact unless a hinge
  // kink falls inside the step; those coordinates show unequal one-sided slopes.
  const double h = 1e-5;
  const double base = ranking_loss(probe, pool, prefs);
  double err = 0.0;
  std::size_t kinks = 0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double keep = probe.theta()[i];
    probe.theta()[i] = keep + h;
    const double up = ranking_loss(probe, pool, prefs);
    probe.theta()[i] = keep - h;
    const double down = ranking_loss(probe, pool, prefs);
    probe.theta()[i] = keep;
    if (std::abs((up - base) - (base - down)) / h > 1e-6) {
      ++kinks;
      continue;
    }
    err = std::max(err, std::abs((up - down) / (2 * h) - grad[i]));
  }
  return {report.pair_accuracy == 1.0 && loss == 0.0 && err < 1e-6 && kinks < grad.size(),
          fmt("%zu trajectories, %zu pairs: accuracy %.3f, loss %.3g after %zu epochs; "
              "finite-difference error %.2g over %zu coordinates (%zu straddle a kink)",
              pool.size(), prefs.size(), report.pair_accuracy, loss, report.epochs_run, err,
              grad.size() - kinks, kinks)};
}

// 6. Static and dynamic learners solve the 7x7 dungeon.
Outcome end_to_end() {
  const ProductMdp mdp = make_task("dungeon_quest");
  const auto scorer = make_scorer(mdp, ScoreWeights{});
  Outcome out{true, ""};
  for (bool dynamic : {false, true}) {
    std::vector<double> rates;
    double slowest = 0.0;
    std::size_t episodes = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t0 = Clock::now();
      Rng rng(seed);
      const LearnerConfig cfg;
      const auto run = dynamic ? run_dynamic(mdp, scorer, cfg, rng) : run_static(mdp, scorer, cfg, rng);
      slowest = std::max(slowest, seconds_since(t0));
      episodes = std::max(episodes, run.metrics.size());
      rates.push_back(final_acceptance_rate(run.metrics, 200));
    }
    const double med = median_of(rates);
    out.pass = out.pass && med >= 0.9 && slowest < 300.0 && episodes <= 3000;
    std::string per;
    for (double r : rates) per += fmt("%.2f ", r);
    out.detail += fmt("%s median %.3f [%s] slowest %.1fs; ", dynamic ? "dynamic" : "static", med,
                      per.c_str(), slowest);
  }
  return out;
}

// 7. Distilled transition values track the reference reward on the dungeon.
Outcome scoring_validation() {
  ExperimentConfig config;
  config.env = "dungeon_quest";
  const ProductMdp mdp = make_experiment_task(config);
  Rng rng(0);
  const QTable teacher = train_teacher(mdp, config, rng);
  const auto table = distill_teacher(mdp, teacher, config.teacher, rng);
  const auto report = validate_scoring(mdp, table, config.validation, config.learner, rng);
  const double r = report.pearson_reward.value_or(NAN);
  const double rho = report.spearman_subgoals.value_or(NAN);
  const bool ok = r >= 0.6 && rho >= 0.6 &&
                  report.above_median_success > report.below_median_success;
  return {ok, fmt("pearson %.3f, spearman %.3f, success above/below median %.3f/%.3f", r, rho,
                  report.above_median_success, report.below_median_success)};
}

// 8. Distilled values speed up the 10x10 student.
Outcome transfer() {
  ExperimentConfig teacher_cfg;
  teacher_cfg.env = "iron_sword";
  const ProductMdp teacher_mdp = make_experiment_task(teacher_cfg);
  Rng trng(123);
  const QTable teacher = train_teacher(teacher_mdp, teacher_cfg, trng);
  const auto table = distill_teacher(teacher_mdp, teacher, teacher_cfg.teacher, trng);

  ExperimentConfig student_cfg;
  student_cfg.env = "iron_sword_student10";
  const ProductMdp student = make_experiment_task(student_cfg);
  std::vector<double> firsts[2];
  for (int w = 0; w < 2; ++w) {
    ScoreWeights weights{};
    weights.transition_value = w;
    const auto scorer = make_scorer(student, weights, &table);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const auto run = run_static(student, scorer, student_cfg.learner, rng);
      firsts[w].push_back(
          static_cast<double>(first_acceptance(run.metrics).value_or(run.metrics.size())));
    }
  }
  const double without = median_of(firsts[0]), with = median_of(firsts[1]);
  return {with < without, fmt("median first acceptance %.0f with distilled values, %.0f without",
                              with, without)};
}

// 9. Reruns are byte-identical and every file format round-trips.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "autopref_acceptance";
  fs::remove_all(root);
  ExperimentConfig config;
  config.env = "dungeon_quest_3x3";
  config.methods = {Method::kKnown, Method::kStatic, Method::kDynamic, Method::kLpopl};
  config.seeds = {0, 1};
  config.learner.episodes = 300;
  config.learner.iterations = 3;
  config.learner.block = 100;
  std::size_t files = 0, same = 0;
  config.output = root / "a";
  run_experiment(config);
  config.output = root / "b";
  run_experiment(config);
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    if (rel == "config.ini") continue;  // names its own output directory
    ++files;
    same += slurp(entry.path()) == slurp(root / "b" / rel);
  }

  std::size_t trips = 0, exact = 0;
  auto trip = [&](bool ok) {
    ++trips;
    exact += ok;
  };
  for (const auto& name : bundled_env_names()) {
    const ProductMdp mdp = make_task(name);
    trip(parse_dfa(serialize_dfa(mdp.dfa())) == mdp.dfa());
  }
  for (const auto& entry : fs::directory_iterator(data_dir() / "layouts")) {
    const GridLayout layout = load_layout(entry.path());
    trip(parse_layout(serialize_layout(layout)) == layout);
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    const auto ext = entry.path().extension();
    const std::string text = slurp(entry.path());
    if (ext == ".qtable") trip(serialize_q_table(parse_q_table(text)) == text);
    if (ext == ".reward") trip(serialize_reward_table(parse_reward_table(text)) == text);
    if (ext == ".csv" && entry.path().filename() != "aggregate.csv") {
      trip(format_metrics_csv(parse_metrics_csv(text)) == text);
    }
    if (ext == ".ini") trip(format_config(parse_config(text)) == text);
  }
  TransitionValueTable values("dungeon_quest", -0.25);
  values.set("q0", "key", 7, 0.1 + 0.2);
  values.set("q2", "null", 1, -1.0 / 3.0);
  trip(parse_transition_values(serialize_transition_values(values)) == values);
  fs::remove_all(root);
  return {files > 0 && same == files && exact == trips,
          fmt("%zu/%zu output files identical on rerun; %zu/%zu round-trips exact", same, files,
              exact, trips)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"convergence check", theorem_check},
      {"shaping invariance", shaping_invariance},
      {"preference dominance", dominance},
      {"reward-model separation", separation},
      {"end-to-end learning", end_to_end},
      {"scoring validation", scoring_validation},
      {"transfer speed-up", transfer},
      {"determinism and formats", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%.1fs) %s\n", i + 1, criteria[i].first,
                o.pass ? "PASS" : "FAIL", seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
