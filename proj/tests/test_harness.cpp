#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace autopref;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("autopref_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

ExperimentConfig small_chain3(const fs::path& out) {
  ExperimentConfig c;
  c.env = "chain3";
  c.methods = {Method::kKnown};
  c.seeds = {0};
  c.output = out;
  c.learner.episodes = 400;
  return c;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("format and parse round-trip") {
  ExperimentConfig c;
  c.env = "dungeon_quest";
  c.methods = {Method::kStatic, Method::kDynamic, Method::kLpopl};
  c.seeds = {3, 1, 4};
  c.learner.alpha = 0.125;
  c.weights.transition_value = 0.0;
  c.learner.cost_offset.reset();
  c.horizon = 77;
  const std::string text = format_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.methods == c.methods);
  CHECK(back.seeds == c.seeds);
  CHECK_FALSE(back.learner.cost_offset.has_value());
  CHECK(back.horizon == std::optional<std::size_t>(77));
  CHECK(format_config(parse_config(format_config({}))) == format_config({}));
}

TEST_CASE("errors name the field") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[experiment]\nseeds =\n").find("experiment.seeds") != std::string::npos);
  CHECK(message("[learner]\nalpha = 2\n").find("learner.alpha") != std::string::npos);
  CHECK(message("[learner]\nbogus = 1\n").find("learner.bogus") != std::string::npos);
  CHECK(message("[experiment]\nmethods = nope\n").find("experiment.methods") !=
        std::string::npos);
  CHECK(message("[experiment]\nmethods = static_pref_plan\n").find("transition_values") !=
        std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
}

TEST_CASE("set and get single values") {
  ExperimentConfig c;
  set_config_value(c, "learner.episodes", "123");
  CHECK(c.learner.episodes == 123);
  CHECK(get_config_value(c, "learner.episodes") == "123");
  set_config_value(c, "experiment.seeds", "5, 6");
  CHECK(c.seeds == std::vector<std::uint64_t>{5, 6});
  CHECK_THROWS_AS(set_config_value(c, "learner.nothing", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "learner.gamma", "1.5"), ConfigError);
  CHECK(c.learner.gamma == 0.95);  // a rejected value leaves the config alone
  CHECK_THROWS_AS(get_config_value(c, "nowhere.key"), ConfigError);
}

TEST_CASE("method names") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK_FALSE(parse_method("q_learning").has_value());
  CHECK(needs_transition_values(Method::kDynamicPrefPlan));
  CHECK_FALSE(needs_transition_values(Method::kStatic));
  CHECK(is_preference_method(Method::kStatic));
  CHECK_FALSE(is_preference_method(Method::kKnown));
}

}  // TEST_SUITE

TEST_SUITE("harness") {

TEST_CASE("metrics CSV") {
  const std::vector<EpisodeMetrics> rows{{0, 10, 10, 1.0, false}, {1, 5, 15, 2.5, true}};
  const std::string text = format_metrics_csv(rows);
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  CHECK(header == "episode,steps,cumulative_steps,reference_reward,accepted");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == rows.size());
  CHECK(parse_metrics_csv(text) == rows);
  CHECK_THROWS_AS(parse_metrics_csv("episode,steps\n"), ParseError);
}

TEST_CASE("reward per cumulative steps") {
  const std::vector<EpisodeMetrics> rows{{0, 10, 10, 1.0, false}, {1, 5, 15, 2.0, true}};
  const auto curve = reward_per_cumulative_steps(rows);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0] == std::pair<std::size_t, double>{10, 1.0});
  CHECK(curve[1] == std::pair<std::size_t, double>{15, 3.0});
  CHECK(reward_per_cumulative_steps({}).empty());
  CHECK(reward_per_cumulative_steps({rows[0]}).size() == 1);
}

TEST_CASE("acceptance summaries") {
  std::vector<EpisodeMetrics> rows(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].episode = i;
    rows[i].accepted = i >= 6;
  }
  CHECK(first_acceptance(rows) == std::optional<std::size_t>(6));
  CHECK(final_acceptance_rate(rows, 4) == 1.0);
  CHECK(final_acceptance_rate(rows, 100) == 0.4);
  CHECK_FALSE(first_acceptance({}).has_value());
}

TEST_CASE("known reward on chain3 finishes every late episode") {
  const fs::path out = scratch("known");
  const auto result = run_experiment(small_chain3(out));
  REQUIRE(result.ok());
  const auto rows = parse_metrics_csv(slurp(out / "known" / "seed_0.csv"));
  REQUIRE(rows.size() == 400);
  for (std::size_t i = rows.size() - 100; i < rows.size(); ++i) CHECK(rows[i].accepted);
  CHECK(fs::exists(out / "summary.txt"));
  CHECK(fs::exists(out / "config.ini"));
  CHECK(fs::exists(out / "known" / "seed_0.qtable"));
  CHECK(parse_config(slurp(out / "config.ini")).learner.episodes == 400);
}

TEST_CASE("reruns are byte-identical and aggregates are exact means") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  auto config = small_chain3(a);
  config.methods = {Method::kKnown, Method::kStatic};
  config.seeds = {1, 2, 3};
  config.horizon = 8;
  config.learner.episodes = 150;
  REQUIRE(run_experiment(config).ok());
  config.output = b;
  REQUIRE(run_experiment(config).ok());

  for (const char* method : {"known", "static"}) {
    CAPTURE(method);
    std::vector<std::vector<EpisodeMetrics>> runs;
    for (int seed : {1, 2, 3}) {
      const std::string file = "seed_" + std::to_string(seed) + ".csv";
      const std::string first = slurp(a / method / file);
      CHECK(first == slurp(b / method / file));
      runs.push_back(parse_metrics_csv(first));
    }
    const std::string agg = slurp(a / method / "aggregate.csv");
    CHECK(agg == format_aggregate_csv(runs));
    std::istringstream in(agg);
    std::string line;
    std::getline(in, line);
    for (std::size_t e = 0; std::getline(in, line); ++e) {
      const auto cells = split(line);
      REQUIRE(cells.size() == 10);
      double sum = 0.0;
      for (const auto& r : runs) sum += r[e].reference_reward;
      CHECK(std::stod(cells[6]) == sum / 3.0);
    }
  }
}

TEST_CASE("aggregate tolerates runs of different length") {
  std::vector<EpisodeMetrics> one{{0, 4, 4, 1.0, true}, {1, 4, 8, 3.0, true}};
  std::vector<EpisodeMetrics> two{{0, 2, 2, 2.0, false}};
  std::istringstream in(format_aggregate_csv({one, two}));
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(split(row0)[1] == "2");
  CHECK(split(row1)[1] == "1");
  CHECK(std::stod(split(row0)[6]) == 1.5);
  CHECK(std::stod(split(row1)[7]) == 0.0);
}

TEST_CASE("empty seeds are a configuration error") {
  auto config = small_chain3(scratch("noseeds"));
  config.seeds.clear();
  CHECK_THROWS_AS(check_config(config), ConfigError);
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("validation") {

TEST_CASE("scores equal to the reference reward correlate perfectly") {
  const auto& mdp = fx::task("dungeon_quest");
  const Dfa& d = mdp.dfa();
  // Value of each automaton transition = its reference reward.
  TransitionValueTable values(d.name(), 0.0);
  for (DfaState q = 0; q < d.num_states(); ++q) {
    for (EventId e = 0; e < d.num_events(); ++e) {
      values.set(d.state_name(q), d.event_name(e), 1, known_reward(classify(d, q, e)));
    }
  }
  ValidationSettings settings;
  settings.trajectories = 60;
  settings.rollouts = 5;
  LearnerConfig training;
  training.episodes = 300;
  Rng rng(3);
  const auto report = validate_scoring(mdp, values, settings, training, rng);
  REQUIRE(report.pearson_reward.has_value());
  CHECK(*report.pearson_reward == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.scores.size() == 60);
  CHECK(report.endpoints.size() == 60);
  CHECK(report.above_count + report.below_count <= 60);
  CHECK(format_validation_report(report).find("pearson") != std::string::npos);
}

TEST_CASE("constant scores are flagged") {
  const auto& mdp = fx::task("dungeon_quest");
  const TransitionValueTable flat(mdp.dfa().name(), 0.0);
  ValidationSettings settings;
  settings.trajectories = 30;
  settings.rollouts = 2;
  LearnerConfig training;
  training.episodes = 100;
  Rng rng(1);
  const auto report = validate_scoring(mdp, flat, settings, training, rng);
  CHECK_FALSE(report.pearson_reward.has_value());
  CHECK_FALSE(report.spearman_subgoals.has_value());
  CHECK_FALSE(report.notes.empty());
}

}  // TEST_SUITE

TEST_SUITE("convergence check") {

TEST_CASE("trajectory enumeration") {
  const auto& mdp = fx::chain3();
  const auto all = enumerate_trajectories(mdp, 3, 1000);
  // 2^3 action strings, minus the ones cut short by acceptance: RRR is the
  // only way to accept within three steps.
  CHECK(all.size() == 8);
  std::size_t accepted = 0;
  for (const auto& t : all) accepted += t.terminal_accepted;
  CHECK(accepted == 1);
  CHECK_THROWS_AS(enumerate_trajectories(mdp, 12, 100), UsageError);
}

TEST_CASE("chain3 passes, and degenerate settings are reported") {
  const auto& mdp = fx::chain3();
  ConvergenceCheckConfig cfg;
  cfg.trials = 3;
  cfg.horizon = 6;
  LearnerConfig learner;
  const auto report = check_convergence_theorem(mdp, cfg, learner, 0);
  CHECK(report.passed);
  CHECK_FALSE(report.vacuous);
  CHECK(report.trials.size() == 3);
  CHECK(report.pairs_kept <= report.pairs_total);

  ConvergenceCheckConfig strict = cfg;
  strict.epsilon = 0.0;
  const auto zero = check_convergence_theorem(mdp, strict, learner, 0);
  CHECK(zero.trials.size() == 3);  // runs to completion whatever the verdict
  CHECK_FALSE(format_convergence_report(zero, strict).empty());

  ConvergenceCheckConfig wide = cfg;
  wide.delta0 = 1e9;
  const auto vacuous = check_convergence_theorem(mdp, wide, learner, 0);
  CHECK(vacuous.vacuous);
  CHECK(vacuous.pairs_kept == 0);
  CHECK(format_convergence_report(vacuous, wide).find("vacuous") != std::string::npos);
}

}  // TEST_SUITE
