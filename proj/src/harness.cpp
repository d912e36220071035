#include "autopref/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "autopref/error.hpp"
#include "text_io.hpp"

namespace autopref {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::kStatic, "static"},
    {Method::kDynamic, "dynamic"},
    {Method::kKnown, "known"},
    {Method::kRewardMachine, "reward_machine"},
    {Method::kLpopl, "lpopl"},
    {Method::kDistillShaping, "distill_shaping"},
    {Method::kStaticPrefPlan, "static_pref_plan"},
    {Method::kDynamicPrefPlan, "dynamic_pref_plan"},
}};

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& [k, n] : kMethodNames) out.push_back(k);
    return out;
  }();
  return methods;
}

bool is_preference_method(Method m) {
  return m == Method::kStatic || m == Method::kDynamic || needs_transition_values(m);
}

bool needs_transition_values(Method m) {
  return m == Method::kStaticPrefPlan || m == Method::kDynamicPrefPlan;
}

EnvParams env_params(const ExperimentConfig& config) {
  EnvParams p;
  p.horizon = config.horizon;
  p.student_seed = config.student_seed;
  return p;
}

ProductMdp make_experiment_task(const ExperimentConfig& config) {
  return make_task(config.env, env_params(config));
}

// ---------------------------------------------------------------------------
// Runs

RunResult run_method(const ProductMdp& mdp, Method method, const ExperimentConfig& config,
                     const TransitionValueTable* values, Rng& rng) {
  RewardSource src;
  src.known = config.known;
  src.rm = config.rm;
  src.lpopl = config.lpopl;
  switch (method) {
    case Method::kKnown: src.kind = RewardKind::kKnown; break;
    case Method::kRewardMachine: src.kind = RewardKind::kRewardMachine; break;
    case Method::kLpopl: src.kind = RewardKind::kLpopl; break;
    case Method::kDistillShaping: src.kind = RewardKind::kDistillShaping; break;
    default: src.kind = RewardKind::kLearned; break;
  }
  if (src.kind != RewardKind::kLearned) return run_baseline(mdp, src, config.learner, rng);

  if (needs_transition_values(method) && !values) {
    throw ConfigError("method '" + std::string(method_name(method)) +
                      "' needs a transition-value table");
  }
  const bool combined = values && config.weights.transition_value > 0.0;
  check_weights(config.weights, mdp.env().diameter());
  const Scorer scorer = make_scorer(mdp, config.weights, combined ? values : nullptr);
  const TransitionValueTable* teacher = needs_transition_values(method) ? values : nullptr;
  if (method == Method::kStatic || method == Method::kStaticPrefPlan) {
    return run_static(mdp, scorer, config.learner, rng, teacher);
  }
  return run_dynamic(mdp, scorer, config.learner, rng, teacher);
}

std::string metrics_csv_header() {
  return "episode,steps,cumulative_steps,reference_reward,accepted";
}

std::string format_metrics_csv(const std::vector<EpisodeMetrics>& metrics) {
  std::ostringstream out;
  out << metrics_csv_header() << '\n';
  for (const auto& m : metrics) {
    out << m.episode << ',' << m.steps << ',' << m.cumulative_steps << ','
        << detail::format_double(m.reference_reward) << ',' << (m.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpisodeMetrics>& metrics) {
  detail::write_file(path, format_metrics_csv(metrics));
}

std::vector<EpisodeMetrics> parse_metrics_csv(std::string_view text) {
  std::vector<EpisodeMetrics> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != metrics_csv_header()) throw ParseError(1, 1, "unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ParseError(line_no, 1, "expected 5 columns");
    EpisodeMetrics m;
    m.episode = detail::parse_index(cells[0], line_no);
    m.steps = detail::parse_index(cells[1], line_no);
    m.cumulative_steps = detail::parse_index(cells[2], line_no);
    m.reference_reward = detail::parse_double(cells[3], line_no);
    if (cells[4] != "0" && cells[4] != "1") throw ParseError(line_no, 1, "accepted must be 0 or 1");
    m.accepted = cells[4] == "1";
    out.push_back(m);
  }
  return out;
}

std::string format_aggregate_csv(const std::vector<std::vector<EpisodeMetrics>>& runs) {
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.size());
  std::ostringstream out;
  out << "episode,runs,steps_mean,steps_std,cumulative_steps_mean,cumulative_steps_std,"
         "reference_reward_mean,reference_reward_std,accepted_mean,accepted_std\n";
  std::vector<double> steps, cumulative, reward, accepted;
  for (std::size_t e = 0; e < longest; ++e) {
    steps.clear();
    cumulative.clear();
    reward.clear();
    accepted.clear();
    for (const auto& r : runs) {
      if (e >= r.size()) continue;
      steps.push_back(static_cast<double>(r[e].steps));
      cumulative.push_back(static_cast<double>(r[e].cumulative_steps));
      reward.push_back(r[e].reference_reward);
      accepted.push_back(r[e].accepted ? 1.0 : 0.0);
    }
    out << e << ',' << steps.size();
    for (const auto* col : {&steps, &cumulative, &reward, &accepted}) {
      out << ',' << detail::format_double(mean(*col)) << ','
          << detail::format_double(stddev(*col));
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::size_t, double>> reward_per_cumulative_steps(
    const std::vector<EpisodeMetrics>& metrics) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(metrics.size());
  std::size_t steps = 0;
  double reward = 0.0;
  for (const auto& m : metrics) {
    steps += m.steps;
    reward += m.reference_reward;
    out.emplace_back(steps, reward);
  }
  return out;
}

double final_acceptance_rate(const std::vector<EpisodeMetrics>& metrics, std::size_t window) {
  if (metrics.empty() || window == 0) return 0.0;
  const std::size_t n = std::min(window, metrics.size());
  std::size_t hits = 0;
  for (std::size_t i = metrics.size() - n; i < metrics.size(); ++i) hits += metrics[i].accepted;
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::optional<std::size_t> first_acceptance(const std::vector<EpisodeMetrics>& metrics) {
  for (const auto& m : metrics) {
    if (m.accepted) return m.episode;
  }
  return std::nullopt;
}

bool ExperimentResult::ok() const {
  return std::none_of(runs.begin(), runs.end(), [](const RunSummary& r) { return r.error; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  check_config(config);
  const ProductMdp mdp = make_experiment_task(config);

  std::optional<TransitionValueTable> values;
  if (config.transition_values) {
    values = load_transition_values(*config.transition_values);
    if (values->dfa_name() != mdp.dfa().name()) {
      throw ConfigError("scoring.transition_values: table was distilled for automaton '" +
                        values->dfa_name() + "', task uses '" + mdp.dfa().name() + "'");
    }
  }

  ExperimentResult result;
  std::filesystem::create_directories(config.output);
  detail::write_file(config.output / "config.ini", format_config(config));
  for (Method method : config.methods) {
    const std::filesystem::path dir = config.output / std::string(method_name(method));
    std::vector<std::vector<EpisodeMetrics>> runs;
    for (std::uint64_t seed : config.seeds) {
      RunSummary summary;
      summary.method = method;
      summary.seed = seed;
      const std::string stem = "seed_" + std::to_string(seed);
      try {
        Rng rng(seed);
        RunResult run = run_method(mdp, method, config, values ? &*values : nullptr, rng);
        write_metrics_csv(dir / (stem + ".csv"), run.metrics);
        if (config.snapshots) {
          save_q_table(run.policy, dir / (stem + ".qtable"));
          if (run.reward) save_reward_table(*run.reward, dir / (stem + ".reward"));
        }
        summary.episodes = run.metrics.size();
        summary.iterations = run.iterations;
        summary.final_acceptance = final_acceptance_rate(run.metrics);
        double total = 0.0;
        for (const auto& m : run.metrics) total += m.reference_reward;
        summary.mean_reference_reward =
            run.metrics.empty() ? 0.0 : total / static_cast<double>(run.metrics.size());
        summary.first_acceptance = first_acceptance(run.metrics);
        runs.push_back(std::move(run.metrics));
      } catch (const DivergenceError& e) {
        summary.error = e.what();
      }
      result.runs.push_back(summary);
    }
    if (!runs.empty()) detail::write_file(dir / "aggregate.csv", format_aggregate_csv(runs));
  }
  detail::write_file(config.output / "summary.txt", format_summary(config, result));
  return result;
}

std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result) {
  std::ostringstream out;
  out << "environment: " << config.env << '\n';
  out << "reference reward: known_reward (subgoal " << detail::format_double(config.known.subgoal)
      << ", out-of-order " << detail::format_double(config.known.out_of_order) << ", goal "
      << detail::format_double(config.known.goal) << ", premature goal "
      << detail::format_double(config.known.premature_goal) << ", step "
      << detail::format_double(config.known.step) << "), used for evaluation only\n\n";
  out << "method seed episodes iterations final_acceptance mean_reference_reward "
         "first_acceptance status\n";
  for (const auto& r : result.runs) {
    out << method_name(r.method) << ' ' << r.seed << ' ' << r.episodes << ' ' << r.iterations
        << ' ' << detail::format_double(r.final_acceptance) << ' '
        << detail::format_double(r.mean_reference_reward) << ' '
        << (r.first_acceptance ? std::to_string(*r.first_acceptance) : std::string("never"))
        << ' ' << (r.error ? "FAILED: " + *r.error : std::string("ok")) << '\n';
  }
  out << "\nper method (median over seeds)\n";
  for (Method m : config.methods) {
    std::vector<double> acc, first;
    std::size_t failed = 0;
    for (const auto& r : result.runs) {
      if (r.method != m) continue;
      if (r.error) {
        ++failed;
        continue;
      }
      acc.push_back(r.final_acceptance);
      first.push_back(r.first_acceptance ? static_cast<double>(*r.first_acceptance)
                                         : static_cast<double>(r.episodes));
    }
    out << method_name(m) << ": ";
    if (acc.empty()) {
      out << "no completed runs";
    } else {
      out << "final_acceptance " << detail::format_double(median(acc))
          << ", first_acceptance " << detail::format_double(median(first));
    }
    if (failed) out << ", " << failed << " failed (partial outputs)";
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Teacher and distillation

QTable train_teacher(const ProductMdp& mdp, const ExperimentConfig& config, Rng& rng) {
  RewardSource src;
  src.kind = config.teacher.reward;
  src.known = config.known;
  src.rm = config.rm;
  src.lpopl = config.lpopl;
  LearnerConfig learner = config.learner;
  learner.episodes = config.teacher.episodes;
  return run_baseline(mdp, src, learner, rng).policy;
}

TransitionValueTable distill_teacher(const ProductMdp& mdp, const QTable& teacher,
                                     const TeacherSettings& settings, Rng& rng) {
  TeacherConfig tc;
  tc.epsilon = settings.epsilon;
  tc.reward.kind = settings.reward;
  const ExperienceSet experience =
      collect_teacher_experience(mdp, teacher, settings.experience_episodes, rng, tc);
  return distill_values(mdp, experience, teacher, settings.default_value);
}

}  // namespace autopref
