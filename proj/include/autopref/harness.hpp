#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autopref/distill.hpp"
#include "autopref/learner.hpp"
#include "autopref/scoring.hpp"
#include "autopref/stats.hpp"

namespace autopref {

enum class Method {
  kStatic,
  kDynamic,
  kKnown,
  kRewardMachine,
  kLpopl,
  kDistillShaping,
  kStaticPrefPlan,
  kDynamicPrefPlan,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();
bool is_preference_method(Method m);
bool needs_transition_values(Method m);

struct TeacherSettings {
  RewardKind reward = RewardKind::kStepCost;
  std::size_t episodes = 3000;             // teacher Q-learning episodes
  std::size_t experience_episodes = 200;   // rollouts distilled afterwards
  double epsilon = 0.1;                    // exploration while collecting
  double default_value = 0.0;              // value of unseen transitions
};

struct ValidationSettings {
  std::size_t trajectories = 200;
  std::size_t rollouts = 50;
  double policy_epsilon = 0.1;  // exploration of every trained-policy rollout
};

struct ConvergenceCheckConfig {
  double epsilon = 0.05;
  double delta0 = 0.05;
  double confidence = 0.9;     // required fraction of passing trials
  std::size_t horizon = 8;
  std::size_t trials = 10;
  std::size_t episodes = 3000;
  double exploration = 0.1;    // persistent epsilon floor
  std::size_t max_epochs = 2000;
  std::size_t max_trajectories = 1'000'000;
};

struct ExperimentConfig {
  std::string env = "chain3";
  std::vector<Method> methods{Method::kKnown};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output = "results";
  std::optional<std::size_t> horizon;
  std::uint64_t student_seed = 0;

  ScoreWeights weights{10.0, 0.1, 1.0};
  std::optional<std::filesystem::path> transition_values;

  LearnerConfig learner;
  KnownRewardConstants known;
  RewardMachineConstants rm;
  LpoplConstants lpopl;

  TeacherSettings teacher;
  ValidationSettings validation;
  ConvergenceCheckConfig theorem;
  bool snapshots = true;
};

/// INI text with sections [experiment], [scoring], [learner],
/// [reward_model], [dynamic], [anneal], [rewards], [teacher], [validate] and
/// [theorem]. Unknown keys and malformed values raise ConfigError naming the
/// offending field.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
void check_config(const ExperimentConfig& config);
// Overrides one `section.key` entry; the result must still pass check_config.
void set_config_value(ExperimentConfig& config, std::string_view path, std::string_view value);
// The value as format_config writes it.
std::string get_config_value(const ExperimentConfig& config, std::string_view path);
// The effective configuration as INI text; parse_config reads it back.
std::string format_config(const ExperimentConfig& config);

EnvParams env_params(const ExperimentConfig& config);
ProductMdp make_experiment_task(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Single runs

RunResult run_method(const ProductMdp& mdp, Method method, const ExperimentConfig& config,
                     const TransitionValueTable* values, Rng& rng);

std::string metrics_csv_header();
std::string format_metrics_csv(const std::vector<EpisodeMetrics>& metrics);
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpisodeMetrics>& metrics);
std::vector<EpisodeMetrics> parse_metrics_csv(std::string_view text);

/// Per-episode mean and sample std across runs. Runs may differ in length;
/// each row reports how many runs reached that episode.
std::string format_aggregate_csv(const std::vector<std::vector<EpisodeMetrics>>& runs);

// Running totals (cumulative steps, cumulative reference reward).
std::vector<std::pair<std::size_t, double>> reward_per_cumulative_steps(
    const std::vector<EpisodeMetrics>& metrics);

struct RunSummary {
  Method method = Method::kKnown;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  std::size_t iterations = 0;
  double final_acceptance = 0.0;   // over the last 200 episodes (or all)
  double mean_reference_reward = 0.0;
  std::optional<std::size_t> first_acceptance;
  std::optional<std::string> error;
};

// Acceptance rate of the last `window` episodes.
double final_acceptance_rate(const std::vector<EpisodeMetrics>& metrics,
                             std::size_t window = 200);
std::optional<std::size_t> first_acceptance(const std::vector<EpisodeMetrics>& metrics);

struct ExperimentResult {
  std::vector<RunSummary> runs;
  bool ok() const;
};

/// Runs every (method, seed) pair and writes:
///   <out>/<method>/seed_<n>.csv, <out>/<method>/aggregate.csv,
///   <out>/<method>/seed_<n>.qtable (and .reward for learned rewards),
///   <out>/summary.txt and <out>/config.ini.
/// A diverging run is recorded as failed; the others still complete.
ExperimentResult run_experiment(const ExperimentConfig& config);
std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result);

// ---------------------------------------------------------------------------
// Teacher and distillation

QTable train_teacher(const ProductMdp& mdp, const ExperimentConfig& config, Rng& rng);
TransitionValueTable distill_teacher(const ProductMdp& mdp, const QTable& teacher,
                                     const TeacherSettings& settings, Rng& rng);

// ---------------------------------------------------------------------------
// Scoring validation

struct EndpointRecord {
  double score = 0.0;
  double success_rate = 0.0;   // rollouts from the endpoint that reach acceptance
  double future_reward = 0.0;  // mean reference reward of those rollouts
};

struct ValidationReport {
  std::vector<double> scores;             // transition-value score per trajectory
  std::vector<double> reference_rewards;  // known_reward total per trajectory
  std::vector<double> subgoals;           // completed subgoals per trajectory
  std::vector<EndpointRecord> endpoints;

  std::optional<double> pearson_reward;
  std::optional<double> spearman_subgoals;
  std::optional<LinearFit> success_fit;
  std::optional<LinearFit> future_reward_fit;
  double above_median_success = 0.0;
  double below_median_success = 0.0;
  std::size_t above_count = 0;
  std::size_t below_count = 0;
  std::vector<std::string> notes;  // degenerate-variance flags and the like
};

/// Builds a mixed pool (a third random, a third from policy snapshots at 25%
/// and 50% of training, a third from the final policy), scores it with the
/// transition values and relates the scores to reference reward, subgoal
/// counts and the success of rollouts continued from each endpoint.
ValidationReport validate_scoring(const ProductMdp& mdp, const TransitionValueTable& values,
                                  const ValidationSettings& settings,
                                  const LearnerConfig& training, Rng& rng);
std::string format_validation_report(const ValidationReport& report);

// ---------------------------------------------------------------------------
// Convergence property check

/// Every trajectory from the initial state that either reaches acceptance
/// within `horizon` steps or runs exactly `horizon` steps. Throws UsageError
/// when more than `limit` would be produced.
std::vector<Trajectory> enumerate_trajectories(const ProductMdp& mdp, std::size_t horizon,
                                               std::size_t limit);

struct ConvergenceTrial {
  std::uint64_t seed = 0;
  TrainReport train;
  double policy_value = 0.0;
  double gap = 0.0;
  bool passed = false;
};

struct ConvergenceReport {
  std::size_t trajectories = 0;
  std::size_t pairs_total = 0;
  std::size_t pairs_kept = 0;
  bool vacuous = false;
  double optimal_value = 0.0;
  std::vector<ConvergenceTrial> trials;
  std::size_t trials_passed = 0;
  bool passed = false;
};

ConvergenceReport check_convergence_theorem(const ProductMdp& mdp,
                                            const ConvergenceCheckConfig& config,
                                            const LearnerConfig& learner,
                                            std::uint64_t seed);
std::string format_convergence_report(const ConvergenceReport& report,
                                      const ConvergenceCheckConfig& config);

}  // namespace autopref
