#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autopref/product.hpp"
#include "autopref/reward_model.hpp"
#include "autopref/scoring.hpp"
#include "autopref/transition_values.hpp"

namespace autopref {

/// Action values over product states. Entry (s, q, a) sits at
/// `index(s, q) * actions + a`, the same layout as a RewardTable.
class QTable {
 public:
  QTable(TableShape shape, double alpha = 0.1, double gamma = 0.95);
  static QTable for_task(const ProductMdp& mdp, double alpha = 0.1, double gamma = 0.95) {
    return QTable(TableShape::of(mdp), alpha, gamma);
  }

  const TableShape& shape() const noexcept { return shape_; }
  double alpha() const noexcept { return alpha_; }
  double gamma() const noexcept { return gamma_; }
  std::size_t num_states() const noexcept { return shape_.env_states * shape_.dfa_states; }
  std::size_t num_actions() const noexcept { return shape_.actions; }

  // `state` is a product-state index (ProductMdp::index).
  double q(std::size_t state, ActionId a) const { return values_[at(state, a)]; }
  void set(std::size_t state, ActionId a, double v) { values_[at(state, a)] = v; }
  std::span<const double> row(std::size_t state) const;
  double max_value(std::size_t state) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t at(std::size_t state, ActionId a) const;

  TableShape shape_;
  double alpha_;
  double gamma_;
  std::vector<double> values_;
};

/// Linear decay from `start` to `end` over the first `fraction` of
/// `total_episodes`, then held at `end`.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double fraction = 0.6;
  std::size_t total_episodes = 3000;

  static EpsilonSchedule constant(double eps) { return {eps, eps, 0.0, 1}; }
  double operator()(std::size_t episode) const;
};

// Q(s,a) += alpha (r + gamma max Q(s') [not terminal] - Q(s,a)).
// Throws UsageError for a non-finite reward.
void q_update(QTable& qt, std::size_t state, ActionId a, double reward,
              std::size_t next, bool terminal);

// Argmax with the lowest index winning ties. A positive `tie_tolerance`
// treats values within it as equal.
ActionId greedy_action(const QTable& qt, std::size_t state, double tie_tolerance = 0.0);
ActionId epsilon_greedy(const QTable& qt, std::size_t state, double epsilon, Rng& rng);

Policy greedy_policy(const ProductMdp& mdp, const QTable& qt);
Policy epsilon_greedy_policy(const ProductMdp& mdp, const QTable& qt, double epsilon);

/// Visit-count annealing between a teacher's transition values and the
/// ordinary Q target: beta = rho^n(q, e).
struct AnnealState {
  double rho = 0.9;
  std::size_t num_events = 0;
  std::vector<std::size_t> counts;  // (q, e) at q * num_events + e

  AnnealState() = default;
  AnnealState(const Dfa& dfa, double rho);
  std::size_t count(DfaState q, EventId e) const { return counts.at(q * num_events + e); }
};

// Blends the teacher value into the target and bumps n(q, e).
void annealed_update(QTable& qt, const ProductMdp& mdp, const TrajectoryStep& step,
                     double reward, AnnealState& anneal,
                     const TransitionValueTable& teacher);

// ---------------------------------------------------------------------------
// Rewards

/// What a product step did to the automaton.
struct TransitionContext {
  DfaState from = 0;
  DfaState to = 0;
  EventId event = kNullEvent;
  bool progress = false;         // strictly closer to acceptance
  bool out_of_order = false;     // self-loop on an event that is progress elsewhere
  bool accepting_entry = false;  // entered an accepting state
  bool premature_goal = false;   // a goal event that did not reach acceptance
};

TransitionContext classify(const Dfa& dfa, DfaState q, EventId e);

enum class RewardKind { kLearned, kKnown, kRewardMachine, kLpopl, kLpoplBase,
                        kDistillShaping, kStepCost };

std::string_view reward_kind_name(RewardKind kind);
std::optional<RewardKind> parse_reward_kind(std::string_view name);

struct KnownRewardConstants {
  double subgoal = 3.0;
  double out_of_order = -1.0;
  double goal = 9.0;
  double premature_goal = -3.0;
  double step = -0.1;
};

struct RewardMachineConstants {
  double progress = 5.0;
  double out_of_order = -1.0;
  double accept = 10.0;
  double step = -0.1;
};

struct LpoplConstants {
  double accept = 10.0;
  double step = -0.1;
};

double known_reward(const TransitionContext& c, const KnownRewardConstants& k = {});
double rm_reward(const TransitionContext& c, const RewardMachineConstants& k = {});
// Unshaped base of lpopl_reward.
double lpopl_base_reward(const TransitionContext& c, const LpoplConstants& k = {});
double lpopl_reward(const Dfa& dfa, const TransitionContext& c, double gamma,
                    const LpoplConstants& k = {});
double distill_shaping_reward(const TransitionContext& c);
// -0.1 per step and nothing else; episodes still end on acceptance.
double step_cost_reward(const TransitionContext& c);

using RewardFn = std::function<double(const TrajectoryStep&)>;

struct RewardSource {
  RewardKind kind = RewardKind::kKnown;
  KnownRewardConstants known;
  RewardMachineConstants rm;
  LpoplConstants lpopl;
  double gamma = 0.95;                   // lpopl potential discount
  const RewardTable* learned = nullptr;  // kLearned only; must outlive the fn
};

RewardFn make_reward_fn(const ProductMdp& mdp, const RewardSource& source);

// ---------------------------------------------------------------------------
// Oracles

/// Exact Bellman iteration on a deterministic product MDP. Accepting states
/// are terminal. Iterates until the sup-norm residual is below `tol`.
QTable value_iteration(const ProductMdp& mdp, const RewardFn& reward, double gamma,
                       double tol = 1e-10);

// Discounted value of following `qt` greedily (tie tolerance 1e-9).
std::vector<double> evaluate_greedy_policy(const ProductMdp& mdp, const QTable& qt,
                                           const RewardFn& reward, double gamma,
                                           double tol = 1e-10);

// ---------------------------------------------------------------------------
// Training loops

struct EpisodeMetrics {
  std::size_t episode = 0;
  std::size_t steps = 0;
  std::size_t cumulative_steps = 0;
  double reference_reward = 0.0;  // undiscounted known_reward
  bool accepted = false;
  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

struct LearnerConfig {
  double alpha = 0.1;
  double gamma = 0.95;
  EpsilonSchedule epsilon;  // total_episodes is overwritten by `episodes`
  std::size_t episodes = 3000;
  std::optional<std::size_t> horizon;  // defaults to the environment's

  // Preference-based methods.
  std::size_t init_trajectories = 1000;
  PairingPolicy pairing;
  double margin = 1.0;
  double reward_gamma = 0.99;  // discount inside trajectory returns
  TrainConfig reward_train;
  // After each training round the learned table is shifted to a cost with
  // this offset; unset keeps the raw table.
  std::optional<double> cost_offset = 0.1;

  // Dynamic loop.
  std::size_t iterations = 20;
  std::size_t block = 200;
  std::size_t window = 3;
  double stability_tol = 0.01;
  std::size_t trajectories_per_iteration = 50;
  std::size_t cross_pairs = 10;  // comparisons of each new trajectory with older ones

  // Annealed updates, used when a teacher table is supplied.
  double rho = 0.9;

  // Q snapshots taken after these fractions of `episodes`.
  std::vector<double> snapshot_fractions;
};

struct RunResult {
  QTable policy;
  std::vector<EpisodeMetrics> metrics;
  std::optional<RewardTable> reward;
  std::vector<TrainReport> train_reports;
  std::vector<QTable> snapshots;
  std::size_t iterations = 0;
};

/// Q-learning against a fixed reward source.
RunResult run_baseline(const ProductMdp& mdp, const RewardSource& source,
                       const LearnerConfig& config, Rng& rng);

/// Learns a reward once from random-policy preferences, then Q-learns on it.
/// With `teacher` set, updates are annealed toward the teacher's values.
RunResult run_static(const ProductMdp& mdp, const Scorer& scorer,
                     const LearnerConfig& config, Rng& rng,
                     const TransitionValueTable* teacher = nullptr);

/// Alternates on-policy preference collection, reward refinement and blocks
/// of Q-learning until the block return settles or the budget runs out.
RunResult run_dynamic(const ProductMdp& mdp, const Scorer& scorer,
                      const LearnerConfig& config, Rng& rng,
                      const TransitionValueTable* teacher = nullptr);

// Policy snapshot: same layout as the reward table, tagged `q-table` with
// `alpha` and `gamma` header lines.
std::string serialize_q_table(const QTable& qt);
QTable parse_q_table(std::string_view text);
void save_q_table(const QTable& qt, const std::filesystem::path& path);
QTable load_q_table(const std::filesystem::path& path);

}  // namespace autopref
