#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "autopref/product.hpp"
#include "autopref/scoring.hpp"

namespace autopref {

/// Dimensions of a table indexed by (env state, automaton state, action).
struct TableShape {
  std::size_t env_states = 0;
  std::size_t dfa_states = 0;
  std::size_t actions = 0;

  std::size_t size() const noexcept { return env_states * dfa_states * actions; }
  std::size_t index(std::size_t s, std::size_t q, std::size_t a) const noexcept {
    return (s * dfa_states + q) * actions + a;
  }
  bool contains(std::size_t s, std::size_t q, std::size_t a) const noexcept {
    return s < env_states && q < dfa_states && a < actions;
  }
  static TableShape of(const ProductMdp& mdp) {
    return {mdp.env().num_states(), mdp.dfa().num_states(), mdp.num_actions()};
  }
  friend bool operator==(const TableShape&, const TableShape&) = default;
};

/// Learned reward r(s, q, a) as a zero-initialized table.
class RewardTable {
 public:
  RewardTable(TableShape shape, double gamma = 0.95, double margin = 1.0);

  const TableShape& shape() const noexcept { return shape_; }
  double gamma() const noexcept { return gamma_; }
  double margin() const noexcept { return margin_; }

  // Both throw UsageError for an index outside the shape.
  double reward(std::size_t s, std::size_t q, std::size_t a) const;
  void set(std::size_t s, std::size_t q, std::size_t a, double value);

  std::span<double> theta() noexcept { return theta_; }
  std::span<const double> theta() const noexcept { return theta_; }

  friend bool operator==(const RewardTable&, const RewardTable&) = default;

 private:
  TableShape shape_;
  double gamma_;
  double margin_;
  std::vector<double> theta_;
};

// Discounted return sum_t gamma^t r(s_t, q_t, a_t).
double trajectory_return(const RewardTable& model, const Trajectory& traj);

// Preferences index into `pool`. Indifferent entries are rejected.
double ranking_loss(const RewardTable& model, std::span<const Trajectory> pool,
                    std::span<const Preference> prefs);

// Dense subgradient of ranking_loss with respect to theta. At a hinge kink the
// pair counts as inactive.
std::vector<double> ranking_subgradient(const RewardTable& model,
                                        std::span<const Trajectory> pool,
                                        std::span<const Preference> prefs);

// Fraction of pairs with R(preferred) > R(rejected).
double pair_accuracy(const RewardTable& model, std::span<const Trajectory> pool,
                     std::span<const Preference> prefs);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  double l2 = 0.0;  // theta shrinks by lr*l2 after every epoch
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  double pair_accuracy = 0.0;
  std::size_t best_epoch = 0;  // epoch whose parameters were kept, 0 = the input
};

/// Per-pair subgradient descent over shuffled pairs. Each step is capped at
/// the size that lifts the pair exactly onto its margin. The model keeps the
/// parameters with the lowest objective (loss plus l2 penalty) seen at an
/// epoch boundary, so a call never leaves the loss higher than it found it.
/// Stops early once every pair is separated by the margin. Throws DivergenceError when the loss
/// stops being finite.
TrainReport train(RewardTable& model, std::span<const Trajectory> pool,
                  std::span<const Preference> prefs, const TrainConfig& config,
                  Rng& rng);

/// Ranking fixed-length trajectories leaves the reward level free. Pins it by
/// shifting every entry so the largest equals -offset, which turns the table
/// into a strict cost. Throws UsageError unless offset >= 0.
void shift_to_cost(RewardTable& model, double offset);

// Text format:
//   reward-table
//   shape <env-states> <dfa-states> <actions>
//   gamma <g>
//   margin <m>
//   <s> <q> <a> <value>     one line per entry
std::string serialize_reward_table(const RewardTable& model);
RewardTable parse_reward_table(std::string_view text);
void save_reward_table(const RewardTable& model, const std::filesystem::path& path);
RewardTable load_reward_table(const std::filesystem::path& path);

}  // namespace autopref
