#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "autopref/product.hpp"
#include "autopref/transition_values.hpp"

namespace autopref {

// Scores closer than this are a tie.
inline constexpr double kTieTolerance = 1e-9;

struct ScoreWeights {
  double subgoal = 10.0;           // w_s
  double distance = 0.1;           // w_d
  double transition_value = 0.0;   // w_q
};

// Throws UsageError on negative weights or when subgoal completion does not
// dominate distance: w_s > w_d * d_max.
void check_weights(const ScoreWeights& w, int d_max);

/// Subgoals completed in order: the automaton distance-to-acceptance removed
/// between the start and the end of the trajectory.
std::size_t completed_subgoals(const ProductMdp& mdp, const Trajectory& traj);

/// Manhattan distance from the final position to the nearest cell of any
/// progress event of the final automaton state; 0 once accepted.
double distance_to_next_subgoal(const ProductMdp& mdp, const Trajectory& traj);

double subtask_score(const ProductMdp& mdp, const Trajectory& traj,
                     const ScoreWeights& w);

// Sum of distilled values over the automaton trace, null steps included.
double transition_value_score(const ProductMdp& mdp, const Trajectory& traj,
                              const TransitionValueTable& values);

double combined_score(const ProductMdp& mdp, const Trajectory& traj,
                      const TransitionValueTable& values, const ScoreWeights& w);

using Scorer = std::function<double(const Trajectory&)>;

// Subtask scorer when `values` is null, combined scorer otherwise.
Scorer make_scorer(const ProductMdp& mdp, const ScoreWeights& w,
                   const TransitionValueTable* values = nullptr);

enum class Winner { kFirst, kSecond, kIndifferent };

/// Outcome of comparing two trajectories of a pool (indices into it).
struct Preference {
  std::size_t first = 0;
  std::size_t second = 0;
  double first_score = 0.0;
  double second_score = 0.0;
  Winner winner = Winner::kIndifferent;

  bool indifferent() const noexcept { return winner == Winner::kIndifferent; }
  std::size_t preferred() const noexcept {
    return winner == Winner::kSecond ? second : first;
  }
  std::size_t rejected() const noexcept {
    return winner == Winner::kSecond ? first : second;
  }
};

Winner compare_scores(double a, double b);

// Compares two trajectories; the returned indices are 0 and 1.
Preference prefer(const Trajectory& a, const Trajectory& b, const Scorer& scorer);

struct PairingPolicy {
  std::size_t all_pairs_limit = 60;   // all pairs when the pool is this small
  std::size_t sampled_pairs = 2000;   // K distinct pairs otherwise
};

/// Scores each trajectory once and compares pairs per `pairing`. Indifferent
/// pairs are dropped. Throws UsageError for fewer than two trajectories.
std::vector<Preference> generate_preferences(std::span<const Trajectory> trajs,
                                             const Scorer& scorer,
                                             const PairingPolicy& pairing, Rng& rng);

}  // namespace autopref
