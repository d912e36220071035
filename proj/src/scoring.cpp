#include "autopref/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "autopref/error.hpp"

namespace autopref {

void check_weights(const ScoreWeights& w, int d_max) {
  if (w.subgoal < 0 || w.distance < 0 || w.transition_value < 0) {
    throw UsageError("score weights must be non-negative");
  }
  if (!(w.subgoal > w.distance * d_max)) {
    throw UsageError("subgoal weight must exceed distance weight * " +
                     std::to_string(d_max) + " so one more subgoal outweighs any distance");
  }
}

namespace {

std::size_t finite_distance(const Dfa& dfa, DfaState q) {
  const auto d = dfa.distance_to_acceptance(q);
  if (!d) {
    throw UsageError("automaton state '" + dfa.state_name(q) +
                     "' cannot reach acceptance");
  }
  return *d;
}

}  // namespace

std::size_t completed_subgoals(const ProductMdp& mdp, const Trajectory& traj) {
  const Dfa& dfa = mdp.dfa();
  const std::size_t start = finite_distance(dfa, traj.start.dfa);
  const std::size_t end = finite_distance(dfa, traj.final_state().dfa);
  // Looping automata can move away from acceptance; that is no progress.
  return start > end ? start - end : 0;
}

double distance_to_next_subgoal(const ProductMdp& mdp, const Trajectory& traj) {
  const ProductState last = traj.final_state();
  const Dfa& dfa = mdp.dfa();
  if (dfa.is_accepting(last.dfa)) return 0.0;
  const GridPos here = mdp.env().position(last.env);
  const auto& cells = mdp.env().subgoal_positions();
  int best = std::numeric_limits<int>::max();
  for (EventId e : dfa.progress_events(last.dfa)) {
    auto it = cells.find(dfa.event_name(e));
    if (it == cells.end()) continue;
    for (const GridPos& p : it->second) best = std::min(best, manhattan(here, p));
  }
  return best == std::numeric_limits<int>::max() ? 0.0 : static_cast<double>(best);
}

double subtask_score(const ProductMdp& mdp, const Trajectory& traj,
                     const ScoreWeights& w) {
  check_trajectory(mdp, traj);
  return w.subgoal * static_cast<double>(completed_subgoals(mdp, traj)) -
         w.distance * distance_to_next_subgoal(mdp, traj);
}

double transition_value_score(const ProductMdp& mdp, const Trajectory& traj,
                              const TransitionValueTable& values) {
  double total = 0.0;
  for (const auto& step : traj.steps) {
    total += values.value(mdp.dfa(), step.from.dfa, step.event);
  }
  return total;
}

double combined_score(const ProductMdp& mdp, const Trajectory& traj,
                      const TransitionValueTable& values, const ScoreWeights& w) {
  double score = subtask_score(mdp, traj, w);
  if (w.transition_value != 0.0) {
    score += w.transition_value * transition_value_score(mdp, traj, values);
  }
  return score;
}

Scorer make_scorer(const ProductMdp& mdp, const ScoreWeights& w,
                   const TransitionValueTable* values) {
  if (values) {
    return [&mdp, w, values](const Trajectory& t) {
      return combined_score(mdp, t, *values, w);
    };
  }
  return [&mdp, w](const Trajectory& t) { return subtask_score(mdp, t, w); };
}

Winner compare_scores(double a, double b) {
  if (std::abs(a - b) <= kTieTolerance) return Winner::kIndifferent;
  return a > b ? Winner::kFirst : Winner::kSecond;
}

Preference prefer(const Trajectory& a, const Trajectory& b, const Scorer& scorer) {
  Preference p;
  p.first = 0;
  p.second = 1;
  p.first_score = scorer(a);
  p.second_score = scorer(b);
  p.winner = compare_scores(p.first_score, p.second_score);
  return p;
}

std::vector<Preference> generate_preferences(std::span<const Trajectory> trajs,
                                             const Scorer& scorer,
                                             const PairingPolicy& pairing, Rng& rng) {
  const std::size_t n = trajs.size();
  if (n < 2) throw UsageError("preference generation needs at least two trajectories");

  std::vector<double> scores;
  scores.reserve(n);
  for (const auto& t : trajs) scores.push_back(scorer(t));

  std::vector<Preference> out;
  auto add = [&](std::size_t i, std::size_t j) {
    const Winner w = compare_scores(scores[i], scores[j]);
    if (w == Winner::kIndifferent) return;
    out.push_back({i, j, scores[i], scores[j], w});
  };

  if (n <= pairing.all_pairs_limit) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
    }
    return out;
  }

  const std::size_t total_pairs = n * (n - 1) / 2;
  const std::size_t wanted = std::min(pairing.sampled_pairs, total_pairs);
  std::unordered_set<std::size_t> drawn;
  drawn.reserve(wanted * 2);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (drawn.size() < wanted) {
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!drawn.insert(i * n + j).second) continue;
    add(i, j);
  }
  return out;
}

}  // namespace autopref
