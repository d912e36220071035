#include <algorithm>
#include <cmath>
#include <sstream>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"
#include "text_io.hpp"

namespace autopref {

namespace {

double reference_return(const RewardFn& reference, const Trajectory& traj) {
  double total = 0.0;
  for (const auto& st : traj.steps) total += reference(st);
  return total;
}

std::string fmt(double v) { return detail::format_double(v); }

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string("undefined");
}

}  // namespace

// ---------------------------------------------------------------------------
// Scoring validation

ValidationReport validate_scoring(const ProductMdp& mdp, const TransitionValueTable& values,
                                  const ValidationSettings& settings,
                                  const LearnerConfig& training, Rng& rng) {
  if (settings.trajectories < 30) throw UsageError("validation needs at least 30 trajectories");
  if (settings.rollouts == 0) throw UsageError("validation needs at least one rollout");

  // A policy trained on the reference reward, with snapshots along the way.
  LearnerConfig cfg = training;
  cfg.snapshot_fractions = {0.25, 0.5};
  RewardSource reference_src;
  reference_src.kind = RewardKind::kKnown;
  const RunResult trained = run_baseline(mdp, reference_src, cfg, rng);
  const RewardFn reference = make_reward_fn(mdp, reference_src);
  const std::size_t horizon = mdp.horizon();

  const std::size_t n = settings.trajectories;
  const std::size_t n_random = n / 3;
  const std::size_t n_partial = n / 3;
  const std::size_t n_final = n - n_random - n_partial;

  std::vector<Trajectory> pool;
  pool.reserve(n);
  const Policy random = uniform_random_policy(mdp.num_actions());
  for (std::size_t i = 0; i < n_random; ++i) pool.push_back(rollout(mdp, random, rng, horizon));
  for (std::size_t i = 0; i < n_partial; ++i) {
    const QTable& snap = trained.snapshots[i % trained.snapshots.size()];
    pool.push_back(rollout(mdp, epsilon_greedy_policy(mdp, snap, settings.policy_epsilon),
                           rng, horizon));
  }
  const Policy final_policy =
      epsilon_greedy_policy(mdp, trained.policy, settings.policy_epsilon);
  for (std::size_t i = 0; i < n_final; ++i) pool.push_back(rollout(mdp, final_policy, rng, horizon));

  ValidationReport report;
  for (const auto& traj : pool) {
    report.scores.push_back(transition_value_score(mdp, traj, values));
    report.reference_rewards.push_back(reference_return(reference, traj));
    report.subgoals.push_back(static_cast<double>(completed_subgoals(mdp, traj)));
  }

  auto correlate = [&](auto fn, std::span<const double> ys, const char* what)
      -> std::optional<double> {
    try {
      return fn(report.scores, ys);
    } catch (const UsageError&) {
      report.notes.push_back(std::string(what) + ": undefined (zero variance)");
      return std::nullopt;
    }
  };
  report.pearson_reward = correlate(
      [](auto xs, auto ys) { return pearson(xs, ys); }, report.reference_rewards,
      "pearson(score, reference reward)");
  report.spearman_subgoals = correlate(
      [](auto xs, auto ys) { return spearman(xs, ys); }, report.subgoals,
      "spearman(score, subgoals)");

  // Endpoint analysis: continue from each trajectory's final state.
  std::vector<double> success, future;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const ProductState end = pool[i].final_state();
    EndpointRecord rec;
    rec.score = report.scores[i];
    double hits = 0.0, reward = 0.0;
    for (std::size_t r = 0; r < settings.rollouts; ++r) {
      if (mdp.is_terminal(end)) {
        hits += 1.0;
        continue;
      }
      const Trajectory cont = rollout_from(mdp, end, final_policy, rng, horizon);
      hits += cont.terminal_accepted ? 1.0 : 0.0;
      reward += reference_return(reference, cont);
    }
    rec.success_rate = hits / static_cast<double>(settings.rollouts);
    rec.future_reward = reward / static_cast<double>(settings.rollouts);
    report.endpoints.push_back(rec);
    success.push_back(rec.success_rate);
    future.push_back(rec.future_reward);
  }
  try {
    report.success_fit = fit_line(report.scores, success);
    report.future_reward_fit = fit_line(report.scores, future);
  } catch (const UsageError&) {
    report.notes.push_back("endpoint regression: undefined (constant scores)");
  }

  const double mid = median(report.scores);
  double above = 0.0, below = 0.0;
  for (const auto& rec : report.endpoints) {
    if (rec.score > mid) {
      above += rec.success_rate;
      ++report.above_count;
    } else if (rec.score < mid) {
      below += rec.success_rate;
      ++report.below_count;
    }
  }
  if (report.above_count) report.above_median_success = above / report.above_count;
  if (report.below_count) report.below_median_success = below / report.below_count;
  if (!report.above_count || !report.below_count) {
    report.notes.push_back("median split: one side is empty");
  }
  return report;
}

std::string format_validation_report(const ValidationReport& r) {
  std::ostringstream out;
  out << "trajectories: " << r.scores.size() << '\n';
  out << "pearson(transition-value score, reference reward): " << fmt_opt(r.pearson_reward)
      << '\n';
  out << "spearman(transition-value score, completed subgoals): "
      << fmt_opt(r.spearman_subgoals) << '\n';
  if (r.success_fit) {
    out << "future success rate ~ score: slope " << fmt(r.success_fit->slope) << ", intercept "
        << fmt(r.success_fit->intercept) << '\n';
  }
  if (r.future_reward_fit) {
    out << "future reference reward ~ score: slope " << fmt(r.future_reward_fit->slope)
        << ", intercept " << fmt(r.future_reward_fit->intercept) << '\n';
  }
  out << "above-median endpoints: " << r.above_count << ", success rate "
      << fmt(r.above_median_success) << '\n';
  out << "below-median endpoints: " << r.below_count << ", success rate "
      << fmt(r.below_median_success) << '\n';
  for (const auto& note : r.notes) out << "note: " << note << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Convergence property check

std::vector<Trajectory> enumerate_trajectories(const ProductMdp& mdp, std::size_t horizon,
                                               std::size_t limit) {
  if (horizon == 0) throw UsageError("enumeration horizon must be at least 1");
  if (!mdp.env().is_deterministic()) {
    throw UsageError("trajectory enumeration needs a deterministic environment");
  }
  std::vector<Trajectory> out;
  Trajectory current;
  current.start = mdp.initial();
  Rng rng(0);

  // Depth-first over action sequences.
  auto visit = [&](auto&& self, ProductState ps) -> void {
    if (mdp.is_terminal(ps) || current.steps.size() == horizon) {
      current.terminal_accepted = mdp.is_terminal(ps);
      if (out.size() == limit) {
        throw UsageError("more than " + std::to_string(limit) + " trajectories within horizon " +
                         std::to_string(horizon));
      }
      out.push_back(current);
      return;
    }
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const auto step = mdp.step(ps, a, rng);
      current.steps.push_back({ps, a, step.next, step.event});
      self(self, step.next);
      current.steps.pop_back();
    }
  };
  visit(visit, current.start);
  return out;
}

ConvergenceReport check_convergence_theorem(const ProductMdp& mdp,
                                            const ConvergenceCheckConfig& config,
                                            const LearnerConfig& learner,
                                            std::uint64_t seed) {
  if (!(config.epsilon >= 0.0)) throw UsageError("epsilon must be non-negative");
  if (!(config.confidence > 0.0 && config.confidence < 1.0)) {
    throw UsageError("confidence must lie in (0, 1)");
  }
  ConvergenceReport report;
  const auto trajs = enumerate_trajectories(mdp, config.horizon, config.max_trajectories);
  report.trajectories = trajs.size();

  // R* is the subtask score; keep pairs separated by at least delta0.
  const ScoreWeights weights;
  std::vector<double> scores;
  for (const auto& t : trajs) scores.push_back(subtask_score(mdp, t, weights));
  std::vector<Preference> prefs;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      ++report.pairs_total;
      if (std::abs(scores[i] - scores[j]) < config.delta0) continue;
      const Winner w = compare_scores(scores[i], scores[j]);
      if (w == Winner::kIndifferent) continue;
      prefs.push_back({i, j, scores[i], scores[j], w});
    }
  }
  report.pairs_kept = prefs.size();
  report.vacuous = prefs.empty();

  RewardSource reference_src;
  reference_src.kind = RewardKind::kKnown;
  const RewardFn reference = make_reward_fn(mdp, reference_src);
  const QTable optimal = value_iteration(mdp, reference, learner.gamma, 1e-12);
  report.optimal_value = optimal.max_value(mdp.index(mdp.initial()));

  for (std::size_t k = 0; k < config.trials; ++k) {
    ConvergenceTrial trial;
    trial.seed = seed + k;
    Rng rng(trial.seed);
    RewardTable model(TableShape::of(mdp), learner.reward_gamma, learner.margin);
    if (!prefs.empty()) {
      TrainConfig tc = learner.reward_train;
      tc.epochs = config.max_epochs;
      trial.train = train(model, trajs, prefs, tc, rng);
      if (learner.cost_offset) shift_to_cost(model, *learner.cost_offset);
    } else {
      trial.train.pair_accuracy = 1.0;
    }

    LearnerConfig lc = learner;
    lc.episodes = config.episodes;
    lc.epsilon.end = std::max(lc.epsilon.end, config.exploration);
    RunResult run{QTable::for_task(mdp, lc.alpha, lc.gamma), {}, {}, {}, {}, 0};
    RewardSource learned;
    learned.kind = RewardKind::kLearned;
    learned.learned = &model;
    const RewardFn reward = make_reward_fn(mdp, learned);
    EpsilonSchedule schedule = lc.epsilon;
    schedule.total_episodes = lc.episodes;
    for (std::size_t ep = 0; ep < lc.episodes; ++ep) {
      ProductState ps = mdp.initial();
      for (std::size_t t = 0; t < mdp.horizon(); ++t) {
        const std::size_t s = mdp.index(ps);
        const ActionId a = epsilon_greedy(run.policy, s, schedule(ep), rng);
        const auto out = mdp.step(ps, a, rng);
        const bool terminal = mdp.is_terminal(out.next);
        q_update(run.policy, s, a, reward({ps, a, out.next, out.event}), mdp.index(out.next),
                 terminal);
        ps = out.next;
        if (terminal) break;
      }
    }
    const auto values = evaluate_greedy_policy(mdp, run.policy, reference, learner.gamma, 1e-12);
    trial.policy_value = values[mdp.index(mdp.initial())];
    trial.gap = report.optimal_value - trial.policy_value;
    trial.passed = trial.gap <= config.epsilon && trial.train.pair_accuracy == 1.0;
    report.trials_passed += trial.passed;
    report.trials.push_back(trial);
  }
  report.passed = static_cast<double>(report.trials_passed) >=
                  config.confidence * static_cast<double>(config.trials);
  return report;
}

std::string format_convergence_report(const ConvergenceReport& r,
                                      const ConvergenceCheckConfig& config) {
  std::ostringstream out;
  out << "trajectories enumerated (horizon " << config.horizon << "): " << r.trajectories << '\n';
  out << "pairs: " << r.pairs_total << " total, " << r.pairs_kept << " with |R* gap| >= "
      << fmt(config.delta0) << '\n';
  if (r.vacuous) out << "warning: no pair meets delta0; the check is vacuous\n";
  out << "optimal value at the initial state: " << fmt(r.optimal_value) << '\n';
  for (const auto& t : r.trials) {
    out << "trial seed " << t.seed << ": pair accuracy " << fmt(t.train.pair_accuracy)
        << " after " << t.train.epochs_run << " epochs, policy value " << fmt(t.policy_value)
        << ", gap " << fmt(t.gap) << (t.passed ? " pass" : " FAIL") << '\n';
  }
  out << "passed " << r.trials_passed << '/' << r.trials.size() << " (need "
      << fmt(config.confidence) << " of trials within epsilon " << fmt(config.epsilon)
      << "): " << (r.passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace autopref
