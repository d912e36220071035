#include "autopref/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "autopref/error.hpp"
#include "table_io.hpp"

namespace autopref {

// ---------------------------------------------------------------------------
// QTable

QTable::QTable(TableShape shape, double alpha, double gamma)
    : shape_(shape), alpha_(alpha), gamma_(gamma), values_(shape.size(), 0.0) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in [0, 1)");
  if (shape.actions == 0) throw UsageError("Q-table needs at least one action");
}

std::size_t QTable::at(std::size_t state, ActionId a) const {
  if (state >= num_states() || a >= shape_.actions) {
    throw UsageError("Q-table index out of range");
  }
  return state * shape_.actions + a;
}

std::span<const double> QTable::row(std::size_t state) const {
  return std::span<const double>(values_).subspan(at(state, 0), shape_.actions);
}

double QTable::max_value(std::size_t state) const {
  const auto r = row(state);
  return *std::max_element(r.begin(), r.end());
}

double EpsilonSchedule::operator()(std::size_t episode) const {
  const double span = fraction * static_cast<double>(total_episodes);
  if (span <= 0.0) return end;
  const double t = std::min(1.0, static_cast<double>(episode) / span);
  return std::clamp(start + (end - start) * t, 0.0, 1.0);
}

void q_update(QTable& qt, std::size_t state, ActionId a, double reward,
              std::size_t next, bool terminal) {
  if (!std::isfinite(reward)) throw UsageError("reward must be finite");
  const double bootstrap = terminal ? 0.0 : qt.gamma() * qt.max_value(next);
  const double old = qt.q(state, a);
  qt.set(state, a, old + qt.alpha() * (reward + bootstrap - old));
}

ActionId greedy_action(const QTable& qt, std::size_t state, double tie_tolerance) {
  const auto r = qt.row(state);
  ActionId best = 0;
  for (ActionId a = 1; a < r.size(); ++a) {
    if (r[a] > r[best] + tie_tolerance) best = a;
  }
  if (tie_tolerance > 0.0) {
    // Lowest index among everything within tolerance of the true maximum.
    const double top = *std::max_element(r.begin(), r.end());
    for (ActionId a = 0; a < r.size(); ++a) {
      if (r[a] >= top - tie_tolerance) return a;
    }
  }
  return best;
}

ActionId epsilon_greedy(const QTable& qt, std::size_t state, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<ActionId> pick(0, qt.num_actions() - 1);
    return pick(rng);
  }
  return greedy_action(qt, state);
}

Policy greedy_policy(const ProductMdp& mdp, const QTable& qt) {
  return [&mdp, &qt](const ProductState& ps, Rng&) {
    return greedy_action(qt, mdp.index(ps));
  };
}

Policy epsilon_greedy_policy(const ProductMdp& mdp, const QTable& qt, double epsilon) {
  return [&mdp, &qt, epsilon](const ProductState& ps, Rng& rng) {
    return epsilon_greedy(qt, mdp.index(ps), epsilon, rng);
  };
}

AnnealState::AnnealState(const Dfa& dfa, double rho_)
    : rho(rho_), num_events(dfa.num_events()),
      counts(dfa.num_states() * dfa.num_events(), 0) {
  if (!(rho > 0.0 && rho < 1.0)) throw UsageError("rho must lie in (0, 1)");
}

void annealed_update(QTable& qt, const ProductMdp& mdp, const TrajectoryStep& step,
                     double reward, AnnealState& anneal,
                     const TransitionValueTable& teacher) {
  if (!std::isfinite(reward)) throw UsageError("reward must be finite");
  std::size_t& n = anneal.counts.at(step.from.dfa * anneal.num_events + step.event);
  const double beta = std::pow(anneal.rho, static_cast<double>(n));
  const std::size_t s = mdp.index(step.from);
  const bool terminal = mdp.is_terminal(step.to);
  const double standard =
      reward + (terminal ? 0.0 : qt.gamma() * qt.max_value(mdp.index(step.to)));
  const double target =
      beta * teacher.value(mdp.dfa(), step.from.dfa, step.event) + (1.0 - beta) * standard;
  const double old = qt.q(s, step.action);
  qt.set(s, step.action, old + qt.alpha() * (target - old));
  ++n;
}

// ---------------------------------------------------------------------------
// Rewards

TransitionContext classify(const Dfa& dfa, DfaState q, EventId e) {
  TransitionContext c;
  c.from = q;
  c.event = e;
  c.to = dfa.step(q, e);
  c.progress = dfa.is_progress(q, e);
  c.accepting_entry = !dfa.is_accepting(q) && dfa.is_accepting(c.to);
  if (e == kNullEvent) return c;
  bool progress_elsewhere = false;
  bool goal_event = false;
  for (DfaState other = 0; other < dfa.num_states(); ++other) {
    if (dfa.is_accepting(other)) continue;
    if (dfa.is_progress(other, e)) progress_elsewhere = true;
    if (dfa.is_accepting(dfa.step(other, e))) goal_event = true;
  }
  c.out_of_order = c.to == q && progress_elsewhere;
  c.premature_goal = goal_event && !c.accepting_entry && !dfa.is_accepting(q);
  return c;
}

namespace {

constexpr std::array<std::pair<RewardKind, std::string_view>, 7> kRewardNames{{
    {RewardKind::kLearned, "learned"},
    {RewardKind::kKnown, "known"},
    {RewardKind::kRewardMachine, "reward_machine"},
    {RewardKind::kLpopl, "lpopl"},
    {RewardKind::kLpoplBase, "lpopl_base"},
    {RewardKind::kDistillShaping, "distill_shaping"},
    {RewardKind::kStepCost, "step_cost"},
}};

}  // namespace

std::string_view reward_kind_name(RewardKind kind) {
  for (const auto& [k, name] : kRewardNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<RewardKind> parse_reward_kind(std::string_view name) {
  for (const auto& [k, n] : kRewardNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

double known_reward(const TransitionContext& c, const KnownRewardConstants& k) {
  double r = k.step;
  if (c.accepting_entry) {
    r += k.goal;
  } else if (c.premature_goal) {
    r += k.premature_goal;
  } else if (c.progress) {
    r += k.subgoal;
  } else if (c.out_of_order) {
    r += k.out_of_order;
  }
  return r;
}

double rm_reward(const TransitionContext& c, const RewardMachineConstants& k) {
  double r = k.step;
  if (c.progress) r += k.progress;
  if (c.accepting_entry) r += k.accept;
  if (c.out_of_order) r += k.out_of_order;
  return r;
}

double lpopl_base_reward(const TransitionContext& c, const LpoplConstants& k) {
  return k.step + (c.accepting_entry ? k.accept : 0.0);
}

double lpopl_reward(const Dfa& dfa, const TransitionContext& c, double gamma,
                    const LpoplConstants& k) {
  return lpopl_base_reward(c, k) + gamma * dfa.potential(c.to) - dfa.potential(c.from);
}

double distill_shaping_reward(const TransitionContext& c) {
  return c.progress ? 1.0 : -0.1;
}

double step_cost_reward(const TransitionContext&) { return -0.1; }

RewardFn make_reward_fn(const ProductMdp& mdp, const RewardSource& source) {
  const Dfa& dfa = mdp.dfa();
  if (source.kind == RewardKind::kLearned) {
    if (!source.learned) throw UsageError("learned reward source needs a reward table");
    if (source.learned->shape() != TableShape::of(mdp)) {
      throw UsageError("reward table shape does not match the task");
    }
    const RewardTable* model = source.learned;
    return [model](const TrajectoryStep& st) {
      return model->reward(st.from.env, st.from.dfa, st.action);
    };
  }
  // Every reward below depends only on (q, e); tabulate it.
  const std::size_t ne = dfa.num_events();
  std::vector<double> table(dfa.num_states() * ne, 0.0);
  for (DfaState q = 0; q < dfa.num_states(); ++q) {
    for (EventId e = 0; e < ne; ++e) {
      const TransitionContext c = classify(dfa, q, e);
      double r = 0.0;
      switch (source.kind) {
        case RewardKind::kKnown: r = known_reward(c, source.known); break;
        case RewardKind::kRewardMachine: r = rm_reward(c, source.rm); break;
        case RewardKind::kLpopl:
          r = dfa.is_accepting(q) ? 0.0 : lpopl_reward(dfa, c, source.gamma, source.lpopl);
          break;
        case RewardKind::kLpoplBase: r = lpopl_base_reward(c, source.lpopl); break;
        case RewardKind::kDistillShaping: r = distill_shaping_reward(c); break;
        case RewardKind::kStepCost: r = step_cost_reward(c); break;
        case RewardKind::kLearned: break;
      }
      table[q * ne + e] = r;
    }
  }
  return [table = std::move(table), ne](const TrajectoryStep& st) {
    return table[st.from.dfa * ne + st.event];
  };
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

struct Tabulated {
  std::vector<std::size_t> next;  // state * A + a
  std::vector<double> reward;
  std::vector<bool> terminal;     // per state
};

Tabulated tabulate(const ProductMdp& mdp, const RewardFn& reward) {
  if (!mdp.env().is_deterministic()) {
    throw UsageError("value iteration needs a deterministic environment");
  }
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  Tabulated t;
  t.next.resize(n * na);
  t.reward.resize(n * na);
  t.terminal.resize(n);
  Rng rng(0);
  for (std::size_t i = 0; i < n; ++i) {
    const ProductState ps = mdp.state(i);
    t.terminal[i] = mdp.is_terminal(ps);
    if (t.terminal[i]) continue;
    for (ActionId a = 0; a < na; ++a) {
      const auto out = mdp.step(ps, a, rng);
      t.next[i * na + a] = mdp.index(out.next);
      t.reward[i * na + a] = reward({ps, a, out.next, out.event});
      if (!std::isfinite(t.reward[i * na + a])) {
        throw UsageError("reward function returned a non-finite value");
      }
    }
  }
  return t;
}

constexpr std::size_t kMaxSweeps = 1'000'000;

}  // namespace

QTable value_iteration(const ProductMdp& mdp, const RewardFn& reward, double gamma,
                       double tol) {
  if (!(tol > 0.0)) throw UsageError("value iteration tolerance must be positive");
  QTable qt(TableShape::of(mdp), 0.0, gamma);
  const Tabulated t = tabulate(mdp, reward);
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  std::vector<double> v(n, 0.0);
  auto q = qt.values();
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (t.terminal[i]) continue;
      for (ActionId a = 0; a < na; ++a) {
        const std::size_t k = i * na + a;
        const double target = t.reward[k] + gamma * v[t.next[k]];
        residual = std::max(residual, std::abs(target - q[k]));
        q[k] = target;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!t.terminal[i]) v[i] = qt.max_value(i);
    }
    if (residual < tol) return qt;
  }
  throw DivergenceError("value iteration did not converge");
}

std::vector<double> evaluate_greedy_policy(const ProductMdp& mdp, const QTable& qt,
                                           const RewardFn& reward, double gamma,
                                           double tol) {
  const Tabulated t = tabulate(mdp, reward);
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  std::vector<std::size_t> choice(n, 0);
  for (std::size_t i = 0; i < n; ++i) choice[i] = greedy_action(qt, i, kTieTolerance);
  std::vector<double> v(n, 0.0);
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (t.terminal[i]) continue;
      const std::size_t k = i * na + choice[i];
      const double target = t.reward[k] + gamma * v[t.next[k]];
      residual = std::max(residual, std::abs(target - v[i]));
      v[i] = target;
    }
    if (residual < tol) return v;
  }
  throw DivergenceError("policy evaluation did not converge");
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

std::size_t horizon_of(const ProductMdp& mdp, const LearnerConfig& config) {
  const std::size_t h = config.horizon.value_or(mdp.horizon());
  if (h == 0) throw UsageError("horizon must be at least 1");
  return h;
}

void check_config(const LearnerConfig& config) {
  if (config.init_trajectories < 2) {
    throw UsageError("preference methods need at least two initial trajectories");
  }
  if (config.block == 0) throw UsageError("dynamic block size must be positive");
  if (config.window == 0) throw UsageError("stability window must be positive");
  if (config.iterations == 0) throw UsageError("dynamic iterations must be positive");
  if (!(config.stability_tol >= 0.0)) throw UsageError("stability_tol must be non-negative");
}

/// Runs episodes of (optionally annealed) Q-learning and records metrics.
class EpisodeRunner {
 public:
  EpisodeRunner(const ProductMdp& mdp, const LearnerConfig& config, RunResult& result,
                const TransitionValueTable* teacher)
      : mdp_(mdp),
        config_(config),
        result_(result),
        horizon_(horizon_of(mdp, config)),
        reference_(make_reward_fn(mdp, RewardSource{})),
        teacher_(teacher) {
    schedule_ = config.epsilon;
    schedule_.total_episodes = config.episodes;
    if (teacher_) anneal_ = AnnealState(mdp.dfa(), config.rho);
    for (double f : config.snapshot_fractions) {
      if (!(f >= 0.0 && f <= 1.0)) throw UsageError("snapshot fractions must lie in [0, 1]");
      snapshot_at_.push_back(static_cast<std::size_t>(
          std::llround(f * static_cast<double>(config.episodes))));
    }
    take_due_snapshots();
  }

  std::size_t episode() const noexcept { return episode_; }
  std::size_t remaining() const noexcept { return config_.episodes - episode_; }

  // Returns the mean undiscounted training return of the episodes run.
  double run(std::size_t count, const RewardFn& reward, Rng& rng) {
    count = std::min(count, remaining());
    double total = 0.0;
    QTable& qt = result_.policy;
    for (std::size_t k = 0; k < count; ++k) {
      const double eps = schedule_(episode_);
      ProductState ps = mdp_.initial();
      EpisodeMetrics m;
      m.episode = episode_;
      for (std::size_t t = 0; t < horizon_; ++t) {
        const std::size_t s = mdp_.index(ps);
        const ActionId a = epsilon_greedy(qt, s, eps, rng);
        const auto out = mdp_.step(ps, a, rng);
        const TrajectoryStep step{ps, a, out.next, out.event};
        const double r = reward(step);
        total += r;
        m.reference_reward += reference_(step);
        const bool terminal = mdp_.is_terminal(out.next);
        if (teacher_) {
          annealed_update(qt, mdp_, step, r, anneal_, *teacher_);
        } else {
          q_update(qt, s, a, r, mdp_.index(out.next), terminal);
        }
        ++m.steps;
        ps = out.next;
        if (terminal) {
          m.accepted = true;
          break;
        }
      }
      cumulative_ += m.steps;
      m.cumulative_steps = cumulative_;
      result_.metrics.push_back(m);
      ++episode_;
      take_due_snapshots();
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
  }

  double epsilon_now() const { return schedule_(episode_); }
  std::size_t horizon() const noexcept { return horizon_; }

 private:
  void take_due_snapshots() {
    for (std::size_t at : snapshot_at_) {
      if (at == episode_) result_.snapshots.push_back(result_.policy);
    }
  }

  const ProductMdp& mdp_;
  const LearnerConfig& config_;
  RunResult& result_;
  std::size_t horizon_;
  RewardFn reference_;
  const TransitionValueTable* teacher_;
  AnnealState anneal_;
  EpsilonSchedule schedule_;
  std::vector<std::size_t> snapshot_at_;
  std::size_t episode_ = 0;
  std::size_t cumulative_ = 0;
};

RunResult empty_result(const ProductMdp& mdp, const LearnerConfig& config) {
  return RunResult{QTable::for_task(mdp, config.alpha, config.gamma), {}, {}, {}, {}, 0};
}

void append_preferences(std::vector<Preference>& out, std::vector<Preference> fresh,
                        std::size_t offset) {
  for (auto& p : fresh) {
    p.first += offset;
    p.second += offset;
    out.push_back(p);
  }
}

}  // namespace

RunResult run_baseline(const ProductMdp& mdp, const RewardSource& source,
                       const LearnerConfig& config, Rng& rng) {
  if (source.kind == RewardKind::kLearned) {
    throw UsageError("run_baseline takes a fixed reward; use run_static or run_dynamic");
  }
  RunResult result = empty_result(mdp, config);
  RewardSource src = source;
  src.gamma = config.gamma;
  const RewardFn reward = make_reward_fn(mdp, src);
  EpisodeRunner runner(mdp, config, result, nullptr);
  runner.run(config.episodes, reward, rng);
  result.iterations = 1;
  return result;
}

RunResult run_static(const ProductMdp& mdp, const Scorer& scorer,
                     const LearnerConfig& config, Rng& rng,
                     const TransitionValueTable* teacher) {
  check_config(config);
  RunResult result = empty_result(mdp, config);
  EpisodeRunner runner(mdp, config, result, teacher);

  const Policy random = uniform_random_policy(mdp.num_actions());
  std::vector<Trajectory> pool;
  pool.reserve(config.init_trajectories);
  for (std::size_t i = 0; i < config.init_trajectories; ++i) {
    pool.push_back(rollout(mdp, random, rng, runner.horizon()));
  }
  const auto prefs = generate_preferences(pool, scorer, config.pairing, rng);

  RewardTable model(TableShape::of(mdp), config.reward_gamma, config.margin);
  if (!prefs.empty()) {
    result.train_reports.push_back(train(model, pool, prefs, config.reward_train, rng));
  }
  // With every pair tied this leaves a flat step cost.
  if (config.cost_offset) shift_to_cost(model, *config.cost_offset);
  RewardSource src;
  src.kind = RewardKind::kLearned;
  src.learned = &model;
  runner.run(config.episodes, make_reward_fn(mdp, src), rng);
  result.reward = std::move(model);
  result.iterations = 1;
  return result;
}

RunResult run_dynamic(const ProductMdp& mdp, const Scorer& scorer,
                      const LearnerConfig& config, Rng& rng,
                      const TransitionValueTable* teacher) {
  check_config(config);
  RunResult result = empty_result(mdp, config);
  EpisodeRunner runner(mdp, config, result, teacher);

  RewardTable model(TableShape::of(mdp), config.reward_gamma, config.margin);
  RewardSource src;
  src.kind = RewardKind::kLearned;
  src.learned = &model;
  const RewardFn learned = make_reward_fn(mdp, src);

  std::vector<Trajectory> pool;
  std::vector<Preference> buffer;
  std::vector<double> block_returns;
  const Policy random = uniform_random_policy(mdp.num_actions());

  for (std::size_t k = 0; k < config.iterations; ++k) {
    // Collect: random first, on-policy afterwards.
    const std::size_t offset = pool.size();
    const std::size_t batch = k == 0 ? config.init_trajectories
                                     : config.trajectories_per_iteration;
    const Policy behaviour = k == 0 ? random
        : epsilon_greedy_policy(mdp, result.policy, runner.epsilon_now());
    for (std::size_t i = 0; i < batch; ++i) {
      pool.push_back(rollout(mdp, behaviour, rng, runner.horizon()));
    }
    if (batch >= 2) {
      const std::span<const Trajectory> fresh(pool.data() + offset, batch);
      append_preferences(buffer, generate_preferences(fresh, scorer, config.pairing, rng),
                         offset);
    }
    if (offset > 0) {
      std::uniform_int_distribution<std::size_t> old(0, offset - 1);
      for (std::size_t i = offset; i < pool.size(); ++i) {
        const double si = scorer(pool[i]);
        for (std::size_t c = 0; c < config.cross_pairs; ++c) {
          const std::size_t j = old(rng);
          const double sj = scorer(pool[j]);
          const Winner w = compare_scores(si, sj);
          if (w != Winner::kIndifferent) buffer.push_back({i, j, si, sj, w});
        }
      }
    }

    if (!buffer.empty()) {
      result.train_reports.push_back(train(model, pool, buffer, config.reward_train, rng));
    }
    if (config.cost_offset) shift_to_cost(model, *config.cost_offset);
    block_returns.push_back(runner.run(config.block, learned, rng));
    result.iterations = k + 1;

    if (std::isinf(config.stability_tol) || runner.remaining() == 0) break;
    if (block_returns.size() >= 2) {
      const std::size_t n = block_returns.size();
      const std::size_t w = std::min(config.window, n - 1);
      const double now =
          std::accumulate(block_returns.end() - w, block_returns.end(), 0.0) / w;
      const double before =
          std::accumulate(block_returns.end() - w - 1, block_returns.end() - 1, 0.0) / w;
      if (std::abs(now - before) < config.stability_tol) break;
    }
  }
  result.reward = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Snapshots

std::string serialize_q_table(const QTable& qt) {
  return detail::serialize_dense("q-table", qt.shape(),
                                 {{"alpha", qt.alpha()}, {"gamma", qt.gamma()}},
                                 qt.values());
}

QTable parse_q_table(std::string_view text) {
  auto dense = detail::parse_dense(text, "q-table", {"alpha", "gamma"});
  QTable qt(dense.shape, dense.params.at("alpha"), dense.params.at("gamma"));
  std::copy(dense.values.begin(), dense.values.end(), qt.values().begin());
  return qt;
}

void save_q_table(const QTable& qt, const std::filesystem::path& path) {
  detail::write_file(path, serialize_q_table(qt));
}

QTable load_q_table(const std::filesystem::path& path) {
  return parse_q_table(detail::read_file(path));
}

}  // namespace autopref
