#include "autopref/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "autopref/error.hpp"
#include "table_io.hpp"

namespace autopref {

RewardTable::RewardTable(TableShape shape, double gamma, double margin)
    : shape_(shape), gamma_(gamma), margin_(margin), theta_(shape.size(), 0.0) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in (0, 1)");
  if (!(margin > 0.0) || !std::isfinite(margin)) {
    throw UsageError("margin must be positive");
  }
}

double RewardTable::reward(std::size_t s, std::size_t q, std::size_t a) const {
  if (!shape_.contains(s, q, a)) throw UsageError("reward index out of range");
  return theta_[shape_.index(s, q, a)];
}

void RewardTable::set(std::size_t s, std::size_t q, std::size_t a, double value) {
  if (!shape_.contains(s, q, a)) throw UsageError("reward index out of range");
  if (!std::isfinite(value)) throw UsageError("reward values must be finite");
  theta_[shape_.index(s, q, a)] = value;
}

namespace {

// A trajectory's return as a sparse linear form over theta.
using Features = std::vector<std::pair<std::size_t, double>>;

Features features(const RewardTable& model, const Trajectory& traj) {
  const TableShape& shape = model.shape();
  std::unordered_map<std::size_t, double> acc;
  double discount = 1.0;
  for (const auto& step : traj.steps) {
    if (!shape.contains(step.from.env, step.from.dfa, step.action)) {
      throw UsageError("trajectory index outside the reward table");
    }
    acc[shape.index(step.from.env, step.from.dfa, step.action)] += discount;
    discount *= model.gamma();
  }
  Features out(acc.begin(), acc.end());
  std::sort(out.begin(), out.end());
  return out;
}

double dot(std::span<const double> theta, const Features& f) {
  double total = 0.0;
  for (const auto& [idx, coef] : f) total += coef * theta[idx];
  return total;
}

struct PairSet {
  std::vector<Features> feats;  // indexed like the pool, empty when unused
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (preferred, rejected)
  std::vector<double> spread;  // |f_win - f_lose|^2 per pair
};

double squared_distance(const Features& a, const Features& b) {
  double total = 0.0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() || j != b.end()) {
    double d;
    if (j == b.end() || (i != a.end() && i->first < j->first)) {
      d = (i++)->second;
    } else if (i == a.end() || j->first < i->first) {
      d = (j++)->second;
    } else {
      d = (i++)->second - (j++)->second;
    }
    total += d * d;
  }
  return total;
}

PairSet prepare(const RewardTable& model, std::span<const Trajectory> pool,
                std::span<const Preference> prefs) {
  PairSet set;
  set.feats.resize(pool.size());
  std::vector<bool> built(pool.size(), false);
  set.pairs.reserve(prefs.size());
  for (const auto& p : prefs) {
    if (p.indifferent()) throw UsageError("indifferent preference in training set");
    const std::size_t win = p.preferred();
    const std::size_t lose = p.rejected();
    if (win >= pool.size() || lose >= pool.size()) {
      throw UsageError("preference refers to a trajectory outside the pool");
    }
    for (std::size_t i : {win, lose}) {
      if (!built[i]) {
        set.feats[i] = features(model, pool[i]);
        built[i] = true;
      }
    }
    set.pairs.emplace_back(win, lose);
    set.spread.push_back(squared_distance(set.feats[win], set.feats[lose]));
  }
  return set;
}

double hinge(const RewardTable& model, const PairSet& set, std::size_t k) {
  const auto [win, lose] = set.pairs[k];
  const auto theta = model.theta();
  return model.margin() - (dot(theta, set.feats[win]) - dot(theta, set.feats[lose]));
}

double loss_of(const RewardTable& model, const PairSet& set) {
  double total = 0.0;
  for (std::size_t k = 0; k < set.pairs.size(); ++k) {
    total += std::max(0.0, hinge(model, set, k));
  }
  return total;
}

double accuracy_of(const RewardTable& model, const PairSet& set) {
  if (set.pairs.empty()) return 1.0;
  std::size_t good = 0;
  const auto theta = model.theta();
  for (const auto& [win, lose] : set.pairs) {
    if (dot(theta, set.feats[win]) > dot(theta, set.feats[lose])) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(set.pairs.size());
}


}  // namespace

double trajectory_return(const RewardTable& model, const Trajectory& traj) {
  return dot(model.theta(), features(model, traj));
}

double ranking_loss(const RewardTable& model, std::span<const Trajectory> pool,
                    std::span<const Preference> prefs) {
  return loss_of(model, prepare(model, pool, prefs));
}

std::vector<double> ranking_subgradient(const RewardTable& model,
                                        std::span<const Trajectory> pool,
                                        std::span<const Preference> prefs) {
  const PairSet set = prepare(model, pool, prefs);
  std::vector<double> grad(model.shape().size(), 0.0);
  for (std::size_t k = 0; k < set.pairs.size(); ++k) {
    if (hinge(model, set, k) <= 0.0) continue;
    const auto [win, lose] = set.pairs[k];
    for (const auto& [idx, coef] : set.feats[win]) grad[idx] -= coef;
    for (const auto& [idx, coef] : set.feats[lose]) grad[idx] += coef;
  }
  return grad;
}

double pair_accuracy(const RewardTable& model, std::span<const Trajectory> pool,
                     std::span<const Preference> prefs) {
  return accuracy_of(model, prepare(model, pool, prefs));
}

TrainReport train(RewardTable& model, std::span<const Trajectory> pool,
                  std::span<const Preference> prefs, const TrainConfig& config,
                  Rng& rng) {
  if (prefs.empty()) throw UsageError("training needs at least one preference");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw UsageError("learning rate must be a finite non-negative number");
  }
  if (config.l2 < 0.0) throw UsageError("l2 weight must be non-negative");

  const PairSet set = prepare(model, pool, prefs);
  auto theta = model.theta();
  std::vector<std::size_t> order(set.pairs.size());
  std::iota(order.begin(), order.end(), 0);

  // Ranking loss plus the l2 penalty that the shrink step descends.
  auto objective = [&] {
    double penalty = 0.0;
    if (config.l2 > 0.0) {
      for (double v : theta) penalty += v * v;
    }
    return loss_of(model, set) + 0.5 * config.l2 * penalty;
  };

  TrainReport report;
  double best_objective = objective();
  std::vector<double> best(theta.begin(), theta.end());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t active = 0;
    for (std::size_t k : order) {
      const double h = hinge(model, set, k);
      if (h <= 0.0) continue;
      ++active;
      // Never move further than it takes to put this pair on its margin.
      const double step = std::min(config.learning_rate, h / set.spread[k]);
      const auto [win, lose] = set.pairs[k];
      for (const auto& [idx, coef] : set.feats[win]) theta[idx] += step * coef;
      for (const auto& [idx, coef] : set.feats[lose]) theta[idx] -= step * coef;
    }
    if (config.l2 > 0.0) {
      const double shrink = 1.0 - config.learning_rate * config.l2;
      for (double& v : theta) v *= shrink;
    }
    report.epochs_run = epoch + 1;
    const double value = objective();
    if (!std::isfinite(value)) {
      throw DivergenceError("ranking loss became non-finite at epoch " +
                            std::to_string(epoch + 1) + "; lower the learning rate");
    }
    if (active == 0) break;
    if (value < best_objective) {
      best_objective = value;
      best.assign(theta.begin(), theta.end());
      report.best_epoch = epoch + 1;
    }
    if (loss_of(model, set) == 0.0) break;
  }
  // Later epochs may wander above the best point; roll back to it.
  std::copy(best.begin(), best.end(), theta.begin());
  report.final_loss = loss_of(model, set);
  if (!std::isfinite(report.final_loss)) {
    throw DivergenceError("ranking loss is non-finite");
  }
  report.pair_accuracy = accuracy_of(model, set);
  return report;
}

void shift_to_cost(RewardTable& model, double offset) {
  if (!(offset >= 0.0) || !std::isfinite(offset)) {
    throw UsageError("cost offset must be a finite non-negative number");
  }
  auto theta = model.theta();
  if (theta.empty()) return;
  const double top = *std::max_element(theta.begin(), theta.end());
  for (double& v : theta) v -= top + offset;
}

std::string serialize_reward_table(const RewardTable& model) {
  return detail::serialize_dense("reward-table", model.shape(),
                                 {{"gamma", model.gamma()}, {"margin", model.margin()}},
                                 model.theta());
}

RewardTable parse_reward_table(std::string_view text) {
  auto dense = detail::parse_dense(text, "reward-table", {"gamma", "margin"});
  RewardTable model(dense.shape, dense.params.at("gamma"), dense.params.at("margin"));
  auto theta = model.theta();
  for (std::size_t i = 0; i < dense.values.size(); ++i) {
    if (!std::isfinite(dense.values[i])) {
      throw ParseError(1, 1, "reward table contains a non-finite value");
    }
    theta[i] = dense.values[i];
  }
  return model;
}

void save_reward_table(const RewardTable& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_reward_table(model));
}

RewardTable load_reward_table(const std::filesystem::path& path) {
  return parse_reward_table(detail::read_file(path));
}

}  // namespace autopref
