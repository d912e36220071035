#include "autopref/product.hpp"

#include <deque>

#include "autopref/error.hpp"

namespace autopref {

std::vector<EventId> Trajectory::events() const {
  std::vector<EventId> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.event);
  return out;
}

ProductMdp::ProductMdp(std::shared_ptr<const LabeledEnv> env,
                       std::shared_ptr<const Dfa> dfa)
    : env_(std::move(env)), dfa_(std::move(dfa)) {
  if (!env_ || !dfa_) throw UsageError("product needs an environment and automaton");
  const auto& names = env_->events();
  event_map_.resize(names.size(), kNullEvent);
  for (EnvEvent e = 1; e < names.size(); ++e) {
    const auto id = dfa_->find_event(names[e]);
    if (!id) {
      throw UsageError("environment '" + env_->name() + "' emits event '" +
                       names[e] + "' unknown to automaton '" + dfa_->name() + "'");
    }
    event_map_[e] = *id;
  }
}

ProductMdp::Outcome ProductMdp::step(ProductState ps, ActionId a, Rng& rng) const {
  const EnvStep env_step = env_->step(ps.env, a, rng);
  const EventId e = event_map_[env_step.event];
  return {{env_step.next, dfa_->step(ps.dfa, e)}, e};
}

std::vector<ProductState> ProductMdp::enumerate_states() const {
  std::vector<ProductState> out;
  out.reserve(num_states());
  for (std::size_t i = 0; i < num_states(); ++i) out.push_back(state(i));
  return out;
}

std::vector<bool> ProductMdp::reachable_states() const {
  std::vector<bool> seen(num_states(), false);
  Rng rng(0);
  std::deque<ProductState> frontier{initial()};
  seen[index(initial())] = true;
  while (!frontier.empty()) {
    const ProductState ps = frontier.front();
    frontier.pop_front();
    if (is_terminal(ps)) continue;
    for (ActionId a = 0; a < num_actions(); ++a) {
      const ProductState next = step(ps, a, rng).next;
      if (!seen[index(next)]) {
        seen[index(next)] = true;
        frontier.push_back(next);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] && is_terminal(state(i))) seen[i] = false;
  }
  return seen;
}

ProductMdp make_task(const std::string& env_name, const EnvParams& params) {
  auto env = make_env(env_name, params);
  auto dfa = std::make_shared<const Dfa>(load_dfa(bundled_dfa_path(env_name)));
  return ProductMdp(std::move(env), std::move(dfa));
}

Trajectory rollout_from(const ProductMdp& mdp, ProductState start,
                        const Policy& policy, Rng& rng, std::size_t horizon) {
  if (horizon == 0) throw UsageError("rollout horizon must be at least 1");
  Trajectory traj;
  traj.start = start;
  traj.steps.reserve(horizon);
  ProductState ps = start;
  if (mdp.is_terminal(ps)) {
    traj.terminal_accepted = true;
    return traj;
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    const ActionId a = policy(ps, rng);
    const auto out = mdp.step(ps, a, rng);
    traj.steps.push_back({ps, a, out.next, out.event});
    ps = out.next;
    if (mdp.is_terminal(ps)) {
      traj.terminal_accepted = true;
      break;
    }
  }
  return traj;
}

Trajectory rollout(const ProductMdp& mdp, const Policy& policy, Rng& rng,
                   std::size_t horizon) {
  return rollout_from(mdp, mdp.initial(), policy, rng, horizon);
}

Policy uniform_random_policy(std::size_t num_actions) {
  return [num_actions](const ProductState&, Rng& rng) {
    std::uniform_int_distribution<ActionId> pick(0, num_actions - 1);
    return pick(rng);
  };
}

void check_trajectory(const ProductMdp& mdp, const Trajectory& trajectory) {
  ProductState expected = trajectory.start;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const auto& step = trajectory.steps[t];
    if (step.from != expected) {
      throw UsageError("trajectory step " + std::to_string(t) +
                       " does not continue from the previous state");
    }
    if (mdp.dfa().step(step.from.dfa, step.event) != step.to.dfa) {
      throw UsageError("trajectory step " + std::to_string(t) +
                       " disagrees with the automaton transition");
    }
    expected = step.to;
  }
  if (trajectory.terminal_accepted != mdp.dfa().is_accepting(expected.dfa)) {
    throw UsageError("trajectory acceptance flag disagrees with its final state");
  }
}

}  // namespace autopref
