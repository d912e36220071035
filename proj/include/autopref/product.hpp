#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "autopref/automaton.hpp"
#include "autopref/envs.hpp"

namespace autopref {

struct ProductState {
  EnvState env = 0;
  DfaState dfa = 0;
  friend auto operator<=>(const ProductState&, const ProductState&) = default;
};

struct TrajectoryStep {
  ProductState from;
  ActionId action = 0;
  ProductState to;
  EventId event = kNullEvent;  // automaton event emitted on arrival at `to`
};

struct Trajectory {
  ProductState start;
  std::vector<TrajectoryStep> steps;
  bool terminal_accepted = false;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
  ProductState final_state() const noexcept {
    return steps.empty() ? start : steps.back().to;
  }
  std::vector<EventId> events() const;
};

/// Environment composed with an automaton. Product states are indexed as
/// `env * |Q| + dfa`. Accepting automaton states are terminal.
class ProductMdp {
 public:
  ProductMdp(std::shared_ptr<const LabeledEnv> env, std::shared_ptr<const Dfa> dfa);

  const LabeledEnv& env() const noexcept { return *env_; }
  const Dfa& dfa() const noexcept { return *dfa_; }
  std::shared_ptr<const LabeledEnv> env_ptr() const noexcept { return env_; }
  std::shared_ptr<const Dfa> dfa_ptr() const noexcept { return dfa_; }

  std::size_t num_states() const noexcept {
    return env_->num_states() * dfa_->num_states();
  }
  std::size_t num_actions() const noexcept { return env_->num_actions(); }
  std::size_t horizon() const noexcept { return env_->max_steps(); }

  ProductState initial() const noexcept {
    return {env_->initial_state(), dfa_->initial()};
  }
  std::size_t index(ProductState ps) const noexcept {
    return ps.env * dfa_->num_states() + ps.dfa;
  }
  ProductState state(std::size_t index) const noexcept {
    return {index / dfa_->num_states(), index % dfa_->num_states()};
  }
  bool is_terminal(ProductState ps) const { return dfa_->is_accepting(ps.dfa); }

  // Automaton event for an environment event.
  EventId dfa_event(EnvEvent e) const { return event_map_.at(e); }

  struct Outcome {
    ProductState next;
    EventId event = kNullEvent;
  };
  Outcome step(ProductState ps, ActionId a, Rng& rng) const;

  // Every (env, dfa) pair in index order.
  std::vector<ProductState> enumerate_states() const;

  // Non-terminal product states reachable from the initial state.
  std::vector<bool> reachable_states() const;

 private:
  std::shared_ptr<const LabeledEnv> env_;
  std::shared_ptr<const Dfa> dfa_;
  std::vector<EventId> event_map_;
};

// Loads the bundled environment together with its automaton.
ProductMdp make_task(const std::string& env_name, const EnvParams& params = {});

using Policy = std::function<ActionId(const ProductState&, Rng&)>;

/// Simulates `policy` for at most `horizon` steps, stopping early when the
/// automaton accepts. Throws UsageError when horizon is zero.
Trajectory rollout(const ProductMdp& mdp, const Policy& policy, Rng& rng,
                   std::size_t horizon);
Trajectory rollout_from(const ProductMdp& mdp, ProductState start,
                        const Policy& policy, Rng& rng, std::size_t horizon);

Policy uniform_random_policy(std::size_t num_actions);

/// Throws UsageError if consecutive steps do not chain or an automaton state
/// disagrees with stepping the automaton on the recorded event.
void check_trajectory(const ProductMdp& mdp, const Trajectory& trajectory);

}  // namespace autopref
