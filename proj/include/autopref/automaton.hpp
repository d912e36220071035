#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace autopref {

using DfaState = std::size_t;
using EventId = std::size_t;

// Event 0 of every automaton is the reserved null event: it is emitted when no
// proposition holds and always self-loops.
inline constexpr EventId kNullEvent = 0;
inline constexpr std::string_view kNullEventName = "null";

struct DfaRule {
  std::string from;
  std::string event;
  std::string to;
};

struct DfaTrace {
  std::vector<DfaState> visited;
  bool accepted = false;
  // Steps whose transition strictly decreased distance-to-acceptance.
  std::size_t progress_count = 0;
};

/// Deterministic finite automaton over single-symbol events.
///
/// The transition table is total: pairs without an explicit rule self-loop.
/// Shortest distances to acceptance are computed once at construction, so the
/// graph queries below are table lookups. Instances are immutable.
class Dfa {
 public:
  /// Validates and builds an automaton. `events` must not contain the null
  /// event; it is prepended implicitly. Throws UsageError on unknown names,
  /// duplicate declarations or duplicate (state, event) rules.
  static Dfa create(std::string name, std::vector<std::string> states,
                    std::vector<std::string> events, const std::string& initial,
                    const std::vector<std::string>& accepting,
                    std::span<const DfaRule> rules);

  const std::string& name() const noexcept { return name_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  // Includes the null event.
  std::size_t num_events() const noexcept { return events_.size(); }

  const std::string& state_name(DfaState q) const;
  const std::string& event_name(EventId e) const;
  DfaState state_index(std::string_view name) const;
  EventId event_index(std::string_view name) const;
  std::optional<EventId> find_event(std::string_view name) const;

  DfaState initial() const noexcept { return initial_; }
  bool is_accepting(DfaState q) const;

  DfaState step(DfaState q, EventId e) const;
  DfaTrace run_trace(std::span<const EventId> events) const;

  /// Length of the shortest non-null event word leading from `q` into an
  /// accepting state; nullopt when no accepting state is reachable.
  std::optional<std::size_t> distance_to_acceptance(DfaState q) const;

  /// Negated distance to acceptance. Throws UsageError for dead states.
  double potential(DfaState q) const;

  bool is_progress(DfaState q, EventId e) const;
  std::vector<EventId> progress_events(DfaState q) const;

  // Diameter of the state graph restricted to states that reach acceptance:
  // the largest finite distance_to_acceptance.
  std::size_t max_distance() const noexcept { return max_distance_; }

  // Declared (non-null) transitions, i.e. pairs that do not self-loop.
  std::vector<DfaRule> rules() const;

  friend bool operator==(const Dfa&, const Dfa&) = default;

 private:
  Dfa() = default;

  void check_state(DfaState q) const;
  void check_event(EventId e) const;

  std::string name_;
  std::vector<std::string> states_;
  std::vector<std::string> events_;
  DfaState initial_ = 0;
  std::vector<bool> accepting_;
  std::vector<DfaState> delta_;  // row-major [state][event]
  std::vector<std::optional<std::size_t>> distance_;
  std::size_t max_distance_ = 0;
};

/// Parses the line-oriented automaton document:
///
///     dfa <name>
///     events: a g
///     states: q0 q1 q2
///     initial: q0
///     accepting: q2
///     q0 -a-> q1
///
/// `#` starts a comment. Errors carry line and column.
Dfa parse_dfa(std::string_view text);

std::string serialize_dfa(const Dfa& dfa);

Dfa load_dfa(const std::filesystem::path& path);

}  // namespace autopref
