#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "autopref/automaton.hpp"

namespace autopref {

/// Averaged teacher Q-values keyed by automaton transition (q, event).
///
/// Keys are stored by name so a table distilled against one copy of an
/// automaton can be read back against another with the same alphabet.
class TransitionValueTable {
 public:
  struct Entry {
    std::size_t count = 0;
    double value = 0.0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  using Key = std::pair<std::string, std::string>;  // (state, event)

  TransitionValueTable() = default;
  TransitionValueTable(std::string dfa_name, double default_value)
      : dfa_name_(std::move(dfa_name)), default_(default_value) {}

  const std::string& dfa_name() const noexcept { return dfa_name_; }
  double default_value() const noexcept { return default_; }
  const std::map<Key, Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  void set(std::string state, std::string event, std::size_t count, double value);

  // Value for (q, e); the default when the pair was never observed.
  double value(std::string_view state, std::string_view event) const;
  double value(const Dfa& dfa, DfaState q, EventId e) const;
  std::size_t count(std::string_view state, std::string_view event) const;

  friend bool operator==(const TransitionValueTable&,
                         const TransitionValueTable&) = default;

 private:
  std::string dfa_name_;
  double default_ = 0.0;
  std::map<Key, Entry> entries_;
};

// Text format: `transition-values <dfa-name>`, `default <value>`, then one
// `q event count value` line per entry. Values use round-trip precision.
std::string serialize_transition_values(const TransitionValueTable& table);
TransitionValueTable parse_transition_values(std::string_view text);
void save_transition_values(const TransitionValueTable& table,
                            const std::filesystem::path& path);
TransitionValueTable load_transition_values(const std::filesystem::path& path);

}  // namespace autopref
