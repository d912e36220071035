#include "autopref/transition_values.hpp"

#include <sstream>

#include "autopref/error.hpp"
#include "text_io.hpp"

namespace autopref {

void TransitionValueTable::set(std::string state, std::string event,
                               std::size_t count, double value) {
  if (count == 0) throw UsageError("transition entries need a positive count");
  entries_[{std::move(state), std::move(event)}] = {count, value};
}

double TransitionValueTable::value(std::string_view state,
                                   std::string_view event) const {
  auto it = entries_.find({std::string(state), std::string(event)});
  return it == entries_.end() ? default_ : it->second.value;
}

double TransitionValueTable::value(const Dfa& dfa, DfaState q, EventId e) const {
  return value(dfa.state_name(q), dfa.event_name(e));
}

std::size_t TransitionValueTable::count(std::string_view state,
                                        std::string_view event) const {
  auto it = entries_.find({std::string(state), std::string(event)});
  return it == entries_.end() ? 0 : it->second.count;
}

std::string serialize_transition_values(const TransitionValueTable& table) {
  std::ostringstream out;
  out << "transition-values " << table.dfa_name() << '\n';
  out << "default " << detail::format_double(table.default_value()) << '\n';
  for (const auto& [key, entry] : table.entries()) {
    out << key.first << ' ' << key.second << ' ' << entry.count << ' '
        << detail::format_double(entry.value) << '\n';
  }
  return out.str();
}

TransitionValueTable parse_transition_values(std::string_view text) {
  const auto lines = detail::tokenized_lines(text);
  if (lines.size() < 2 || lines[0].second.size() != 2 ||
      lines[0].second[0] != "transition-values") {
    throw ParseError(lines.empty() ? 1 : lines[0].first, 1,
                     "expected 'transition-values <dfa-name>' header");
  }
  if (lines[1].second.size() != 2 || lines[1].second[0] != "default") {
    throw ParseError(lines[1].first, 1, "expected 'default <value>'");
  }
  TransitionValueTable table(lines[0].second[1],
                             detail::parse_double(lines[1].second[1], lines[1].first));
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto& [line_no, w] = lines[i];
    if (w.size() != 4) throw ParseError(line_no, 1, "expected 'q event count value'");
    const std::size_t count = detail::parse_index(w[2], line_no);
    if (count == 0) throw ParseError(line_no, 1, "entry count must be positive");
    if (table.count(w[0], w[1]) != 0) {
      throw ParseError(line_no, 1, "duplicate entry (" + w[0] + ", " + w[1] + ")");
    }
    table.set(w[0], w[1], count, detail::parse_double(w[3], line_no));
  }
  return table;
}

void save_transition_values(const TransitionValueTable& table,
                            const std::filesystem::path& path) {
  detail::write_file(path, serialize_transition_values(table));
}

TransitionValueTable load_transition_values(const std::filesystem::path& path) {
  return parse_transition_values(detail::read_file(path));
}

}  // namespace autopref
