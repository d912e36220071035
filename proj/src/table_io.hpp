#pragma once

// Dense (env state, automaton state, action) tables as text, shared by the
// reward and policy snapshots.

#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "autopref/reward_model.hpp"
#include "text_io.hpp"

namespace autopref::detail {

struct DenseTable {
  TableShape shape;
  std::map<std::string, double> params;  // header scalars, e.g. gamma
  std::vector<double> values;
};

inline std::string serialize_dense(std::string_view tag, const TableShape& shape,
                                   const std::vector<std::pair<std::string, double>>& params,
                                   std::span<const double> values) {
  std::ostringstream out;
  out << tag << '\n';
  out << "shape " << shape.env_states << ' ' << shape.dfa_states << ' '
      << shape.actions << '\n';
  for (const auto& [key, v] : params) out << key << ' ' << format_double(v) << '\n';
  for (std::size_t s = 0; s < shape.env_states; ++s) {
    for (std::size_t q = 0; q < shape.dfa_states; ++q) {
      for (std::size_t a = 0; a < shape.actions; ++a) {
        out << s << ' ' << q << ' ' << a << ' '
            << format_double(values[shape.index(s, q, a)]) << '\n';
      }
    }
  }
  return out.str();
}

// Every param named in `required` must appear exactly once; every table
// entry must appear exactly once.
inline DenseTable parse_dense(std::string_view text, std::string_view tag,
                              const std::vector<std::string>& required) {
  const auto lines = tokenized_lines(text);
  if (lines.empty() || lines[0].second.size() != 1 || lines[0].second[0] != tag) {
    throw ParseError(lines.empty() ? 1 : lines[0].first, 1,
                     "expected '" + std::string(tag) + "' header");
  }
  if (lines.size() < 2 || lines[1].second.size() != 4 || lines[1].second[0] != "shape") {
    throw ParseError(lines.size() < 2 ? lines[0].first : lines[1].first, 1,
                     "expected 'shape <env-states> <dfa-states> <actions>'");
  }
  DenseTable table;
  const std::size_t shape_line = lines[1].first;
  table.shape = {parse_index(lines[1].second[1], shape_line),
                 parse_index(lines[1].second[2], shape_line),
                 parse_index(lines[1].second[3], shape_line)};
  std::size_t i = 2;
  for (; i < lines.size() && lines[i].second.size() == 2; ++i) {
    const auto& [line_no, w] = lines[i];
    if (table.params.contains(w[0])) {
      throw ParseError(line_no, 1, "duplicate parameter '" + w[0] + "'");
    }
    table.params[w[0]] = parse_double(w[1], line_no);
  }
  for (const auto& key : required) {
    if (!table.params.contains(key)) {
      throw ParseError(lines[1].first, 1, "missing parameter '" + key + "'");
    }
  }
  table.values.assign(table.shape.size(), 0.0);
  std::vector<bool> seen(table.shape.size(), false);
  for (; i < lines.size(); ++i) {
    const auto& [line_no, w] = lines[i];
    if (w.size() != 4) throw ParseError(line_no, 1, "expected 's q a value'");
    const std::size_t s = parse_index(w[0], line_no);
    const std::size_t q = parse_index(w[1], line_no);
    const std::size_t a = parse_index(w[2], line_no);
    if (!table.shape.contains(s, q, a)) {
      throw ParseError(line_no, 1, "entry outside the declared shape");
    }
    const std::size_t idx = table.shape.index(s, q, a);
    if (seen[idx]) throw ParseError(line_no, 1, "duplicate entry");
    seen[idx] = true;
    table.values[idx] = parse_double(w[3], line_no);
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw ParseError(lines.back().first, 1,
                       "table has " + std::to_string(table.shape.size()) +
                           " entries but some are missing");
    }
  }
  return table;
}

}  // namespace autopref::detail
