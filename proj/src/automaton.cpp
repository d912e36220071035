#include "autopref/automaton.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "autopref/error.hpp"

namespace autopref {

namespace {

std::size_t position_of(const std::vector<std::string>& names,
                        std::string_view name, const char* kind) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw UsageError(std::string("unknown ") + kind + " '" + std::string(name) +
                     "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

void require_unique(const std::vector<std::string>& names, const char* kind) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      if (names[i] == names[j]) {
        throw UsageError(std::string("duplicate ") + kind + " '" + names[i] +
                         "'");
      }
    }
  }
}

}  // namespace

Dfa Dfa::create(std::string name, std::vector<std::string> states,
                std::vector<std::string> events, const std::string& initial,
                const std::vector<std::string>& accepting,
                std::span<const DfaRule> rules) {
  if (states.empty()) throw UsageError("automaton has no states");
  require_unique(states, "state");
  require_unique(events, "event");
  if (std::find(events.begin(), events.end(), kNullEventName) != events.end()) {
    throw UsageError("event name 'null' is reserved");
  }

  Dfa dfa;
  dfa.name_ = std::move(name);
  dfa.states_ = std::move(states);
  dfa.events_.reserve(events.size() + 1);
  dfa.events_.emplace_back(kNullEventName);
  for (auto& e : events) dfa.events_.push_back(std::move(e));

  const std::size_t n_states = dfa.states_.size();
  const std::size_t n_events = dfa.events_.size();

  dfa.initial_ = position_of(dfa.states_, initial, "state");
  dfa.accepting_.assign(n_states, false);
  for (const auto& q : accepting) {
    dfa.accepting_[position_of(dfa.states_, q, "state")] = true;
  }

  dfa.delta_.resize(n_states * n_events);
  for (DfaState q = 0; q < n_states; ++q) {
    for (EventId e = 0; e < n_events; ++e) dfa.delta_[q * n_events + e] = q;
  }
  std::vector<bool> seen(n_states * n_events, false);
  for (const auto& rule : rules) {
    const DfaState from = position_of(dfa.states_, rule.from, "state");
    const DfaState to = position_of(dfa.states_, rule.to, "state");
    const EventId e = position_of(dfa.events_, rule.event, "event");
    if (e == kNullEvent) throw UsageError("the null event cannot be written");
    const std::size_t slot = from * n_events + e;
    if (seen[slot]) {
      throw UsageError("duplicate transition for (" + rule.from + ", " +
                       rule.event + ")");
    }
    seen[slot] = true;
    dfa.delta_[slot] = to;
  }

  // Reverse BFS from the accepting set over non-null edges.
  std::vector<std::vector<DfaState>> predecessors(n_states);
  for (DfaState q = 0; q < n_states; ++q) {
    for (EventId e = 1; e < n_events; ++e) {
      const DfaState next = dfa.delta_[q * n_events + e];
      if (next != q) predecessors[next].push_back(q);
    }
  }
  dfa.distance_.assign(n_states, std::nullopt);
  std::deque<DfaState> frontier;
  for (DfaState q = 0; q < n_states; ++q) {
    if (dfa.accepting_[q]) {
      dfa.distance_[q] = 0;
      frontier.push_back(q);
    }
  }
  while (!frontier.empty()) {
    const DfaState q = frontier.front();
    frontier.pop_front();
    for (DfaState p : predecessors[q]) {
      if (!dfa.distance_[p]) {
        dfa.distance_[p] = *dfa.distance_[q] + 1;
        dfa.max_distance_ = std::max(dfa.max_distance_, *dfa.distance_[p]);
        frontier.push_back(p);
      }
    }
  }
  return dfa;
}

void Dfa::check_state(DfaState q) const {
  if (q >= states_.size()) {
    throw UsageError("automaton state index " + std::to_string(q) +
                     " out of range");
  }
}

void Dfa::check_event(EventId e) const {
  if (e >= events_.size()) {
    throw UsageError("event index " + std::to_string(e) + " out of range");
  }
}

const std::string& Dfa::state_name(DfaState q) const {
  check_state(q);
  return states_[q];
}

const std::string& Dfa::event_name(EventId e) const {
  check_event(e);
  return events_[e];
}

DfaState Dfa::state_index(std::string_view name) const {
  return position_of(states_, name, "state");
}

EventId Dfa::event_index(std::string_view name) const {
  return position_of(events_, name, "event");
}

std::optional<EventId> Dfa::find_event(std::string_view name) const {
  auto it = std::find(events_.begin(), events_.end(), name);
  if (it == events_.end()) return std::nullopt;
  return static_cast<EventId>(it - events_.begin());
}

bool Dfa::is_accepting(DfaState q) const {
  check_state(q);
  return accepting_[q];
}

DfaState Dfa::step(DfaState q, EventId e) const {
  check_state(q);
  check_event(e);
  return delta_[q * events_.size() + e];
}

DfaTrace Dfa::run_trace(std::span<const EventId> events) const {
  DfaTrace trace;
  trace.visited.reserve(events.size() + 1);
  trace.visited.push_back(initial_);
  DfaState q = initial_;
  for (EventId e : events) {
    if (is_progress(q, e)) ++trace.progress_count;
    q = step(q, e);
    trace.visited.push_back(q);
  }
  trace.accepted = accepting_[q];
  return trace;
}

std::optional<std::size_t> Dfa::distance_to_acceptance(DfaState q) const {
  check_state(q);
  return distance_[q];
}

double Dfa::potential(DfaState q) const {
  const auto d = distance_to_acceptance(q);
  if (!d) {
    throw UsageError("automaton state '" + states_[q] +
                     "' cannot reach acceptance; potential undefined");
  }
  return -static_cast<double>(*d);
}

bool Dfa::is_progress(DfaState q, EventId e) const {
  const DfaState next = step(q, e);
  const auto here = distance_[q];
  const auto there = distance_[next];
  return here && there && *there < *here;
}

std::vector<EventId> Dfa::progress_events(DfaState q) const {
  std::vector<EventId> out;
  for (EventId e = 1; e < events_.size(); ++e) {
    if (is_progress(q, e)) out.push_back(e);
  }
  return out;
}

std::vector<DfaRule> Dfa::rules() const {
  std::vector<DfaRule> out;
  const std::size_t n_events = events_.size();
  for (DfaState q = 0; q < states_.size(); ++q) {
    for (EventId e = 1; e < n_events; ++e) {
      const DfaState next = delta_[q * n_events + e];
      if (next != q) out.push_back({states_[q], events_[e], states_[next]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

std::vector<std::string> names_after(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    out.emplace_back(tokens[i].text);
  }
  return out;
}

}  // namespace

Dfa parse_dfa(std::string_view text) {
  std::optional<std::string> name;
  std::optional<std::vector<std::string>> events;
  std::optional<std::vector<std::string>> states;
  std::optional<std::string> initial;
  std::optional<std::vector<std::string>> accepting;
  struct PendingRule {
    DfaRule rule;
    std::size_t line;
    std::size_t from_col;
    std::size_t event_col;
    std::size_t to_col;
  };
  std::vector<PendingRule> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    const std::string_view head = tokens[0].text;
    auto once = [&](bool already, const char* what) {
      if (already) {
        throw ParseError(line_no, tokens[0].column,
                         std::string("duplicate '") + what + "' declaration");
      }
    };
    if (head == "dfa") {
      once(name.has_value(), "dfa");
      if (tokens.size() != 2) {
        throw ParseError(line_no, tokens[0].column,
                         "expected 'dfa <name>'");
      }
      name = std::string(tokens[1].text);
    } else if (head == "events:") {
      once(events.has_value(), "events");
      events = names_after(tokens);
    } else if (head == "states:") {
      once(states.has_value(), "states");
      states = names_after(tokens);
      if (states->empty()) {
        throw ParseError(line_no, tokens[0].column, "empty state list");
      }
    } else if (head == "initial:") {
      once(initial.has_value(), "initial");
      if (tokens.size() != 2) {
        throw ParseError(line_no, tokens[0].column,
                         "expected exactly one initial state");
      }
      initial = std::string(tokens[1].text);
    } else if (head == "accepting:") {
      once(accepting.has_value(), "accepting");
      accepting = names_after(tokens);
    } else if (tokens.size() == 3 && tokens[1].text.size() > 3 &&
               tokens[1].text.starts_with('-') &&
               tokens[1].text.ends_with("->")) {
      const std::string_view arrow = tokens[1].text;
      PendingRule r;
      r.rule.from = std::string(tokens[0].text);
      r.rule.event = std::string(arrow.substr(1, arrow.size() - 3));
      r.rule.to = std::string(tokens[2].text);
      r.line = line_no;
      r.from_col = tokens[0].column;
      r.event_col = tokens[1].column + 1;
      r.to_col = tokens[2].column;
      pending.push_back(std::move(r));
    } else {
      throw ParseError(line_no, tokens[0].column,
                       "unrecognised line '" + std::string(line) + "'");
    }
  }

  const std::size_t eof_line = line_no;
  if (!name) throw ParseError(eof_line, 1, "missing dfa name");
  if (!events) throw ParseError(eof_line, 1, "missing events");
  if (!states) throw ParseError(eof_line, 1, "missing states");
  if (!initial) throw ParseError(eof_line, 1, "missing initial");
  if (!accepting) throw ParseError(eof_line, 1, "missing accepting");

  // Reference checks here so errors point at the offending line.
  auto known = [](const std::vector<std::string>& set, const std::string& s) {
    return std::find(set.begin(), set.end(), s) != set.end();
  };
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& p : pending) {
    if (!known(*states, p.rule.from)) {
      throw ParseError(p.line, p.from_col,
                       "unknown state '" + p.rule.from + "'");
    }
    if (!known(*states, p.rule.to)) {
      throw ParseError(p.line, p.to_col, "unknown state '" + p.rule.to + "'");
    }
    if (!known(*events, p.rule.event)) {
      throw ParseError(p.line, p.event_col,
                       "unknown event '" + p.rule.event + "'");
    }
    std::pair<std::string, std::string> key{p.rule.from, p.rule.event};
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
      throw ParseError(p.line, p.from_col,
                       "duplicate transition for (" + p.rule.from + ", " +
                           p.rule.event + ")");
    }
    keys.push_back(std::move(key));
  }
  if (!known(*states, *initial)) {
    throw ParseError(eof_line, 1, "unknown initial state '" + *initial + "'");
  }
  for (const auto& q : *accepting) {
    if (!known(*states, q)) {
      throw ParseError(eof_line, 1, "unknown accepting state '" + q + "'");
    }
  }

  std::vector<DfaRule> rules;
  rules.reserve(pending.size());
  for (auto& p : pending) rules.push_back(std::move(p.rule));
  try {
    return Dfa::create(*name, *states, *events, *initial, *accepting, rules);
  } catch (const UsageError& e) {
    throw ParseError(eof_line, 1, e.what());
  }
}

std::string serialize_dfa(const Dfa& dfa) {
  std::ostringstream out;
  out << "dfa " << dfa.name() << '\n';
  out << "events:";
  for (EventId e = 1; e < dfa.num_events(); ++e) out << ' ' << dfa.event_name(e);
  out << "\nstates:";
  for (DfaState q = 0; q < dfa.num_states(); ++q) out << ' ' << dfa.state_name(q);
  out << "\ninitial: " << dfa.state_name(dfa.initial()) << "\naccepting:";
  for (DfaState q = 0; q < dfa.num_states(); ++q) {
    if (dfa.is_accepting(q)) out << ' ' << dfa.state_name(q);
  }
  out << '\n';
  for (const auto& r : dfa.rules()) {
    out << r.from << " -" << r.event << "-> " << r.to << '\n';
  }
  return out.str();
}

Dfa load_dfa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open automaton file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dfa(buffer.str());
}

}  // namespace autopref
