#include "autopref/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>

#include "autopref/error.hpp"

#ifndef AUTOPREF_DEFAULT_DATA_DIR
#define AUTOPREF_DEFAULT_DATA_DIR "data"
#endif

namespace autopref {

// ---------------------------------------------------------------------------
// LabeledEnv

const std::string& LabeledEnv::action_name(ActionId a) const {
  if (a >= action_names_.size()) {
    throw UsageError("action index " + std::to_string(a) + " out of range");
  }
  return action_names_[a];
}

const std::string& LabeledEnv::event_name(EnvEvent e) const {
  if (e >= events_.size()) {
    throw UsageError("event index " + std::to_string(e) + " out of range");
  }
  return events_[e];
}

std::string LabeledEnv::describe(EnvState s) const {
  const GridPos p = position(s);
  return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

EnvEvent LabeledEnv::intern_event(const std::string& name) {
  auto it = std::find(events_.begin(), events_.end(), name);
  if (it != events_.end()) return static_cast<EnvEvent>(it - events_.begin());
  events_.push_back(name);
  return events_.size() - 1;
}

// ---------------------------------------------------------------------------
// Layout text format

std::optional<std::string> GridLayout::event_at(GridPos p) const {
  const char c = at(p);
  for (const auto& [symbol, event] : legend) {
    if (symbol == c) return event;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(line, 1, "expected a non-negative integer, got '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

GridLayout parse_layout(std::string_view text) {
  GridLayout layout;
  std::vector<std::string> rows;
  std::optional<GridPos> start_line;
  std::optional<GridPos> start_char;
  bool in_grid = false;
  bool grid_done = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    if (in_grid) {
      const auto words = split_words(raw);
      if (words.size() == 1 && words[0] == "end") {
        in_grid = false;
        grid_done = true;
        continue;
      }
      if (words.size() != 1) {
        throw ParseError(line_no, 1, "grid rows must be a single token");
      }
      rows.push_back(words[0]);
      continue;
    }

    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      // '#' only starts a comment outside the grid block.
      raw = raw.substr(0, hash);
    }
    const auto words = split_words(raw);
    if (words.empty()) continue;
    const std::string& head = words[0];
    auto arity = [&](std::size_t n) {
      if (words.size() != n) {
        throw ParseError(line_no, 1, "malformed '" + head + "' line");
      }
    };
    if (head == "env") {
      arity(2);
      layout.name = words[1];
    } else if (head == "dfa") {
      arity(2);
      layout.dfa_file = words[1];
    } else if (head == "horizon") {
      arity(2);
      layout.horizon = parse_count(words[1], line_no);
      if (layout.horizon == 0) throw ParseError(line_no, 1, "horizon must be positive");
    } else if (head == "actions") {
      arity(2);
      layout.num_actions = parse_count(words[1], line_no);
      if (layout.num_actions != 2 && layout.num_actions != 4) {
        throw ParseError(line_no, 1, "actions must be 2 or 4");
      }
    } else if (head == "rules") {
      arity(2);
      if (words[1] == "plain") {
        layout.rules = GridRules::kPlain;
      } else if (words[1] == "craftsman") {
        layout.rules = GridRules::kCraftsman;
      } else {
        throw ParseError(line_no, 1, "unknown rules '" + words[1] + "'");
      }
    } else if (head == "order") {
      layout.order.assign(words.begin() + 1, words.end());
    } else if (head == "key") {
      arity(3);
      if (words[1].size() != 1 || words[1][0] == '.' || words[1][0] == 'S') {
        throw ParseError(line_no, 1, "key symbol must be a single letter");
      }
      layout.legend.emplace_back(words[1][0], words[2]);
    } else if (head == "start") {
      arity(3);
      start_line = GridPos{static_cast<int>(parse_count(words[1], line_no)),
                           static_cast<int>(parse_count(words[2], line_no))};
    } else if (head == "grid") {
      arity(1);
      if (grid_done) throw ParseError(line_no, 1, "duplicate grid block");
      in_grid = true;
    } else {
      throw ParseError(line_no, 1, "unrecognised line '" + head + "'");
    }
  }
  if (in_grid) throw ParseError(line_no, 1, "grid block not terminated by 'end'");
  if (layout.name.empty()) throw ParseError(line_no, 1, "missing env name");
  if (rows.empty()) throw ParseError(line_no, 1, "missing grid");

  layout.rows = static_cast<int>(rows.size());
  layout.cols = static_cast<int>(rows[0].size());
  layout.cells.reserve(layout.rows * layout.cols);
  for (int r = 0; r < layout.rows; ++r) {
    if (static_cast<int>(rows[r].size()) != layout.cols) {
      throw ParseError(line_no, 1, "ragged grid row " + std::to_string(r));
    }
    for (int c = 0; c < layout.cols; ++c) {
      char ch = rows[r][c];
      if (ch == 'S') {
        if (start_char) throw ParseError(line_no, 1, "multiple start cells");
        start_char = GridPos{r, c};
        ch = '.';
      } else if (ch != '.' && ch != '#') {
        const bool known = std::any_of(layout.legend.begin(), layout.legend.end(),
                                       [&](const auto& kv) { return kv.first == ch; });
        if (!known) {
          throw ParseError(line_no, 1,
                           std::string("grid symbol '") + ch + "' has no key");
        }
      }
      layout.cells.push_back(ch);
    }
  }
  if (start_line && start_char) {
    throw ParseError(line_no, 1, "start given both as 'S' and a start line");
  }
  if (!start_line && !start_char) throw ParseError(line_no, 1, "missing start");
  layout.start = start_line ? *start_line : *start_char;
  if (!layout.in_bounds(layout.start) || layout.blocked(layout.start)) {
    throw ParseError(line_no, 1, "start cell is outside the grid or blocked");
  }
  return layout;
}

std::string serialize_layout(const GridLayout& layout) {
  std::ostringstream out;
  out << "env " << layout.name << '\n';
  if (!layout.dfa_file.empty()) out << "dfa " << layout.dfa_file << '\n';
  out << "horizon " << layout.horizon << '\n';
  out << "actions " << layout.num_actions << '\n';
  out << "rules " << (layout.rules == GridRules::kPlain ? "plain" : "craftsman")
      << '\n';
  if (!layout.order.empty()) {
    out << "order";
    for (const auto& e : layout.order) out << ' ' << e;
    out << '\n';
  }
  for (const auto& [symbol, event] : layout.legend) {
    out << "key " << symbol << ' ' << event << '\n';
  }
  out << "start " << layout.start.row << ' ' << layout.start.col << '\n';
  out << "grid\n";
  for (int r = 0; r < layout.rows; ++r) {
    out.write(layout.cells.data() + r * layout.cols, layout.cols);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

GridLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_layout(buffer.str());
}

namespace {

constexpr std::array<GridPos, 4> kMoves4{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
constexpr std::array<GridPos, 2> kMoves2{{{0, -1}, {0, 1}}};

GridPos offset(GridPos p, GridPos d) { return {p.row + d.row, p.col + d.col}; }

}  // namespace

std::vector<bool> reachable_cells(const GridLayout& layout) {
  std::vector<bool> seen(layout.cells.size(), false);
  std::deque<GridPos> frontier{layout.start};
  seen[layout.start.row * layout.cols + layout.start.col] = true;
  while (!frontier.empty()) {
    const GridPos p = frontier.front();
    frontier.pop_front();
    auto visit = [&](GridPos d) {
      const GridPos n = offset(p, d);
      if (!layout.in_bounds(n) || layout.blocked(n)) return;
      const std::size_t idx = n.row * layout.cols + n.col;
      if (seen[idx]) return;
      seen[idx] = true;
      frontier.push_back(n);
    };
    if (layout.num_actions == 2) {
      for (auto d : kMoves2) visit(d);
    } else {
      for (auto d : kMoves4) visit(d);
    }
  }
  return seen;
}

// ---------------------------------------------------------------------------
// GridEnv

GridEnv::GridEnv(GridLayout layout) : layout_(std::move(layout)) {
  name_ = layout_.name;
  max_steps_ = layout_.horizon;
  if (layout_.num_actions == 2) {
    action_names_ = {"left", "right"};
  } else {
    action_names_ = {"up", "down", "left", "right"};
  }
  subgoal_order_ = layout_.order;
  for (const auto& [symbol, event] : layout_.legend) intern_event(event);

  cell_event_.assign(layout_.cells.size(), 0);
  for (int r = 0; r < layout_.rows; ++r) {
    for (int c = 0; c < layout_.cols; ++c) {
      const GridPos p{r, c};
      if (auto ev = layout_.event_at(p)) {
        cell_event_[r * layout_.cols + c] = intern_event(*ev);
        subgoal_positions_[*ev].push_back(p);
      }
    }
  }
  if (layout_.rules == GridRules::kCraftsman) {
    for (const char* needed : {"wood", "factory", "home"}) {
      if (!subgoal_positions_.contains(needed)) {
        throw UsageError(std::string("craftsman layout lacks a '") + needed +
                         "' cell");
      }
    }
  }
}

std::size_t GridEnv::inventory_size() const {
  return layout_.rules == GridRules::kCraftsman
             ? static_cast<std::size_t>((kMaxWood + 1) * (kToolsNeeded + 1))
             : 1;
}

std::size_t GridEnv::num_states() const {
  return layout_.cells.size() * inventory_size();
}

EnvState GridEnv::encode(GridPos p, int wood, int tools) const {
  const std::size_t cell = p.row * layout_.cols + p.col;
  if (layout_.rules != GridRules::kCraftsman) return cell;
  return (cell * (kMaxWood + 1) + wood) * (kToolsNeeded + 1) + tools;
}

EnvState GridEnv::initial_state() const { return encode(layout_.start); }

GridPos GridEnv::position(EnvState s) const {
  if (s >= num_states()) throw UsageError("grid state index out of range");
  const std::size_t cell = s / inventory_size();
  return {static_cast<int>(cell / layout_.cols), static_cast<int>(cell % layout_.cols)};
}

int GridEnv::wood(EnvState s) const {
  if (layout_.rules != GridRules::kCraftsman) return 0;
  return static_cast<int>((s / (kToolsNeeded + 1)) % (kMaxWood + 1));
}

int GridEnv::tools(EnvState s) const {
  if (layout_.rules != GridRules::kCraftsman) return 0;
  return static_cast<int>(s % (kToolsNeeded + 1));
}

EnvEvent GridEnv::label(EnvState s) const {
  const GridPos p = position(s);
  return cell_event_[p.row * layout_.cols + p.col];
}

EnvStep GridEnv::step(EnvState s, ActionId a, Rng& /*rng*/) const {
  if (a >= num_actions()) throw UsageError("action index out of range");
  const GridPos here = position(s);
  const GridPos delta = layout_.num_actions == 2 ? kMoves2[a] : kMoves4[a];
  const GridPos there = offset(here, delta);
  if (!layout_.in_bounds(there) || layout_.blocked(there)) return {s, 0};

  const EnvEvent cell_ev = cell_event_[there.row * layout_.cols + there.col];
  if (layout_.rules == GridRules::kPlain) return {encode(there), cell_ev};

  int w = wood(s);
  int t = tools(s);
  EnvEvent ev = 0;
  const std::string& name = events_[cell_ev];
  if (name == "wood") {
    if (w < kMaxWood && w + t < kToolsNeeded) {
      ++w;
      ev = cell_ev;
    }
  } else if (name == "factory") {
    if (w >= 1 && t < kToolsNeeded) {
      --w;
      ++t;
      ev = cell_ev;
    }
  } else if (name == "home") {
    if (t == kToolsNeeded) ev = cell_ev;
  } else {
    ev = cell_ev;
  }
  return {encode(there, w, t), ev};
}

std::string GridEnv::describe(EnvState s) const {
  std::string out = LabeledEnv::describe(s);
  if (layout_.rules == GridRules::kCraftsman) {
    out += " wood=" + std::to_string(wood(s)) + " tools=" + std::to_string(tools(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// MountainCarEnv

namespace {

constexpr int kStartPos = 1;
struct TerrainItem {
  const char* event;
  int pos;
};
constexpr std::array<TerrainItem, 4> kTerrainItems{{
    {"power", 6}, {"sensor", 12}, {"crystal", 17}, {"base", 0}}};

}  // namespace

const std::vector<int>& MountainCarEnv::heights() {
  static const std::vector<int> h{0, 0, 1, 1, 2, 2, 1, 0, 1, 2,
                                  3, 2, 1, 1, 2, 3, 2, 1, 0, 0};
  return h;
}

const std::vector<int>& MountainCarEnv::obstacles() {
  static const std::vector<int> o{5, 10, 15};
  return o;
}

MountainCarEnv::MountainCarEnv(std::size_t horizon) {
  name_ = "mountain_car";
  max_steps_ = horizon;
  action_names_ = {"left1", "right1", "left2", "right2", "rest"};
  subgoal_order_ = {"power", "sensor", "crystal", "base"};
  position_event_.assign(kPositions, 0);
  item_bit_.assign(kTerrainItems.size() + 1, -1);
  for (std::size_t i = 0; i < kTerrainItems.size(); ++i) {
    const EnvEvent e = intern_event(kTerrainItems[i].event);
    position_event_[kTerrainItems[i].pos] = e;
    subgoal_positions_[kTerrainItems[i].event].push_back({0, kTerrainItems[i].pos});
    if (i < static_cast<std::size_t>(kItems)) item_bit_[e] = static_cast<int>(i);
  }
}

std::size_t MountainCarEnv::num_states() const {
  return static_cast<std::size_t>(kPositions) * kEnergyLevels * (1u << kItems);
}

EnvState MountainCarEnv::encode(int p, int e, unsigned bits) const {
  return (static_cast<std::size_t>(p) * kEnergyLevels + e) * (1u << kItems) + bits;
}

EnvState MountainCarEnv::initial_state() const {
  return encode(kStartPos, kMaxEnergy, 0);
}

int MountainCarEnv::pos(EnvState s) const {
  if (s >= num_states()) throw UsageError("terrain state index out of range");
  return static_cast<int>(s / ((1u << kItems) * kEnergyLevels));
}

int MountainCarEnv::energy(EnvState s) const {
  return static_cast<int>((s / (1u << kItems)) % kEnergyLevels);
}

unsigned MountainCarEnv::items(EnvState s) const {
  return static_cast<unsigned>(s % (1u << kItems));
}

GridPos MountainCarEnv::position(EnvState s) const { return {0, pos(s)}; }

EnvEvent MountainCarEnv::label(EnvState s) const { return position_event_[pos(s)]; }

int MountainCarEnv::move_range(int e) {
  if (e <= 0) return 0;
  return e <= 2 ? 1 : 2;
}

int MountainCarEnv::move_cost(int from, int to) {
  const auto& h = heights();
  int cost = 1 + std::max(0, h[to] - h[from]);
  const int lo = std::min(from, to);
  const int hi = std::max(from, to);
  // Crossing or landing on an obstacle costs extra; leaving one is free.
  for (int o : obstacles()) {
    if (o != from && o >= lo && o <= hi) ++cost;
  }
  return cost;
}

EnvStep MountainCarEnv::step(EnvState s, ActionId a, Rng& /*rng*/) const {
  if (a >= num_actions()) throw UsageError("action index out of range");
  const int p = pos(s);
  const int e = energy(s);
  unsigned bits = items(s);
  if (a == kRest) {
    if (e == kMaxEnergy) return {s, 0};
    return {encode(p, e + 1, bits), 0};
  }
  const int length = (a == kLeft2 || a == kRight2) ? 2 : 1;
  const int dir = (a == kLeft1 || a == kLeft2) ? -1 : 1;
  const int to = p + dir * length;
  if (to < 0 || to >= kPositions || length > move_range(e)) return {s, 0};
  const int cost = move_cost(p, to);
  if (cost > e) return {s, 0};
  const EnvEvent ev = position_event_[to];
  if (ev != 0 && item_bit_[ev] >= 0) bits |= 1u << item_bit_[ev];
  return {encode(to, e - cost, bits), ev};
}

std::string MountainCarEnv::describe(EnvState s) const {
  return "pos=" + std::to_string(pos(s)) + " energy=" + std::to_string(energy(s)) +
         " items=" + std::to_string(items(s));
}

// ---------------------------------------------------------------------------
// Registry

namespace {

std::optional<std::filesystem::path>& data_dir_override() {
  static std::optional<std::filesystem::path> dir;
  return dir;
}

const std::vector<std::string>& grid_env_names() {
  static const std::vector<std::string> names{
      "iron_sword", "dungeon_quest", "blind_craftsman", "building_bridge",
      "chain3", "dungeon_quest_3x3"};
  return names;
}

}  // namespace

std::filesystem::path data_dir() {
  if (data_dir_override()) return *data_dir_override();
  if (const char* env = std::getenv("AUTOPREF_DATA_DIR"); env && *env) {
    return env;
  }
  return AUTOPREF_DEFAULT_DATA_DIR;
}

void set_data_dir(std::filesystem::path dir) { data_dir_override() = std::move(dir); }

std::vector<std::string> bundled_env_names() {
  std::vector<std::string> names = grid_env_names();
  names.insert(names.begin() + 4, "mountain_car");
  return names;
}

namespace {

// Splits `iron_sword_student10` into ("iron_sword", 10).
std::optional<std::pair<std::string, int>> split_student_name(const std::string& name) {
  const auto pos = name.rfind("_student");
  if (pos == std::string::npos || pos == 0) return std::nullopt;
  const std::string digits = name.substr(pos + 8);
  if (digits.empty() || digits.size() > 4 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return std::make_pair(name.substr(0, pos), std::stoi(digits));
}

}  // namespace

std::shared_ptr<const LabeledEnv> make_env(const std::string& name,
                                           const EnvParams& params) {
  if (params.horizon && *params.horizon == 0) {
    throw UsageError("environment horizon must be positive");
  }
  if (auto student = split_student_name(name)) {
    const auto base = make_env(student->first);
    GridLayout layout = build_student_layout(
        dynamic_cast<const GridEnv&>(*base).layout(), student->second, params.student_seed);
    if (params.horizon) layout.horizon = *params.horizon;
    return std::make_shared<GridEnv>(std::move(layout));
  }
  if (name == "mountain_car") {
    return std::make_shared<MountainCarEnv>(params.horizon.value_or(300));
  }
  std::filesystem::path path;
  const auto& names = grid_env_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) {
    path = data_dir() / "layouts" / (name + ".map");
  } else if (name.ends_with(".map")) {
    path = name;
  } else {
    throw UsageError("unknown environment '" + name + "'");
  }
  GridLayout layout = load_layout(path);
  if (params.horizon) layout.horizon = *params.horizon;
  return std::make_shared<GridEnv>(std::move(layout));
}

std::filesystem::path bundled_dfa_path(const std::string& env_name) {
  if (auto student = split_student_name(env_name)) return bundled_dfa_path(student->first);
  if (env_name == "mountain_car") return data_dir() / "dfa" / "mountain_car.dfa";
  std::filesystem::path layout_path =
      env_name.ends_with(".map") ? std::filesystem::path(env_name)
                                 : data_dir() / "layouts" / (env_name + ".map");
  const GridLayout layout = load_layout(layout_path);
  if (layout.dfa_file.empty()) {
    throw UsageError("layout '" + layout.name + "' names no automaton file");
  }
  return data_dir() / "dfa" / layout.dfa_file;
}

std::optional<int> default_student_size(const std::string& env_name) {
  if (env_name == "iron_sword") return 10;
  if (env_name == "dungeon_quest") return 15;
  if (env_name == "blind_craftsman") return 12;
  if (env_name == "building_bridge") return 20;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Student variants

namespace {

int scale_coord(int v, int from_extent, int to_extent) {
  if (from_extent <= 1) return 0;
  return static_cast<int>(std::lround(static_cast<double>(v) * (to_extent - 1) /
                                      (from_extent - 1)));
}

}  // namespace

GridLayout build_student_layout(const GridLayout& source, int size,
                                std::uint64_t obstacle_seed) {
  if (size < source.rows || size < source.cols) {
    throw UsageError("student size " + std::to_string(size) +
                     " is smaller than the source grid");
  }
  if (size == source.rows && size == source.cols) return source;

  Rng rng(obstacle_seed);
  std::uniform_int_distribution<int> jitter(-2, 2);

  std::size_t source_blocked = 0;
  for (char c : source.cells) source_blocked += c == '#';
  const double density =
      static_cast<double>(source_blocked) / static_cast<double>(source.cells.size()) +
      0.08;

  for (int attempt = 0; attempt < 1000; ++attempt) {
    GridLayout out = source;
    out.name = source.name + "_student" + std::to_string(size);
    out.horizon = 500;
    out.rows = size;
    out.cols = size;
    out.cells.assign(static_cast<std::size_t>(size) * size, '.');
    std::vector<bool> taken(out.cells.size(), false);

    auto scaled = [&](GridPos p) {
      return GridPos{scale_coord(p.row, source.rows, size),
                     scale_coord(p.col, source.cols, size)};
    };
    auto place = [&](GridPos target) {
      for (int tries = 0; tries < 64; ++tries) {
        GridPos p{target.row + jitter(rng), target.col + jitter(rng)};
        p.row = std::clamp(p.row, 0, size - 1);
        p.col = std::clamp(p.col, 0, size - 1);
        if (!taken[p.row * size + p.col]) return p;
      }
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          if (!taken[r * size + c]) return GridPos{r, c};
        }
      }
      throw Error("student grid has no free cell");
    };

    out.start = place(scaled(source.start));
    taken[out.start.row * size + out.start.col] = true;
    for (int r = 0; r < source.rows; ++r) {
      for (int c = 0; c < source.cols; ++c) {
        const GridPos p{r, c};
        const char ch = source.at(p);
        if (ch == '.' || ch == '#') continue;
        GridPos q;
        if (p == source.start) {
          q = out.start;
        } else {
          q = place(scaled(p));
        }
        out.cells[q.row * size + q.col] = ch;
        taken[q.row * size + q.col] = true;
      }
    }

    const auto obstacle_count =
        static_cast<std::size_t>(std::lround(density * out.cells.size()));
    std::uniform_int_distribution<std::size_t> cell_pick(0, out.cells.size() - 1);
    std::size_t placed = 0;
    for (std::size_t guard = 0; placed < obstacle_count && guard < 100 * obstacle_count;
         ++guard) {
      const std::size_t idx = cell_pick(rng);
      if (taken[idx] || out.cells[idx] == '#') continue;
      out.cells[idx] = '#';
      ++placed;
    }

    const auto reach = reachable_cells(out);
    bool ok = true;
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
      if (out.cells[i] != '.' && out.cells[i] != '#' && !reach[i]) ok = false;
    }
    if (ok) return out;
  }
  throw Error("could not generate a connected student layout for '" +
              source.name + "'");
}

std::shared_ptr<const GridEnv> build_student_variant(const LabeledEnv& env,
                                                     int size,
                                                     std::uint64_t obstacle_seed) {
  const auto* grid = dynamic_cast<const GridEnv*>(&env);
  if (!grid) throw UsageError("'" + env.name() + "' is not a gridworld");
  return std::make_shared<GridEnv>(
      build_student_layout(grid->layout(), size, obstacle_seed));
}

}  // namespace autopref
