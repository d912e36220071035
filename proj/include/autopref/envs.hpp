#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace autopref {

using EnvState = std::size_t;
using ActionId = std::size_t;
using Rng = std::mt19937_64;

struct GridPos {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

inline int manhattan(GridPos a, GridPos b) {
  const int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  const int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return dr + dc;
}

// Environment-local event index. 0 is the null event; the remaining entries
// name propositions that the paired automaton must declare.
using EnvEvent = std::size_t;

struct EnvStep {
  EnvState next = 0;
  EnvEvent event = 0;
};

/// Finite labeled environment: the non-Markovian decision process surface.
///
/// States are dense indices in [0, num_states()). Events fire on arrival:
/// a step that leaves the state unchanged emits the null event, so bumping
/// into a wall while standing on a labeled cell does not re-trigger it.
class LabeledEnv {
 public:
  virtual ~LabeledEnv() = default;

  const std::string& name() const noexcept { return name_; }
  std::size_t num_actions() const noexcept { return action_names_.size(); }
  const std::string& action_name(ActionId a) const;
  const std::vector<std::string>& events() const noexcept { return events_; }
  const std::string& event_name(EnvEvent e) const;

  // Cells (or terrain positions) where each event can fire.
  const std::map<std::string, std::vector<GridPos>>& subgoal_positions()
      const noexcept {
    return subgoal_positions_;
  }
  // Optional linear ordering of subgoal events; empty for branching tasks.
  const std::vector<std::string>& subgoal_order() const noexcept {
    return subgoal_order_;
  }
  std::size_t max_steps() const noexcept { return max_steps_; }

  virtual std::size_t num_states() const = 0;
  virtual EnvState initial_state() const = 0;
  virtual EnvStep step(EnvState s, ActionId a, Rng& rng) const = 0;
  // Proposition attached to the location of `s` (null if none).
  virtual EnvEvent label(EnvState s) const = 0;
  virtual GridPos position(EnvState s) const = 0;
  // Largest Manhattan distance between two positions of the map.
  virtual int diameter() const = 0;
  virtual bool is_deterministic() const { return true; }
  virtual bool is_grid() const { return false; }
  virtual std::string describe(EnvState s) const;

 protected:
  LabeledEnv() = default;

  std::string name_;
  std::vector<std::string> action_names_;
  std::vector<std::string> events_{"null"};
  std::map<std::string, std::vector<GridPos>> subgoal_positions_;
  std::vector<std::string> subgoal_order_;
  std::size_t max_steps_ = 200;

  EnvEvent intern_event(const std::string& name);
};

// ---------------------------------------------------------------------------
// Grid layouts

enum class GridRules {
  kPlain,       // labeled cells emit their event on arrival
  kCraftsman,   // wood/tool inventory folded into the state
};

/// Text grid map: `.` free, `#` blocked, `S` start, letters bound to events
/// through `key` lines.
///
///     env dungeon_quest
///     dfa dungeon_quest.dfa
///     horizon 200
///     actions 4
///     rules plain
///     order key chest shield dragon
///     key K key
///     grid
///     S..#..K
///     ...
///     end
struct GridLayout {
  std::string name;
  std::string dfa_file;
  std::size_t horizon = 200;
  std::size_t num_actions = 4;  // 4: up/down/left/right, 2: left/right
  GridRules rules = GridRules::kPlain;
  std::vector<std::string> order;
  std::vector<std::pair<char, std::string>> legend;
  int rows = 0;
  int cols = 0;
  std::vector<char> cells;  // row-major
  GridPos start;

  char at(GridPos p) const { return cells[p.row * cols + p.col]; }
  bool in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < rows && p.col >= 0 && p.col < cols;
  }
  bool blocked(GridPos p) const { return at(p) == '#'; }
  std::optional<std::string> event_at(GridPos p) const;

  friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

GridLayout parse_layout(std::string_view text);
std::string serialize_layout(const GridLayout& layout);
GridLayout load_layout(const std::filesystem::path& path);

/// Free cells reachable from the start by 4-connected moves (2-connected for
/// corridor layouts). Labeled cells are passable.
std::vector<bool> reachable_cells(const GridLayout& layout);

class GridEnv final : public LabeledEnv {
 public:
  explicit GridEnv(GridLayout layout);

  const GridLayout& layout() const noexcept { return layout_; }

  std::size_t num_states() const override;
  EnvState initial_state() const override;
  EnvStep step(EnvState s, ActionId a, Rng& rng) const override;
  EnvEvent label(EnvState s) const override;
  GridPos position(EnvState s) const override;
  int diameter() const override { return layout_.rows + layout_.cols - 2; }
  bool is_grid() const override { return true; }
  std::string describe(EnvState s) const override;

  // Craftsman inventory decomposition; plain grids report zeros.
  int wood(EnvState s) const;
  int tools(EnvState s) const;

  EnvState encode(GridPos p, int wood = 0, int tools = 0) const;

  static constexpr int kMaxWood = 2;
  static constexpr int kToolsNeeded = 3;

 private:
  std::size_t inventory_size() const;

  GridLayout layout_;
  std::vector<EnvEvent> cell_event_;
};

/// One-dimensional terrain with 20 positions, 5 energy levels and three
/// collected-item bits. Actions move one or two positions left/right or rest.
class MountainCarEnv final : public LabeledEnv {
 public:
  explicit MountainCarEnv(std::size_t horizon = 300);

  static constexpr int kPositions = 20;
  static constexpr int kEnergyLevels = 5;
  static constexpr int kMaxEnergy = kEnergyLevels - 1;
  static constexpr int kItems = 3;

  // Synthetic terrain profile and obstacle positions.
  static const std::vector<int>& heights();
  static const std::vector<int>& obstacles();

  enum Action : ActionId { kLeft1 = 0, kRight1, kLeft2, kRight2, kRest };

  std::size_t num_states() const override;
  EnvState initial_state() const override;
  EnvStep step(EnvState s, ActionId a, Rng& rng) const override;
  EnvEvent label(EnvState s) const override;
  GridPos position(EnvState s) const override;
  int diameter() const override { return kPositions - 1; }
  std::string describe(EnvState s) const override;

  int pos(EnvState s) const;
  int energy(EnvState s) const;
  unsigned items(EnvState s) const;
  EnvState encode(int pos, int energy, unsigned items) const;

  // Largest move length allowed at a given energy level.
  static int move_range(int energy);
  // Energy spent moving from `from` to `to`; includes obstacle penalties.
  static int move_cost(int from, int to);

 private:
  std::vector<EnvEvent> position_event_;
  std::vector<int> item_bit_;  // event -> item bit, -1 for the base station
};

// ---------------------------------------------------------------------------
// Registry

// Directory holding bundled `dfa/` and `layouts/` data. Resolution order:
// explicit override, AUTOPREF_DATA_DIR environment variable, build-time path.
std::filesystem::path data_dir();
void set_data_dir(std::filesystem::path dir);

std::vector<std::string> bundled_env_names();

struct EnvParams {
  std::optional<std::size_t> horizon;
  std::uint64_t student_seed = 0;  // obstacle placement of `<name>_student<N>`
};

// Besides bundled names and `.map` paths, `<grid>_student<N>` builds the
// N x N student variant of a bundled gridworld.

std::shared_ptr<const LabeledEnv> make_env(const std::string& name,
                                           const EnvParams& params = {});

// Name of the bundled automaton file paired with an environment.
std::filesystem::path bundled_dfa_path(const std::string& env_name);

/// Enlarges a gridworld to `size` x `size`, repositioning labeled cells and
/// adding obstacles deterministically from `obstacle_seed`. Equal sizes return
/// the source layout unchanged.
GridLayout build_student_layout(const GridLayout& source, int size,
                                std::uint64_t obstacle_seed);
std::shared_ptr<const GridEnv> build_student_variant(const LabeledEnv& env,
                                                     int size,
                                                     std::uint64_t obstacle_seed);

// Student grid sizes used for each teacher gridworld.
std::optional<int> default_student_size(const std::string& env_name);

}  // namespace autopref
