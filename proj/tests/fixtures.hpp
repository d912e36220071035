#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "autopref/product.hpp"

namespace fx {

using namespace autopref;

// chain3 actions.
inline constexpr ActionId kLeft = 0;
inline constexpr ActionId kRight = 1;

// grid actions.
inline constexpr ActionId kUp = 0;
inline constexpr ActionId kDown = 1;
inline constexpr ActionId kWest = 2;
inline constexpr ActionId kEast = 3;

inline const ProductMdp& task(const std::string& name) {
  static std::vector<std::pair<std::string, ProductMdp>> cache;
  for (auto& [n, m] : cache) {
    if (n == name) return m;
  }
  cache.emplace_back(name, make_task(name));
  return cache.back().second;
}

inline const ProductMdp& chain3() { return task("chain3"); }

// Replays actions from `start`, stopping if the automaton accepts.
inline Trajectory play_from(const ProductMdp& mdp, ProductState start,
                            std::initializer_list<ActionId> actions) {
  Rng rng(0);
  Trajectory t;
  t.start = start;
  ProductState ps = start;
  for (ActionId a : actions) {
    if (mdp.is_terminal(ps)) break;
    const auto out = mdp.step(ps, a, rng);
    t.steps.push_back({ps, a, out.next, out.event});
    ps = out.next;
  }
  t.terminal_accepted = mdp.is_terminal(ps);
  return t;
}

inline Trajectory play(const ProductMdp& mdp, std::initializer_list<ActionId> actions) {
  return play_from(mdp, mdp.initial(), actions);
}

inline std::vector<std::string> bundled_tasks() {
  return {"chain3", "dungeon_quest", "dungeon_quest_3x3", "iron_sword", "building_bridge",
          "blind_craftsman", "mountain_car"};
}

}  // namespace fx
