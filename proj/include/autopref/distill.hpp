#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "autopref/learner.hpp"
#include "autopref/transition_values.hpp"

namespace autopref {

// One teacher step ((s, q), a, r, (s', q')) with the event seen on arrival.
struct ExperienceSample {
  ProductState from;
  ActionId action = 0;
  double reward = 0.0;
  ProductState to;
  EventId event = kNullEvent;
};

struct ExperienceSet {
  std::string source_env;
  std::vector<ExperienceSample> samples;
};

struct TeacherConfig {
  double epsilon = 0.1;
  RewardSource reward;  // reward recorded with each sample
};

/// Rolls out the teacher epsilon-greedily for `episodes` episodes up to the
/// task horizon, recording every step.
ExperienceSet collect_teacher_experience(const ProductMdp& mdp, const QTable& teacher,
                                         std::size_t episodes, Rng& rng,
                                         const TeacherConfig& config = {});

// Throws UsageError if a sample's automaton step disagrees with its event.
void check_experience(const ProductMdp& mdp, const ExperienceSet& experience);

using TransitionCounts = std::map<std::pair<DfaState, EventId>, std::size_t>;

TransitionCounts transition_counts(const ExperienceSet& experience);

/// Mean teacher Q-value of the sampled (state, action) per automaton
/// transition (q, e); unseen transitions are served `default_value`.
TransitionValueTable distill_values(const ProductMdp& mdp, const ExperienceSet& experience,
                                    const QTable& teacher, double default_value = 0.0);

}  // namespace autopref
