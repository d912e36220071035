#include "autopref/distill.hpp"

#include "autopref/error.hpp"

namespace autopref {

ExperienceSet collect_teacher_experience(const ProductMdp& mdp, const QTable& teacher,
                                         std::size_t episodes, Rng& rng,
                                         const TeacherConfig& config) {
  if (teacher.shape() != TableShape::of(mdp)) {
    throw UsageError("teacher Q-table does not match the task");
  }
  RewardSource src = config.reward;
  src.gamma = teacher.gamma();
  const RewardFn reward = make_reward_fn(mdp, src);
  const Policy policy = epsilon_greedy_policy(mdp, teacher, config.epsilon);

  ExperienceSet out;
  out.source_env = mdp.env().name();
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const Trajectory traj = rollout(mdp, policy, rng, mdp.horizon());
    for (const auto& st : traj.steps) {
      out.samples.push_back({st.from, st.action, reward(st), st.to, st.event});
    }
  }
  return out;
}

void check_experience(const ProductMdp& mdp, const ExperienceSet& experience) {
  for (std::size_t i = 0; i < experience.samples.size(); ++i) {
    const auto& s = experience.samples[i];
    if (mdp.dfa().step(s.from.dfa, s.event) != s.to.dfa) {
      throw UsageError("sample " + std::to_string(i) +
                       " disagrees with the automaton transition");
    }
  }
}

TransitionCounts transition_counts(const ExperienceSet& experience) {
  TransitionCounts counts;
  for (const auto& s : experience.samples) ++counts[{s.from.dfa, s.event}];
  return counts;
}

TransitionValueTable distill_values(const ProductMdp& mdp, const ExperienceSet& experience,
                                    const QTable& teacher, double default_value) {
  if (teacher.shape() != TableShape::of(mdp)) {
    throw UsageError("teacher Q-table does not match the task");
  }
  std::map<std::pair<DfaState, EventId>, std::pair<std::size_t, double>> sums;
  for (const auto& s : experience.samples) {
    auto& [n, total] = sums[{s.from.dfa, s.event}];
    ++n;
    total += teacher.q(mdp.index(s.from), s.action);
  }
  const Dfa& dfa = mdp.dfa();
  TransitionValueTable table(dfa.name(), default_value);
  for (const auto& [key, acc] : sums) {
    table.set(dfa.state_name(key.first), dfa.event_name(key.second), acc.first,
              acc.second / static_cast<double>(acc.first));
  }
  return table;
}

}  // namespace autopref
