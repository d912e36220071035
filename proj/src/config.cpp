#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"
#include "text_io.hpp"

namespace autopref {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
  std::string path() const { return section + "." + key; }
};

[[noreturn]] void bad_value(const std::string& field, const std::string& value,
                            const std::string& expected) {
  throw ConfigError(field + ": expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(field, v, "a number");
  if (!std::isfinite(out)) {
    if (v == "inf" || v == "infinity") return out;
    bad_value(field, v, "a finite number");
  }
  return out;
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(field, v, "a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  bad_value(field, v, "true or false");
}

std::vector<std::string> to_list(const std::string& v) {
  std::string spaced = v;
  for (char& c : spaced) {
    if (c == ',') c = ' ';
  }
  return detail::split_words(spaced);
}

std::string fmt(double v) { return detail::format_double(v); }

// Field helpers ------------------------------------------------------------

template <typename Ref>
Field real(std::string section, std::string key, Ref ref) {
  std::string path = section + "." + key;
  return {std::move(section), std::move(key),
          [ref, path](ExperimentConfig& c, const std::string& v) {
            ref(c) = to_double(path, v);
          },
          [ref](const ExperimentConfig& c) {
            return fmt(ref(c));
          }};
}

template <typename Ref>
Field count(std::string section, std::string key, Ref ref) {
  std::string path = section + "." + key;
  return {std::move(section), std::move(key),
          [ref, path](ExperimentConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_cvref_t<decltype(ref(c))>>(to_u64(path, v));
          },
          [ref](const ExperimentConfig& c) {
            return std::to_string(ref(c));
          }};
}

#define AP_REF(expr) [](auto& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    // [experiment]
    f.push_back({"experiment", "env",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty()) throw ConfigError("experiment.env: must not be empty");
                   c.env = v;
                 },
                 [](const ExperimentConfig& c) { return c.env; }});
    f.push_back({"experiment", "methods",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.methods.clear();
                   for (const auto& name : to_list(v)) {
                     auto m = parse_method(name);
                     if (!m) bad_value("experiment.methods", name, "a method name");
                     c.methods.push_back(*m);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (Method m : c.methods) {
                     if (!out.empty()) out += ' ';
                     out += method_name(m);
                   }
                   return out;
                 }});
    f.push_back({"experiment", "seeds",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.seeds.clear();
                   for (const auto& s : to_list(v)) c.seeds.push_back(to_u64("experiment.seeds", s));
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (auto s : c.seeds) {
                     if (!out.empty()) out += ' ';
                     out += std::to_string(s);
                   }
                   return out;
                 }});
    f.push_back({"experiment", "output",
                 [](ExperimentConfig& c, const std::string& v) { c.output = v; },
                 [](const ExperimentConfig& c) { return c.output.string(); }});
    f.push_back({"experiment", "horizon",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "default") {
                     c.horizon.reset();
                   } else {
                     c.horizon = to_u64("experiment.horizon", v);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.horizon ? std::to_string(*c.horizon) : std::string("default");
                 }});
    f.push_back(count("experiment", "student_seed", AP_REF(c.student_seed)));
    f.push_back({"experiment", "snapshots",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.snapshots = to_bool("experiment.snapshots", v);
                 },
                 [](const ExperimentConfig& c) { return std::string(c.snapshots ? "true" : "false"); }});

    // [scoring]
    f.push_back(real("scoring", "subgoal_weight", AP_REF(c.weights.subgoal)));
    f.push_back(real("scoring", "distance_weight", AP_REF(c.weights.distance)));
    f.push_back(real("scoring", "transition_value_weight", AP_REF(c.weights.transition_value)));
    f.push_back({"scoring", "transition_values",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty() || v == "none") {
                     c.transition_values.reset();
                   } else {
                     c.transition_values = v;
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.transition_values ? c.transition_values->string() : std::string("none");
                 }});

    // [learner]
    f.push_back(real("learner", "alpha", AP_REF(c.learner.alpha)));
    f.push_back(real("learner", "gamma", AP_REF(c.learner.gamma)));
    f.push_back(count("learner", "episodes", AP_REF(c.learner.episodes)));
    f.push_back(real("learner", "epsilon_start", AP_REF(c.learner.epsilon.start)));
    f.push_back(real("learner", "epsilon_end", AP_REF(c.learner.epsilon.end)));
    f.push_back(real("learner", "epsilon_fraction", AP_REF(c.learner.epsilon.fraction)));

    // [reward_model]
    f.push_back(count("reward_model", "init_trajectories", AP_REF(c.learner.init_trajectories)));
    f.push_back(count("reward_model", "all_pairs_limit", AP_REF(c.learner.pairing.all_pairs_limit)));
    f.push_back(count("reward_model", "sampled_pairs", AP_REF(c.learner.pairing.sampled_pairs)));
    f.push_back(real("reward_model", "margin", AP_REF(c.learner.margin)));
    f.push_back(real("reward_model", "gamma", AP_REF(c.learner.reward_gamma)));
    f.push_back(real("reward_model", "learning_rate", AP_REF(c.learner.reward_train.learning_rate)));
    f.push_back(count("reward_model", "epochs", AP_REF(c.learner.reward_train.epochs)));
    f.push_back(real("reward_model", "l2", AP_REF(c.learner.reward_train.l2)));
    f.push_back({"reward_model", "cost_offset",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "none") {
                     c.learner.cost_offset.reset();
                   } else {
                     c.learner.cost_offset = to_double("reward_model.cost_offset", v);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return c.learner.cost_offset ? fmt(*c.learner.cost_offset) : std::string("none");
                 }});

    // [dynamic]
    f.push_back(count("dynamic", "iterations", AP_REF(c.learner.iterations)));
    f.push_back(count("dynamic", "block", AP_REF(c.learner.block)));
    f.push_back(count("dynamic", "window", AP_REF(c.learner.window)));
    f.push_back(real("dynamic", "stability_tol", AP_REF(c.learner.stability_tol)));
    f.push_back(count("dynamic", "trajectories_per_iteration",
                      AP_REF(c.learner.trajectories_per_iteration)));
    f.push_back(count("dynamic", "cross_pairs", AP_REF(c.learner.cross_pairs)));

    // [anneal]
    f.push_back(real("anneal", "rho", AP_REF(c.learner.rho)));

    // [rewards]
    f.push_back(real("rewards", "known_subgoal", AP_REF(c.known.subgoal)));
    f.push_back(real("rewards", "known_out_of_order", AP_REF(c.known.out_of_order)));
    f.push_back(real("rewards", "known_goal", AP_REF(c.known.goal)));
    f.push_back(real("rewards", "known_premature_goal", AP_REF(c.known.premature_goal)));
    f.push_back(real("rewards", "known_step", AP_REF(c.known.step)));
    f.push_back(real("rewards", "rm_progress", AP_REF(c.rm.progress)));
    f.push_back(real("rewards", "rm_out_of_order", AP_REF(c.rm.out_of_order)));
    f.push_back(real("rewards", "rm_accept", AP_REF(c.rm.accept)));
    f.push_back(real("rewards", "rm_step", AP_REF(c.rm.step)));
    f.push_back(real("rewards", "lpopl_accept", AP_REF(c.lpopl.accept)));
    f.push_back(real("rewards", "lpopl_step", AP_REF(c.lpopl.step)));

    // [teacher]
    f.push_back({"teacher", "reward",
                 [](ExperimentConfig& c, const std::string& v) {
                   auto k = parse_reward_kind(v);
                   if (!k || *k == RewardKind::kLearned) {
                     bad_value("teacher.reward", v,
                               "known, reward_machine, lpopl, lpopl_base, distill_shaping or step_cost");
                   }
                   c.teacher.reward = *k;
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(reward_kind_name(c.teacher.reward));
                 }});
    f.push_back(count("teacher", "episodes", AP_REF(c.teacher.episodes)));
    f.push_back(count("teacher", "experience_episodes", AP_REF(c.teacher.experience_episodes)));
    f.push_back(real("teacher", "epsilon", AP_REF(c.teacher.epsilon)));
    f.push_back(real("teacher", "default_value", AP_REF(c.teacher.default_value)));

    // [validate]
    f.push_back(count("validate", "trajectories", AP_REF(c.validation.trajectories)));
    f.push_back(count("validate", "rollouts", AP_REF(c.validation.rollouts)));
    f.push_back(real("validate", "policy_epsilon", AP_REF(c.validation.policy_epsilon)));

    // [theorem]
    f.push_back(real("theorem", "epsilon", AP_REF(c.theorem.epsilon)));
    f.push_back(real("theorem", "delta0", AP_REF(c.theorem.delta0)));
    f.push_back(real("theorem", "confidence", AP_REF(c.theorem.confidence)));
    f.push_back(count("theorem", "horizon", AP_REF(c.theorem.horizon)));
    f.push_back(count("theorem", "trials", AP_REF(c.theorem.trials)));
    f.push_back(count("theorem", "episodes", AP_REF(c.theorem.episodes)));
    f.push_back(real("theorem", "exploration", AP_REF(c.theorem.exploration)));
    f.push_back(count("theorem", "max_epochs", AP_REF(c.theorem.max_epochs)));
    return f;
  }();
  return table;
}

#undef AP_REF

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string path = section + "." + key;
      const Field* field = nullptr;
      for (const auto& f : fields()) {
        if (f.section == section && f.key == key) field = &f;
      }
      if (!field) throw ConfigError(path + ": unknown configuration key");
      field->set(config, value.data());
    }
  }
  check_config(config);
  return config;
}

void set_config_value(ExperimentConfig& config, std::string_view path, std::string_view value) {
  const std::string name(path);
  for (const auto& f : fields()) {
    if (f.path() != name) continue;
    ExperimentConfig updated = config;
    f.set(updated, std::string(value));
    check_config(updated);
    config = std::move(updated);
    return;
  }
  throw ConfigError(name + ": unknown configuration key");
}

std::string get_config_value(const ExperimentConfig& config, std::string_view path) {
  for (const auto& f : fields()) {
    if (f.path() == path) return f.get(config);
  }
  throw ConfigError(std::string(path) + ": unknown configuration key");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::read_file(path));
}

void check_config(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(!c.seeds.empty(), "experiment.seeds: at least one seed is required");
  require(!c.methods.empty(), "experiment.methods: at least one method is required");
  require(!c.horizon || *c.horizon > 0, "experiment.horizon: must be positive");
  require(c.weights.subgoal >= 0 && c.weights.distance >= 0 && c.weights.transition_value >= 0,
          "scoring: weights must be non-negative");
  require(c.learner.alpha >= 0 && c.learner.alpha <= 1, "learner.alpha: must lie in [0, 1]");
  require(c.learner.gamma >= 0 && c.learner.gamma < 1, "learner.gamma: must lie in [0, 1)");
  const auto& eps = c.learner.epsilon;
  require(eps.start >= 0 && eps.start <= 1 && eps.end >= 0 && eps.end <= 1,
          "learner.epsilon_start/epsilon_end: must lie in [0, 1]");
  require(eps.fraction >= 0 && eps.fraction <= 1, "learner.epsilon_fraction: must lie in [0, 1]");
  require(c.learner.init_trajectories >= 2, "reward_model.init_trajectories: must be at least 2");
  require(c.learner.margin > 0, "reward_model.margin: must be positive");
  require(c.learner.reward_gamma > 0 && c.learner.reward_gamma < 1,
          "reward_model.gamma: must lie in (0, 1)");
  require(c.learner.reward_train.learning_rate >= 0,
          "reward_model.learning_rate: must be non-negative");
  require(c.learner.reward_train.l2 >= 0, "reward_model.l2: must be non-negative");
  require(!c.learner.cost_offset || *c.learner.cost_offset >= 0,
          "reward_model.cost_offset: must be non-negative or 'none'");
  require(c.learner.iterations > 0, "dynamic.iterations: must be positive");
  require(c.learner.block > 0, "dynamic.block: must be positive");
  require(c.learner.window > 0, "dynamic.window: must be positive");
  require(c.learner.stability_tol >= 0, "dynamic.stability_tol: must be non-negative");
  require(c.learner.rho > 0 && c.learner.rho < 1, "anneal.rho: must lie in (0, 1)");
  require(c.teacher.epsilon >= 0 && c.teacher.epsilon <= 1, "teacher.epsilon: must lie in [0, 1]");
  require(c.validation.trajectories >= 30, "validate.trajectories: must be at least 30");
  require(c.validation.rollouts >= 1, "validate.rollouts: must be positive");
  require(c.theorem.epsilon >= 0, "theorem.epsilon: must be non-negative");
  require(c.theorem.confidence > 0 && c.theorem.confidence < 1,
          "theorem.confidence: must lie in (0, 1)");
  require(c.theorem.trials > 0, "theorem.trials: must be positive");
  require(c.theorem.horizon > 0, "theorem.horizon: must be positive");
  for (Method m : c.methods) {
    if (needs_transition_values(m) && !c.transition_values) {
      throw ConfigError("scoring.transition_values: method '" + std::string(method_name(m)) +
                        "' needs a transition-value file");
    }
  }
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

}  // namespace autopref
