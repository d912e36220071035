#include "autopref/autopref.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "autopref/error.hpp"
#include "autopref/harness.hpp"

struct ap_config {
  autopref::ExperimentConfig value;
};

namespace {

thread_local std::string g_last_error;

ap_status fail(ap_status status, const char* what) {
  g_last_error = what;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
ap_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return AP_OK;
  } catch (const autopref::ParseError& e) {
    return fail(AP_ERR_PARSE, e.what());
  } catch (const autopref::ConfigError& e) {
    return fail(AP_ERR_CONFIG, e.what());
  } catch (const autopref::IoError& e) {
    return fail(AP_ERR_IO, e.what());
  } catch (const autopref::DivergenceError& e) {
    return fail(AP_ERR_DIVERGED, e.what());
  } catch (const autopref::UsageError& e) {
    return fail(AP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AP_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw autopref::UsageError(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

autopref::ProductMdp task_for(const ap_config* config) {
  return autopref::make_experiment_task(config->value);
}

}  // namespace

extern "C" {

const char* ap_last_error(void) { return g_last_error.c_str(); }

void ap_string_free(char* s) { std::free(s); }

const char* ap_status_name(ap_status status) {
  switch (status) {
    case AP_OK: return "ok";
    case AP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AP_ERR_PARSE: return "parse error";
    case AP_ERR_IO: return "i/o error";
    case AP_ERR_CONFIG: return "configuration error";
    case AP_ERR_DIVERGED: return "training diverged";
    case AP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ap_status ap_set_data_dir(const char* path) {
  return guarded([&] {
    require(path && *path, "data directory must be a non-empty path");
    autopref::set_data_dir(path);
  });
}

ap_status ap_list_envs(char** out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    std::string text;
    for (const auto& name : autopref::bundled_env_names()) text += name + '\n';
    *out = copy_string(text);
  });
}

ap_status ap_config_new(ap_config** out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    *out = new ap_config{};
  });
}

ap_status ap_config_parse(const char* text, ap_config** out) {
  return guarded([&] {
    require(text && out, "text and out must not be NULL");
    *out = new ap_config{autopref::parse_config(text)};
  });
}

ap_status ap_config_load(const char* path, ap_config** out) {
  return guarded([&] {
    require(path && out, "path and out must not be NULL");
    *out = new ap_config{autopref::load_config(path)};
  });
}

void ap_config_free(ap_config* config) { delete config; }

ap_status ap_config_set(ap_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value must not be NULL");
    autopref::set_config_value(config->value, key, value);
  });
}

ap_status ap_config_get(const ap_config* config, const char* key, char** out) {
  return guarded([&] {
    require(config && key && out, "config, key and out must not be NULL");
    *out = copy_string(autopref::get_config_value(config->value, key));
  });
}

ap_status ap_config_set_seeds(ap_config* config, const uint64_t* seeds, size_t count) {
  return guarded([&] {
    require(config && (seeds || count == 0), "config and seeds must not be NULL");
    if (count == 0) throw autopref::ConfigError("experiment.seeds: at least one seed is required");
    config->value.seeds.assign(seeds, seeds + count);
  });
}

ap_status ap_config_format(const ap_config* config, char** out) {
  return guarded([&] {
    require(config && out, "config and out must not be NULL");
    *out = copy_string(autopref::format_config(config->value));
  });
}

ap_status ap_run_experiment(const ap_config* config, char** summary, int* all_ok) {
  return guarded([&] {
    require(config, "config must not be NULL");
    const auto result = autopref::run_experiment(config->value);
    if (all_ok) *all_ok = result.ok() ? 1 : 0;
    if (summary) *summary = copy_string(autopref::format_summary(config->value, result));
  });
}

ap_status ap_train_teacher(const ap_config* config, uint64_t seed, const char* qtable_path) {
  return guarded([&] {
    require(config && qtable_path, "config and path must not be NULL");
    const auto mdp = task_for(config);
    autopref::Rng rng(seed);
    autopref::save_q_table(autopref::train_teacher(mdp, config->value, rng), qtable_path);
  });
}

ap_status ap_distill(const ap_config* config, uint64_t seed, const char* teacher_path,
                     const char* values_path) {
  return guarded([&] {
    require(config && teacher_path && values_path, "arguments must not be NULL");
    const auto mdp = task_for(config);
    const auto teacher = autopref::load_q_table(teacher_path);
    if (!(teacher.shape() == autopref::TableShape::of(mdp))) {
      throw autopref::UsageError("teacher Q-table does not match environment '" +
                                 config->value.env + "'");
    }
    autopref::Rng rng(seed);
    const auto table = autopref::distill_teacher(mdp, teacher, config->value.teacher, rng);
    autopref::save_transition_values(table, values_path);
  });
}

ap_status ap_validate(const ap_config* config, uint64_t seed, const char* values_path,
                      char** report, ap_validation_summary* summary) {
  return guarded([&] {
    require(config && values_path, "config and values path must not be NULL");
    const auto mdp = task_for(config);
    const auto values = autopref::load_transition_values(values_path);
    autopref::Rng rng(seed);
    const auto r = autopref::validate_scoring(mdp, values, config->value.validation,
                                              config->value.learner, rng);
    if (summary) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      summary->pearson_reward = r.pearson_reward.value_or(nan);
      summary->spearman_subgoals = r.spearman_subgoals.value_or(nan);
      summary->above_median_success = r.above_median_success;
      summary->below_median_success = r.below_median_success;
    }
    if (report) *report = copy_string(autopref::format_validation_report(r));
  });
}

ap_status ap_theorem_check(const ap_config* config, uint64_t seed, char** report, int* passed) {
  return guarded([&] {
    require(config, "config must not be NULL");
    const auto mdp = task_for(config);
    const auto r = autopref::check_convergence_theorem(mdp, config->value.theorem,
                                                       config->value.learner, seed);
    if (passed) *passed = r.passed ? 1 : 0;
    if (report) *report = copy_string(autopref::format_convergence_report(r, config->value.theorem));
  });
}

}  // extern "C"
