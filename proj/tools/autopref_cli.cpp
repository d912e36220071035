// Command-line front end over the C API.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autopref/autopref.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

struct ApFailure {
  ap_status status;
  std::string message;
};

void check(ap_status status) {
  if (status != AP_OK) throw ApFailure{status, ap_last_error()};
}

// Owns a string handed out by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  ap_string_free(s);
  return out;
}

struct ConfigDeleter {
  void operator()(ap_config* c) const { ap_config_free(c); }
};
using ConfigPtr = std::unique_ptr<ap_config, ConfigDeleter>;

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::vector<std::string> methods;
  std::string env;
  std::string data_dir;
  std::vector<std::string> overrides;  // section.key=value
};

void add_common(CLI::App* cmd, Options& o, bool with_method) {
  cmd->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "Random seed (repeatable)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--env", o.env, "Environment name (see list-envs)");
  if (with_method) cmd->add_option("--method", o.methods, "Method name (repeatable)");
  cmd->add_option("--data-dir", o.data_dir, "Directory with bundled layouts and automata");
  cmd->add_option("--set", o.overrides, "Override a configuration key: section.key=value");
}

std::string get(const ap_config* c, const char* key) {
  char* out = nullptr;
  check(ap_config_get(c, key, &out));
  return take(out);
}

ConfigPtr build_config(const Options& o) {
  if (!o.data_dir.empty()) check(ap_set_data_dir(o.data_dir.c_str()));
  ap_config* raw = nullptr;
  check(o.config.empty() ? ap_config_new(&raw) : ap_config_load(o.config.c_str(), &raw));
  ConfigPtr config(raw);
  for (const auto& item : o.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ApFailure{AP_ERR_INVALID_ARGUMENT, "--set expects section.key=value, got '" + item + "'"};
    }
    check(ap_config_set(config.get(), item.substr(0, eq).c_str(), item.substr(eq + 1).c_str()));
  }
  if (!o.env.empty()) check(ap_config_set(config.get(), "experiment.env", o.env.c_str()));
  if (!o.methods.empty()) {
    std::string list;
    for (const auto& m : o.methods) list += (list.empty() ? "" : " ") + m;
    check(ap_config_set(config.get(), "experiment.methods", list.c_str()));
  }
  if (!o.seeds.empty()) check(ap_config_set_seeds(config.get(), o.seeds.data(), o.seeds.size()));
  return config;
}

std::uint64_t first_seed(const ap_config* c) {
  std::istringstream in(get(c, "experiment.seeds"));
  std::uint64_t seed = 0;
  in >> seed;
  return seed;
}

fs::path out_dir(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw ApFailure{AP_ERR_IO, "cannot write " + path.string()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automaton-guided preference-based reinforcement learning"};
  app.require_subcommand(1);

  Options opts;
  std::string teacher_path;
  std::string values_path;

  auto* run = app.add_subcommand("run", "Run an experiment from a configuration");
  add_common(run, opts, true);

  auto* teacher = app.add_subcommand("teacher", "Train a teacher and save its Q-table");
  add_common(teacher, opts, false);

  auto* distill = app.add_subcommand("distill", "Distill transition values from a saved teacher");
  add_common(distill, opts, false);
  distill->add_option("--teacher", teacher_path, "Teacher Q-table (default <out>/teacher.qtable)");
  distill->add_option("--values", values_path,
                      "Output file (default <out>/transition_values.txt)");

  auto* validate = app.add_subcommand("validate", "Validate transition-value scoring");
  add_common(validate, opts, false);
  validate->add_option("--values", values_path,
                       "Transition values (default scoring.transition_values, "
                       "else <out>/transition_values.txt)");

  auto* theorem = app.add_subcommand("theorem-check", "Convergence check on a small fixture");
  add_common(theorem, opts, false);

  auto* list = app.add_subcommand("list-envs", "List bundled environments");
  list->add_option("--data-dir", opts.data_dir, "Directory with bundled layouts and automata");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      if (!opts.data_dir.empty()) check(ap_set_data_dir(opts.data_dir.c_str()));
      char* names = nullptr;
      check(ap_list_envs(&names));
      std::cout << take(names);
      return 0;
    }

    if (run->parsed() && !opts.out.empty()) {
      opts.overrides.push_back("experiment.output=" + opts.out);
    }
    ConfigPtr config = build_config(opts);

    if (run->parsed()) {
      char* summary = nullptr;
      int ok = 0;
      check(ap_run_experiment(config.get(), &summary, &ok));
      std::cout << take(summary);
      return ok ? 0 : kExitFailedCheck;
    }

    if (teacher->parsed()) {
      const fs::path path = out_dir(opts) / "teacher.qtable";
      check(ap_train_teacher(config.get(), first_seed(config.get()), path.c_str()));
      std::cout << "teacher Q-table: " << path.string() << '\n';
      return 0;
    }

    if (distill->parsed()) {
      const fs::path dir = out_dir(opts);
      const fs::path source = teacher_path.empty() ? dir / "teacher.qtable" : fs::path(teacher_path);
      const fs::path target =
          values_path.empty() ? dir / "transition_values.txt" : fs::path(values_path);
      check(ap_distill(config.get(), first_seed(config.get()), source.c_str(), target.c_str()));
      std::cout << "transition values: " << target.string() << '\n';
      return 0;
    }

    if (validate->parsed()) {
      const fs::path dir = out_dir(opts);
      fs::path source = values_path;
      if (source.empty()) {
        const std::string configured = get(config.get(), "scoring.transition_values");
        source = configured == "none" ? dir / "transition_values.txt" : fs::path(configured);
      }
      char* report = nullptr;
      check(ap_validate(config.get(), first_seed(config.get()), source.c_str(), &report, nullptr));
      const std::string text = take(report);
      write_text(dir / "validation.txt", text);
      std::cout << text;
      return 0;
    }

    if (theorem->parsed()) {
      char* report = nullptr;
      int passed = 0;
      check(ap_theorem_check(config.get(), first_seed(config.get()), &report, &passed));
      const std::string text = take(report);
      if (!opts.out.empty()) write_text(out_dir(opts) / "theorem_check.txt", text);
      std::cout << text;
      return passed ? 0 : kExitFailedCheck;
    }
  } catch (const ApFailure& e) {
    std::cerr << "error (" << ap_status_name(e.status) << "): " << e.message << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
