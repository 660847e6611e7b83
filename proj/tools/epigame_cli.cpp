/*
 * Copyright (C) 2026 The epigame authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// epigame: command-line front end for the coupled epidemic/behaviour models.
//
//   epigame simulate   --config run.ini [--out DIR] [--epsilon E] [--dt H] [--t-end T] [--check]
//   epigame reduced    --config run.ini ...
//   epigame equilibria --config run.ini
//   epigame classify   --config run.ini
//   epigame bifurcate  --config sweep.ini [--jobs N]
//   epigame preset NAME [--out DIR] [--jobs N] [--check] [--print-config]
//   epigame list-presets

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "epigame/scenario.hpp"

namespace {

std::string read_document(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled epidemic and protection-behaviour dynamics: simulation, equilibria, sliding modes, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  unsigned jobs = 1;
  bool check = false;
  epigame::Overrides overrides;
  double dt = 0.0, epsilon = 0.0, t_end = 0.0;

  auto* dt_opt = app.add_option("--dt", dt, "fixed step size (overrides config)")->check(CLI::PositiveNumber);
  auto* eps_opt = app.add_option("--epsilon", epsilon, "timescale separation in (0, 1] (overrides config)")
                      ->check(CLI::Range(0.0, 1.0));
  auto* tend_opt = app.add_option("--t-end", t_end, "integration horizon (overrides config)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "directory for artifacts")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads for sweeps and multi-run presets")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.add_flag("--check", check, "exit nonzero when a run misses every predicted attractor (tolerance 0.01)");

  struct Command {
    const char* name;
    const char* help;
    epigame::Action action;
  };
  const Command commands[] = {
      {"simulate", "integrate the configured model and write a trajectory CSV", epigame::Action::simulate},
      {"reduced", "integrate the fast-behaviour reduction (Filippov sliding) of the configured model",
       epigame::Action::reduced},
      {"equilibria", "report every equilibrium with existence, eigenvalues and stability",
       epigame::Action::equilibria},
      {"classify", "print the regime predicted by the analytic classifiers", epigame::Action::classify},
      {"bifurcate", "sweep the recovery rate and write equilibrium branches", epigame::Action::bifurcate},
  };
  std::vector<std::pair<CLI::App*, epigame::Action>> config_commands;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "scenario file ('-' for stdin)")->required();
    config_commands.emplace_back(sub, c.action);
  }

  std::string preset_name;
  bool print_config = false;
  auto* preset = app.add_subcommand("preset", "run a named experiment preset");
  preset->add_option("name", preset_name, "preset name (see list-presets)")->required();
  preset->add_flag("--print-config", print_config, "print the preset's scenario files instead of running them");
  auto* list = app.add_subcommand("list-presets", "list the named presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : epigame::exit_usage;
  }

  if (*dt_opt) overrides.dt = dt;
  if (*eps_opt) overrides.epsilon = epsilon;
  if (*tend_opt) overrides.t_end = t_end;

  epigame::RunOptions options;
  options.out_dir = out_dir;
  options.jobs = jobs;
  options.check = check;

  try {
    if (*list) {
      for (const auto& [name, description] : epigame::list_presets()) std::cout << name << "  " << description << '\n';
      return epigame::exit_ok;
    }

    if (*preset) {
      const auto p = epigame::find_preset(preset_name);
      if (print_config) {
        for (auto c : p.runs) {
          epigame::apply_overrides(c, overrides);
          std::cout << "# --- " << c.name << '\n' << epigame::render_config(c) << '\n';
        }
        return epigame::exit_ok;
      }
      int status = epigame::exit_ok;
      for (const auto& r : epigame::run_preset(p, options, overrides)) {
        std::cout << r.summary;
        status = std::max(status, r.status);
      }
      return status;
    }

    for (const auto& [sub, action] : config_commands) {
      if (!*sub) continue;
      auto config = epigame::parse_config(read_document(config_path));
      epigame::apply_overrides(config, overrides);
      options.action = action;
      const auto r = epigame::run_scenario(config, options);
      std::cout << r.summary;
      return r.status;
    }
  } catch (const epigame::ConfigError& e) {
    std::cerr << "epigame: " << config_path << ": " << e.what() << '\n';
    return epigame::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "epigame: " << e.what() << '\n';
    return epigame::exit_error;
  }
  return epigame::exit_usage;
}
