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
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epigame/scenario.hpp"
#include "oracles.hpp"

using namespace epigame;
namespace fs = std::filesystem;

namespace {

const char* kSisConfig = R"([model]
kind = sis
name = table

[params]
beta_u = 0.3
beta_p = 0.15
alpha = 0.5
gamma = 0.1
c_P = 1
c_IU = 2
c_IP = 1
L = 80

[initial]
y = 0.2
z_S = 0.5
z_I = 0.5
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("fixture lacks " + from);
  return text.replace(pos, from.size(), to);
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  throw std::logic_error("config parsed without error");
}

RunOptions options_for(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory per test, removed on exit.
class ScratchDir {
public:
  ScratchDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("epigame-") + info->test_suite_name() + "-" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

}  // namespace

// --- parse_config ------------------------------------------------------------

TEST(ParseConfig, MinimalSisConfig) {
  const auto c = parse_config(kSisConfig);
  EXPECT_EQ(c.model, ModelKind::sis);
  EXPECT_EQ(c.name, "table");
  EXPECT_EQ(c.output_path, "table.csv");
  EXPECT_EQ(std::get<SisParams>(c.params), epigame::testing::sis_table_params(0.1));
  EXPECT_EQ(c.initial, (std::vector<double>{0.2, 0.5, 0.5}));
  EXPECT_EQ(c.integration.epsilon, 1.0);
  EXPECT_EQ(c.integration.dt, 0.05);
  EXPECT_FALSE(c.sweep.has_value());
}

TEST(ParseConfig, EqualInfectedCostsNameTheInvariant) {
  const auto e = parse_error(replace(kSisConfig, "c_IU = 2", "c_IU = 1"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);
  EXPECT_EQ(e.line(), 5);  // the [params] header
  EXPECT_NE(std::string(e.what()).find("c_IU > c_IP"), std::string::npos) << e.what();
}

TEST(ParseConfig, SwappedTransmissionRatesNameTheInvariant) {
  auto text = replace(kSisConfig, "beta_u = 0.3", "beta_u = 0.2");
  text = replace(text, "beta_p = 0.15", "beta_p = 0.3");
  const auto e = parse_error(text);
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);
  EXPECT_NE(std::string(e.what()).find("β_u > β_p"), std::string::npos) << e.what();
}

TEST(ParseConfig, DistinctErrorKindsCarryLineNumbers) {
  auto e = parse_error(replace(kSisConfig, "L = 80", "L = 80\nbeta_x = 1"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::unknown_key);
  EXPECT_EQ(e.line(), 14);

  e = parse_error(replace(kSisConfig, "gamma = 0.1\n", ""));
  EXPECT_EQ(e.kind(), ConfigErrorKind::missing_key);
  EXPECT_EQ(e.line(), 5);
  EXPECT_NE(std::string(e.what()).find("'gamma'"), std::string::npos);

  e = parse_error(replace(kSisConfig, "alpha = 0.5", "alpha = 0.5x"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::malformed_number);
  EXPECT_EQ(e.line(), 8);

  e = parse_error(replace(kSisConfig, "alpha = 0.5", "alpha = nan"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::malformed_number);

  e = parse_error(replace(kSisConfig, "[initial]", "[initial_state]"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::unknown_key);
  EXPECT_EQ(e.line(), 15);

  e = parse_error(replace(kSisConfig, "kind = sis", "kind = seir"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::invalid_value);
  EXPECT_EQ(e.line(), 2);

  e = parse_error(replace(kSisConfig, "L = 80", "L = 80\nL = 81"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::syntax);
  EXPECT_EQ(e.line(), 14);

  e = parse_error(std::string("y = 1\n") + kSisConfig);
  EXPECT_EQ(e.kind(), ConfigErrorKind::syntax);
  EXPECT_EQ(e.line(), 1);

  e = parse_error(replace(kSisConfig, "z_I = 0.5", "z_I 0.5"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::syntax);

  e = parse_error(replace(kSisConfig, "[model]\nkind = sis\nname = table\n", ""));
  EXPECT_EQ(e.kind(), ConfigErrorKind::missing_key);
  EXPECT_EQ(e.line(), 0);
}

TEST(ParseConfig, CommentsAndOptionalSections) {
  const std::string text = std::string("# leading comment\n; another\n") +
                           replace(kSisConfig, "L = 80", "L = 80   # loss on infection") +
                           "\n[integration]\nepsilon = 0.01\nt_end = 100\nrecord_stride = 10\n";
  const auto c = parse_config(text);
  EXPECT_EQ(std::get<SisParams>(c.params).L, 80.0);
  EXPECT_EQ(c.integration.epsilon, 0.01);
  EXPECT_EQ(c.integration.dt, default_dt(0.01));
  EXPECT_EQ(c.integration.t_end, 100.0);
  EXPECT_EQ(c.integration.record_stride, 10u);
}

TEST(ParseConfig, ModelLevelInvariants) {
  // Initial state outside the box.
  auto e = parse_error(replace(kSisConfig, "z_S = 0.5", "z_S = 1.5"));
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);
  EXPECT_NE(std::string(e.what()).find("z_S"), std::string::npos);

  // Epsilon outside (0, 1].
  e = parse_error(std::string(kSisConfig) + "[integration]\nepsilon = 2\n");
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);

  // A sweep needs SIS parameters.
  const auto preset = find_preset("fig3-mid").runs.front();
  auto text = render_config(preset) + "\n[sweep]\ngamma_lo = 0.01\ngamma_hi = 0.2\nn_points = 10\n";
  e = parse_error(text);
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);
  EXPECT_NE(std::string(e.what()).find("sweep"), std::string::npos);

  // Strengthened-immunity reduction with compromised-immunity rates.
  auto weak = find_preset("fig4-right").runs.front();
  weak.model = ModelKind::reduced_siri_strong;
  weak.initial.resize(2);
  e = parse_error(render_config(weak));
  EXPECT_EQ(e.kind(), ConfigErrorKind::invariant);
  EXPECT_NE(std::string(e.what()).find("beta_p > beta_hat_p"), std::string::npos);

  // Recovered and infected shares exceed the population.
  auto siri = find_preset("fig3-mid").runs.front();
  siri.initial[0] = 0.7;
  siri.initial[1] = 0.4;
  e = parse_error(render_config(siri));
  EXPECT_NE(std::string(e.what()).find("y + r <= 1"), std::string::npos);
}

TEST(ParseConfig, VanillaModelUsesItsOwnKeys) {
  const auto c = parse_config(
      "[model]\nkind = siri-vanilla\n[params]\nbeta = 0.2\nbeta_hat = 0.4\ngamma = 0.3\n[initial]\ny = 0.5\nr = 0\n");
  EXPECT_EQ(std::get<VanillaSiriParams>(c.params), (VanillaSiriParams{0.2, 0.4, 0.3}));
  const auto e = parse_error(
      "[model]\nkind = siri-vanilla\n[params]\nbeta = 0.2\nbeta_hat = 0.4\ngamma = 0.3\nL = 3\n[initial]\ny = 0.5\nr = 0\n");
  EXPECT_EQ(e.kind(), ConfigErrorKind::unknown_key);
  EXPECT_EQ(e.line(), 7);
}

// --- presets ------------------------------------------------------------------

TEST(Presets, EightNamedPresets) {
  std::vector<std::string> names;
  for (const auto& [name, description] : list_presets()) {
    names.push_back(name);
    EXPECT_FALSE(description.empty());
  }
  EXPECT_EQ(names, (std::vector<std::string>{"fig1", "fig2", "fig3-left", "fig3-mid", "fig3-right", "fig4-left",
                                             "fig4-mid", "fig4-right"}));
  EXPECT_THROW(find_preset("fig5"), DomainError);
}

TEST(Presets, EveryRunRoundTripsThroughTheParser) {
  for (const auto& p : presets())
    for (const auto& c : p.runs) {
      EXPECT_FALSE(check_invariants(c).has_value()) << c.name;
      EXPECT_EQ(parse_config(render_config(c)), c) << c.name;
    }
}

TEST(Presets, ParameterBindings) {
  const auto fig2 = find_preset("fig2");
  ASSERT_EQ(fig2.runs.size(), 3u);
  std::vector<double> eps;
  for (const auto& c : fig2.runs) {
    eps.push_back(c.integration.epsilon);
    EXPECT_EQ(c.provenance, "artifact-default");
    EXPECT_EQ(std::get<SisParams>(c.params), epigame::testing::sis_table_params(0.1));
    EXPECT_EQ(c.integration.t_end, 2000.0);
  }
  EXPECT_EQ(eps, (std::vector<double>{1.0, 0.1, 0.01}));

  std::vector<double> y0s;
  for (const auto& c : find_preset("fig4-left").runs) {
    const auto& q = std::get<SiriParams>(c.params);
    EXPECT_EQ(q.gamma, 0.14);
    EXPECT_EQ(q.beta_p, 0.12);
    EXPECT_EQ(c.provenance, "published");
    if (std::find(y0s.begin(), y0s.end(), c.initial[0]) == y0s.end()) y0s.push_back(c.initial[0]);
    if (c.model == ModelKind::siri) {
      EXPECT_EQ(c.initial, (std::vector<double>{c.initial[0], 0.01, 0.5, 0.5, 0.5}));
      EXPECT_TRUE(c.integration.epsilon == 1.0 || c.integration.epsilon == 0.1 || c.integration.epsilon == 0.025);
    }
  }
  EXPECT_EQ(y0s, (std::vector<double>{0.05, 0.01}));

  for (const auto& [name, gamma] : {std::pair{"fig3-left", 0.15}, {"fig3-mid", 0.1}, {"fig3-right", 0.078}})
    for (const auto& c : find_preset(name).runs) {
      EXPECT_EQ(std::get<SiriParams>(c.params), epigame::testing::siri_strong_params(gamma));
      EXPECT_EQ(c.initial[0], 0.2);
    }
  for (const auto& c : find_preset("fig4-right").runs)
    EXPECT_EQ(std::get<SiriParams>(c.params), epigame::testing::siri_weak_params(0.15, 0.14));
}

TEST(Overrides, FlagsBeatConfigValues) {
  auto c = find_preset("fig2").runs.front();
  apply_overrides(c, {std::nullopt, 0.01, 50.0});
  EXPECT_EQ(c.integration.epsilon, 0.01);
  EXPECT_EQ(c.integration.dt, 0.005);
  EXPECT_EQ(c.integration.t_end, 50.0);
  apply_overrides(c, {0.001, std::nullopt, std::nullopt});
  EXPECT_EQ(c.integration.dt, 0.001);
  EXPECT_THROW(apply_overrides(c, {std::nullopt, 0.0, std::nullopt}), DomainError);
}

// --- run_scenario -------------------------------------------------------------

TEST(RunScenario, Fig1WritesBranchesWithFourTransitions) {
  ScratchDir dir;
  const auto results = run_preset(find_preset("fig1"), options_for(dir.path()));
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].status, exit_ok);
  ASSERT_EQ(results[0].artifacts.size(), 1u);
  const auto csv = slurp(results[0].artifacts[0]);
  EXPECT_EQ(parse_branches(csv).transitions.size(), 4u);
  EXPECT_NE(results[0].summary.find("E4 -> E3 -> E2 -> E1"), std::string::npos) << results[0].summary;
}

TEST(RunScenario, Fig2SettlesAtTheInteriorLevelForEveryEpsilon) {
  ScratchDir dir;
  RunOptions o = options_for(dir.path());
  o.check = true;
  o.jobs = 3;
  const auto results = run_preset(find_preset("fig2"), o);
  ASSERT_EQ(results.size(), 3u);
  for (const auto& r : results) {
    EXPECT_EQ(r.status, exit_ok) << r.summary;
    ASSERT_TRUE(r.observed_y.has_value());
    EXPECT_NEAR(*r.observed_y, 1.0 / 6.0, 0.01);
    EXPECT_NE(r.summary.find("provenance=artifact-default"), std::string::npos);
    // Independent check on the written CSV: last tenth of the y column.
    std::istringstream in(slurp(r.artifacts.at(0)));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,y,z_S,z_I");
    double sum = 0.0;
    int n = 0;
    while (std::getline(in, line)) {
      const auto cols = csv::split(line);
      if (std::stod(cols[0]) >= 1800.0) {
        sum += std::stod(cols[1]);
        ++n;
      }
    }
    EXPECT_NEAR(sum / n, 1.0 / 6.0, 0.01);
  }
}

TEST(RunScenario, Fig3MidConvergesToRecoveredIndifferenceLevel) {
  ScratchDir dir;
  RunOptions o = options_for(dir.path());
  o.check = true;
  o.jobs = 2;
  for (const auto& r : run_preset(find_preset("fig3-mid"), o)) {
    EXPECT_EQ(r.status, exit_ok) << r.summary;
    EXPECT_NEAR(r.observed_y.value(), 1.0 / 3.0, 0.01) << r.name;
  }
}

TEST(RunScenario, OutputIsBitIdenticalAcrossRunsAndWorkerCounts) {
  ScratchDir a, b;
  Overrides shorter{std::nullopt, std::nullopt, 300.0};
  RunOptions oa = options_for(a.path()), ob = options_for(b.path());
  ob.jobs = 4;
  const auto ra = run_preset(find_preset("fig4-left"), oa, shorter);
  const auto rb = run_preset(find_preset("fig4-left"), ob, shorter);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ASSERT_EQ(ra[i].artifacts.size(), 1u);
    EXPECT_EQ(slurp(ra[i].artifacts[0]), slurp(rb[i].artifacts[0])) << ra[i].name;
  }
  // No temp files survive the atomic writes.
  for (const auto& entry : fs::directory_iterator(b.path()))
    EXPECT_EQ(entry.path().string().find(".partial"), std::string::npos) << entry.path();
}

TEST(RunScenario, CheckModeFlagsAnUnsettledRun) {
  ScratchDir dir;
  auto c = parse_config(kSisConfig);
  c.initial[0] = 0.01;
  c.integration.t_end = 5.0;  // far from settled
  RunOptions o = options_for(dir.path());
  o.check = true;
  const auto r = run_scenario(c, o);
  EXPECT_EQ(r.status, exit_check);
  EXPECT_EQ(r.check_passed, false);
  EXPECT_NE(r.summary.find("check: FAIL"), std::string::npos);

  o.check = false;
  EXPECT_EQ(run_scenario(c, o).status, exit_ok);
}

TEST(RunScenario, IntegrationFailureReportsTheTime) {
  ScratchDir dir;
  auto c = parse_config(kSisConfig);
  auto& p = std::get<SisParams>(c.params);
  p.beta_u = 400.0;
  p.beta_p = 300.0;
  const auto r = run_scenario(c, options_for(dir.path()));
  EXPECT_EQ(r.status, exit_integration);
  EXPECT_NE(r.summary.find("integration failed at t = "), std::string::npos) << r.summary;
}

TEST(RunScenario, EquilibriaAndClassifyWriteJsonReports) {
  ScratchDir dir;
  const auto c = parse_config(kSisConfig);
  RunOptions o = options_for(dir.path());
  o.action = Action::equilibria;
  auto r = run_scenario(c, o);
  ASSERT_EQ(r.status, exit_ok);
  EXPECT_EQ(r.artifacts.at(0).filename(), "table-equilibria.json");
  const auto doc = Json::parse(slurp(r.artifacts[0]));
  ASSERT_EQ(doc["equilibria"].size(), 5u);
  EXPECT_EQ(doc["equilibria"][3]["label"], "E3");
  EXPECT_EQ(doc["equilibria"][3]["stability"], "stable");
  EXPECT_EQ(doc["stable"], "E3");
  EXPECT_EQ(doc["reduced"]["case"], 3);
  EXPECT_NE(r.summary.find("y_p < y_int < y_u"), std::string::npos) << r.summary;

  o.action = Action::classify;
  r = run_scenario(find_preset("fig4-left").runs.front(), o);
  ASSERT_EQ(r.status, exit_ok);
  const auto cls = Json::parse(slurp(r.artifacts.at(0)));
  EXPECT_EQ(cls["classification"]["case"], 3);
  EXPECT_EQ(cls["classification"]["bistable"], true);
  EXPECT_EQ(cls["classification"]["immunity"], "compromised");
}

TEST(RunScenario, ReducedActionSwitchesToTheHybridModel) {
  ScratchDir dir;
  RunOptions o = options_for(dir.path());
  o.action = Action::reduced;
  o.check = true;
  const auto r = run_scenario(find_preset("fig3-right").runs.front(), o);
  EXPECT_EQ(r.status, exit_ok) << r.summary;
  EXPECT_NE(r.summary.find("model=reduced-siri-strong"), std::string::npos);
  EXPECT_EQ(r.artifacts.at(0).filename(), "fig3-right-eps1-reduced.csv");
  EXPECT_NEAR(r.observed_y.value(), 0.35, 1e-3);

  auto vanilla = parse_config(
      "[model]\nkind = siri-vanilla\n[params]\nbeta = 0.2\nbeta_hat = 0.4\ngamma = 0.3\n[initial]\ny = 0.5\nr = 0\n");
  EXPECT_THROW(run_scenario(vanilla, o), DomainError);
}

// --- command-line front end ---------------------------------------------------

#ifdef EPIGAME_CLI_PATH
namespace {
int run_cli(const std::string& args, const fs::path& out_file) {
  const std::string cmd = std::string(EPIGAME_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}
}  // namespace

TEST(Cli, ListPresets) {
  ScratchDir dir;
  ASSERT_EQ(run_cli("list-presets", dir.path() / "out.txt"), 0);
  std::istringstream in(slurp(dir.path() / "out.txt"));
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 8);
}

TEST(Cli, SubcommandsAndExitCodes) {
  ScratchDir dir;
  const auto log = dir.path() / "log.txt";
  const auto cfg = dir.path() / "sis.ini";
  std::ofstream(cfg) << kSisConfig;
  const std::string out = " --out " + dir.path().string();

  EXPECT_EQ(run_cli("simulate --config " + cfg.string() + out + " --t-end 100 --epsilon 0.1", log), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "table.csv"));
  EXPECT_NE(slurp(log).find("final-window mean y"), std::string::npos);

  const auto early = dir.path() / "early.ini";
  std::ofstream(early) << replace(kSisConfig, "y = 0.2", "y = 0.01");
  EXPECT_EQ(run_cli("simulate --config " + early.string() + out + " --t-end 5 --check", log), exit_check);
  EXPECT_EQ(run_cli("reduced --config " + cfg.string() + out + " --check", log), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "table-reduced.csv"));
  EXPECT_EQ(run_cli("equilibria --config " + cfg.string() + out, log), 0);
  EXPECT_NE(slurp(log).find("E3"), std::string::npos);
  EXPECT_EQ(run_cli("classify --config " + cfg.string() + out, log), 0);
  EXPECT_EQ(run_cli("preset fig1 --jobs 2" + out, log), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "fig1-branches.csv"));
  EXPECT_EQ(run_cli("preset fig2 --print-config", log), 0);
  const auto printed = slurp(log);
  const auto first = printed.find("[model]");
  const auto second = printed.find("# ---", first);
  EXPECT_EQ(parse_config(printed.substr(first, second - first)).name, "fig2-eps1");

  // Config errors name the invariant and exit with the usage code.
  const auto bad = dir.path() / "bad.ini";
  std::ofstream(bad) << replace(kSisConfig, "c_IU = 2", "c_IU = 1");
  EXPECT_EQ(run_cli("simulate --config " + bad.string(), log), exit_usage);
  EXPECT_NE(slurp(log).find("c_IU > c_IP"), std::string::npos) << slurp(log);

  EXPECT_EQ(run_cli("bifurcate --config " + cfg.string() + out, log), exit_error);  // no [sweep]
  EXPECT_EQ(run_cli("preset fig9", log), exit_error);
  EXPECT_EQ(run_cli("frobnicate", log), exit_usage);
  EXPECT_EQ(run_cli("simulate", log), exit_usage);  // --config is required
}
#endif
