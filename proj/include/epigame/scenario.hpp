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
#pragma once

// Scenario configuration, named experiment presets and the dispatcher that
// turns a configuration into artifacts on disk.
//
// Config grammar (line based, UTF-8):
//
//   document := { blank | comment | section | entry }
//   comment  := ('#' | ';') text
//   section  := '[' name ']'            name in model|params|initial|integration|sweep
//   entry    := key '=' value [ '#' text ]
//
// Keys are case sensitive. Every key belongs to the most recent section.
// Numbers are C locale decimal or exponent literals.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "epigame/bifurcation.hpp"
#include "epigame/csv.hpp"
#include "epigame/equilibria.hpp"
#include "epigame/error.hpp"
#include "epigame/hybrid.hpp"
#include "epigame/integrator.hpp"
#include "epigame/model.hpp"
#include "epigame/report.hpp"

namespace epigame {

enum class ModelKind { sis, siri, siri_vanilla, reduced_sis, reduced_siri_strong, reduced_siri_weak };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::sis: return "sis";
    case ModelKind::siri: return "siri";
    case ModelKind::siri_vanilla: return "siri-vanilla";
    case ModelKind::reduced_sis: return "reduced-sis";
    case ModelKind::reduced_siri_strong: return "reduced-siri-strong";
    case ModelKind::reduced_siri_weak: return "reduced-siri-weak";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto m : {ModelKind::sis, ModelKind::siri, ModelKind::siri_vanilla, ModelKind::reduced_sis,
                 ModelKind::reduced_siri_strong, ModelKind::reduced_siri_weak})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

inline bool is_sis_family(ModelKind m) { return m == ModelKind::sis || m == ModelKind::reduced_sis; }
inline bool is_siri_family(ModelKind m) {
  return m == ModelKind::siri || m == ModelKind::reduced_siri_strong || m == ModelKind::reduced_siri_weak;
}

enum class ConfigErrorKind { syntax, unknown_key, missing_key, invariant, malformed_number, invalid_value };

inline const char* to_string(ConfigErrorKind k) {
  switch (k) {
    case ConfigErrorKind::syntax: return "syntax error";
    case ConfigErrorKind::unknown_key: return "unknown key";
    case ConfigErrorKind::missing_key: return "missing key";
    case ConfigErrorKind::invariant: return "invariant violated";
    case ConfigErrorKind::malformed_number: return "malformed number";
    case ConfigErrorKind::invalid_value: return "invalid value";
  }
  return "?";
}

/// Line 0 refers to the document as a whole (e.g. a missing section).
class ConfigError : public DomainError {
public:
  ConfigError(ConfigErrorKind kind, int line, const std::string& detail)
      : DomainError("line " + std::to_string(line) + ": " + to_string(kind) + ": " + detail),
        kind_(kind),
        line_(line) {}
  ConfigErrorKind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }

private:
  ConfigErrorKind kind_;
  int line_;
};

struct SweepSpec {
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  std::size_t n_points = 0;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

using ModelParams = std::variant<SisParams, SiriParams, VanillaSiriParams>;

struct ScenarioConfig {
  std::string name = "scenario";
  ModelKind model = ModelKind::sis;
  ModelParams params;
  std::vector<double> initial;  ///< ordered as initial_keys(model)
  IntegrationConfig integration;
  std::optional<SweepSpec> sweep;
  std::string output_path;  ///< relative paths resolve against the output directory
  std::string provenance = "published";

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline std::vector<std::string> initial_keys(ModelKind m) {
  switch (m) {
    case ModelKind::sis: return {"y", "z_S", "z_I"};
    case ModelKind::siri: return {"y", "r", "z_S", "z_I", "z_R"};
    case ModelKind::siri_vanilla: return {"y", "r"};
    case ModelKind::reduced_sis: return {"y"};
    case ModelKind::reduced_siri_strong:
    case ModelKind::reduced_siri_weak: return {"y", "r"};
  }
  return {};
}

inline std::vector<std::string> param_keys(ModelKind m) {
  if (m == ModelKind::siri_vanilla) return {"beta", "beta_hat", "gamma"};
  std::vector<std::string> keys{"beta_u", "beta_p", "alpha", "gamma", "c_P", "c_IU", "c_IP", "L"};
  if (is_siri_family(m)) {
    keys.push_back("beta_hat_u");
    keys.push_back("beta_hat_p");
  }
  return keys;
}

namespace detail {

// Field pointers keep the key <-> member binding in one place for parsing
// and rendering.
inline double* param_slot(ModelParams& params, std::string_view key) {
  if (auto* v = std::get_if<VanillaSiriParams>(&params)) {
    if (key == "beta") return &v->beta;
    if (key == "beta_hat") return &v->beta_hat;
    if (key == "gamma") return &v->gamma;
    return nullptr;
  }
  SisParams* s = std::holds_alternative<SisParams>(params) ? &std::get<SisParams>(params)
                                                           : static_cast<SisParams*>(&std::get<SiriParams>(params));
  if (key == "beta_u") return &s->beta_u;
  if (key == "beta_p") return &s->beta_p;
  if (key == "alpha") return &s->alpha;
  if (key == "gamma") return &s->gamma;
  if (key == "c_P") return &s->c_P;
  if (key == "c_IU") return &s->c_IU;
  if (key == "c_IP") return &s->c_IP;
  if (key == "L") return &s->L;
  if (auto* q = std::get_if<SiriParams>(&params)) {
    if (key == "beta_hat_u") return &q->beta_hat_u;
    if (key == "beta_hat_p") return &q->beta_hat_p;
  }
  return nullptr;
}

inline double param_value(const ModelParams& params, std::string_view key) {
  return *param_slot(const_cast<ModelParams&>(params), key);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> entries;
};

inline const std::vector<std::string>& section_names() {
  static const std::vector<std::string> names{"model", "params", "initial", "integration", "sweep"};
  return names;
}

inline std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> sections;
  Section* current = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string raw = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (raw.empty() || raw[0] == '#' || raw[0] == ';') continue;

    if (raw.front() == '[') {
      if (raw.back() != ']') throw ConfigError(ConfigErrorKind::syntax, line_no, "unterminated section header");
      const std::string name = trim(std::string_view(raw).substr(1, raw.size() - 2));
      const auto& known = section_names();
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw ConfigError(ConfigErrorKind::unknown_key, line_no, "unknown section [" + name + "]");
      if (sections.count(name)) throw ConfigError(ConfigErrorKind::syntax, line_no, "duplicate section [" + name + "]");
      current = &sections[name];
      current->line = line_no;
      continue;
    }

    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ConfigError(ConfigErrorKind::syntax, line_no, "expected key = value");
    if (!current) throw ConfigError(ConfigErrorKind::syntax, line_no, "entry before any section header");
    const std::string key = trim(std::string_view(raw).substr(0, eq));
    std::string value = trim(std::string_view(raw).substr(eq + 1));
    if (const auto hash = value.find('#'); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw ConfigError(ConfigErrorKind::syntax, line_no, "empty key");
    if (!current->entries.emplace(key, Entry{value, line_no}).second)
      throw ConfigError(ConfigErrorKind::syntax, line_no, "duplicate key '" + key + "'");
  }
  return sections;
}

inline double parse_double(const Entry& e, const std::string& key) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  if (!e.value.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (e.value.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ConfigError(ConfigErrorKind::malformed_number, e.line, key + " = '" + e.value + "'");
  return v;
}

inline std::size_t parse_count(const Entry& e, const std::string& key) {
  std::size_t v = 0;
  const char* last = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), last, v);
  if (e.value.empty() || ec != std::errc() || ptr != last)
    throw ConfigError(ConfigErrorKind::malformed_number, e.line, key + " = '" + e.value + "' is not a count");
  return v;
}

/// Pops entries from a section as they are consumed; leftovers are unknown keys.
class Reader {
public:
  Reader(std::map<std::string, Section>& sections, std::string name) : name_(std::move(name)) {
    if (auto it = sections.find(name_); it != sections.end()) section_ = &it->second;
  }

  bool present() const { return section_ != nullptr; }
  int line() const { return section_ ? section_->line : 0; }

  const Entry* find(const std::string& key) const {
    if (!section_) return nullptr;
    auto it = section_->entries.find(key);
    return it == section_->entries.end() ? nullptr : &it->second;
  }

  const Entry& require(const std::string& key) const {
    if (!section_) throw ConfigError(ConfigErrorKind::missing_key, 0, "missing section [" + name_ + "]");
    if (const Entry* e = find(key)) return *e;
    throw ConfigError(ConfigErrorKind::missing_key, section_->line, "[" + name_ + "] needs '" + key + "'");
  }

  std::string text(const std::string& key) {
    const std::string v = require(key).value;
    consumed_.push_back(key);
    return v;
  }
  std::optional<std::string> optional_text(const std::string& key) {
    if (!find(key)) return std::nullopt;
    return text(key);
  }
  double number(const std::string& key) {
    const double v = parse_double(require(key), key);
    consumed_.push_back(key);
    return v;
  }
  std::optional<double> optional_number(const std::string& key) {
    if (!find(key)) return std::nullopt;
    return number(key);
  }
  std::optional<std::size_t> optional_count(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    consumed_.push_back(key);
    return parse_count(*e, key);
  }
  std::size_t count(const std::string& key) {
    require(key);
    return *optional_count(key);
  }

  void reject_leftovers() const {
    if (!section_) return;
    for (const auto& [key, e] : section_->entries)
      if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end())
        throw ConfigError(ConfigErrorKind::unknown_key, e.line, "'" + key + "' in [" + name_ + "]");
  }

private:
  std::string name_;
  Section* section_ = nullptr;
  std::vector<std::string> consumed_;
};

inline std::string fmt(double v) { return csv::format_double(v); }

}  // namespace detail

/// Model-level checks shared by the parser and programmatic construction.
/// Returns the violated invariant or nullopt.
inline std::optional<std::string> check_invariants(const ScenarioConfig& c) {
  const bool vanilla = c.model == ModelKind::siri_vanilla;
  if (vanilla != std::holds_alternative<VanillaSiriParams>(c.params) ||
      is_sis_family(c.model) != std::holds_alternative<SisParams>(c.params))
    return "parameter set matches model kind";
  if (c.initial.size() != initial_keys(c.model).size()) return "initial state has the model's dimension";
  if (auto v = std::visit([](const auto& p) { return check_invariants(p); }, c.params)) return v;
  if (c.model == ModelKind::reduced_siri_strong || c.model == ModelKind::reduced_siri_weak) {
    const auto& q = std::get<SiriParams>(c.params);
    if (c.model == ModelKind::reduced_siri_strong && !(q.beta_p > q.beta_hat_p))
      return "beta_p > beta_hat_p (β_p > β̂_p) for strengthened immunity";
    if (c.model == ModelKind::reduced_siri_weak && !(q.beta_p < q.beta_hat_p))
      return "beta_p < beta_hat_p (β_p < β̂_p) for compromised immunity";
  }
  const auto keys = initial_keys(c.model);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (!(c.initial[i] >= 0.0 && c.initial[i] <= 1.0)) return "0 <= " + keys[i] + " <= 1";
  if (keys.size() > 1 && keys[1] == "r" && c.initial[0] + c.initial[1] > 1.0) return "y + r <= 1";
  if (auto v = check_invariants(c.integration)) return v;
  if (c.sweep) {
    if (c.model != ModelKind::sis) return "sweep requires model kind sis";
    if (!(c.sweep->gamma_lo > 0.0 && c.sweep->gamma_lo < c.sweep->gamma_hi)) return "0 < gamma_lo < gamma_hi";
    if (c.sweep->n_points < 2) return "n_points >= 2";
  }
  if (c.name.empty()) return "name is not empty";
  return std::nullopt;
}

inline ScenarioConfig parse_config(std::string_view text) {
  auto sections = detail::tokenize(text);
  ScenarioConfig c;

  detail::Reader model(sections, "model");
  {
    const int kind_line = model.present() ? model.require("kind").line : 0;
    const std::string kind = model.text("kind");
    const auto m = parse_model_kind(kind);
    if (!m) throw ConfigError(ConfigErrorKind::invalid_value, kind_line, "unknown model kind '" + kind + "'");
    c.model = *m;
  }
  if (auto v = model.optional_text("name")) c.name = *v;
  if (auto v = model.optional_text("output")) c.output_path = *v;
  if (auto v = model.optional_text("provenance")) c.provenance = *v;
  model.reject_leftovers();
  if (c.output_path.empty()) c.output_path = c.name + ".csv";

  if (c.model == ModelKind::siri_vanilla)
    c.params = VanillaSiriParams{};
  else if (is_siri_family(c.model))
    c.params = SiriParams{};
  else
    c.params = SisParams{};

  detail::Reader params(sections, "params");
  for (const auto& key : param_keys(c.model)) *detail::param_slot(c.params, key) = params.number(key);
  params.reject_leftovers();
  if (auto v = std::visit([](const auto& p) { return check_invariants(p); }, c.params))
    throw ConfigError(ConfigErrorKind::invariant, params.line(), *v);

  detail::Reader initial(sections, "initial");
  for (const auto& key : initial_keys(c.model)) c.initial.push_back(initial.number(key));
  initial.reject_leftovers();

  detail::Reader integration(sections, "integration");
  if (auto v = integration.optional_number("epsilon")) c.integration.epsilon = *v;
  c.integration.dt = integration.optional_number("dt").value_or(default_dt(c.integration.epsilon));
  if (auto v = integration.optional_number("t_end")) c.integration.t_end = *v;
  if (auto v = integration.optional_number("projection_tol")) c.integration.projection_tol = *v;
  if (auto v = integration.optional_count("record_stride")) c.integration.record_stride = *v;
  integration.reject_leftovers();
  if (auto v = check_invariants(c.integration)) throw ConfigError(ConfigErrorKind::invariant, integration.line(), *v);

  detail::Reader sweep(sections, "sweep");
  if (sweep.present()) {
    SweepSpec s;
    s.gamma_lo = sweep.number("gamma_lo");
    s.gamma_hi = sweep.number("gamma_hi");
    s.n_points = sweep.count("n_points");
    c.sweep = s;
  }
  sweep.reject_leftovers();

  if (auto v = check_invariants(c)) {
    const int line = c.sweep && v->find("gamma") != std::string::npos ? sweep.line() : initial.line();
    throw ConfigError(ConfigErrorKind::invariant, line, *v);
  }
  return c;
}

/// Canonical text form; parse_config(render_config(c)) == c.
inline std::string render_config(const ScenarioConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "[model]\nkind = " << to_string(c.model) << "\nname = " << c.name << "\noutput = " << c.output_path
     << "\nprovenance = " << c.provenance << "\n\n[params]\n";
  for (const auto& key : param_keys(c.model)) os << key << " = " << fmt(detail::param_value(c.params, key)) << '\n';
  os << "\n[initial]\n";
  const auto keys = initial_keys(c.model);
  for (std::size_t i = 0; i < keys.size(); ++i) os << keys[i] << " = " << fmt(c.initial[i]) << '\n';
  os << "\n[integration]\nepsilon = " << fmt(c.integration.epsilon) << "\ndt = " << fmt(c.integration.dt)
     << "\nt_end = " << fmt(c.integration.t_end) << "\nprojection_tol = " << fmt(c.integration.projection_tol)
     << "\nrecord_stride = " << c.integration.record_stride << '\n';
  if (c.sweep)
    os << "\n[sweep]\ngamma_lo = " << fmt(c.sweep->gamma_lo) << "\ngamma_hi = " << fmt(c.sweep->gamma_hi)
       << "\nn_points = " << c.sweep->n_points << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Presets

/// SIS parameter table used by the bifurcation diagram and the SIS runs.
inline SisParams sis_reference_params(double gamma) {
  SisParams p;
  p.c_P = 1.0;
  p.alpha = 0.5;
  p.beta_u = 0.3;
  p.c_IU = 2.0;
  p.L = 80.0;
  p.beta_p = 0.15;
  p.c_IP = 1.0;
  p.gamma = gamma;
  return p;
}

/// Strengthened immunity: reinfection is slower than first infection.
inline SiriParams siri_strong_reference_params(double gamma) {
  SiriParams p;
  p.beta_p = 0.3;
  p.beta_hat_p = 0.2;
  p.beta_u = 0.4;
  p.beta_hat_u = 0.25;
  p.L = 75.0;
  p.alpha = 0.6;
  p.c_P = 2.0;
  p.c_IU = 2.0;
  p.c_IP = 1.0;
  p.gamma = gamma;
  return p;
}

/// Compromised immunity: reinfection is faster than first infection.
inline SiriParams siri_weak_reference_params(double beta_p, double gamma) {
  SiriParams p;
  p.beta_hat_p = 0.25;
  p.beta_hat_u = 0.4;
  p.beta_u = 0.35;
  p.L = 125.0;
  p.alpha = 0.6;
  p.c_P = 2.0;
  p.c_IU = 2.0;
  p.c_IP = 1.0;
  p.beta_p = beta_p;
  p.gamma = gamma;
  return p;
}

struct Preset {
  std::string name;
  std::string description;
  std::vector<ScenarioConfig> runs;
};

namespace detail {

inline std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

inline ScenarioConfig full_run(const std::string& stem, ModelKind model, ModelParams params,
                               std::vector<double> initial, double eps, double t_end, std::string provenance) {
  ScenarioConfig c;
  c.name = stem + "-eps" + eps_tag(eps);
  c.model = model;
  c.params = std::move(params);
  c.initial = std::move(initial);
  c.integration.epsilon = eps;
  c.integration.dt = default_dt(eps);
  c.integration.t_end = t_end;
  c.output_path = c.name + ".csv";
  c.provenance = std::move(provenance);
  return c;
}

inline ScenarioConfig reduced_run(const std::string& stem, ModelKind model, ModelParams params,
                                  std::vector<double> initial, double t_end, std::string provenance) {
  ScenarioConfig c;
  c.name = stem + "-reduced";
  c.model = model;
  c.params = std::move(params);
  c.initial = std::move(initial);
  c.integration.epsilon = 1.0;
  c.integration.dt = 0.05;
  c.integration.t_end = t_end;
  c.output_path = c.name + ".csv";
  c.provenance = std::move(provenance);
  return c;
}

inline std::string y_tag(double y) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "y%g", y);
  return buf;
}

// SIRI horizons are long enough for the slowest run (the IFE approach at
// the smallest epsilon) to settle to within the check tolerance.
inline constexpr double kSiriHorizon = 1500.0;

inline Preset siri_preset(const std::string& name, const std::string& description, const SiriParams& p,
                          const std::vector<double>& y0s, const std::vector<double>& epsilons) {
  Preset out{name, description, {}};
  const ModelKind reduced = p.beta_p > p.beta_hat_p ? ModelKind::reduced_siri_strong : ModelKind::reduced_siri_weak;
  for (double y0 : y0s) {
    const std::string stem = y0s.size() > 1 ? name + "-" + y_tag(y0) : name;
    for (double eps : epsilons)
      out.runs.push_back(full_run(stem, ModelKind::siri, p, {y0, 0.01, 0.5, 0.5, 0.5}, eps, kSiriHorizon, "published"));
    out.runs.push_back(reduced_run(stem, reduced, p, {y0, 0.01}, kSiriHorizon, "published"));
  }
  return out;
}

}  // namespace detail

inline std::vector<Preset> presets() {
  std::vector<Preset> out;

  {
    ScenarioConfig c;
    c.name = "fig1-branches";
    c.model = ModelKind::sis;
    c.params = sis_reference_params(0.1);
    c.initial = {0.2, 0.5, 0.5};
    c.sweep = SweepSpec{0.01, 0.2, 200};
    c.output_path = "fig1-branches.csv";
    c.provenance = "published";
    out.push_back({"fig1", "SIS equilibrium branches over the recovery rate with the four transcritical points", {c}});
  }
  {
    Preset p{"fig2", "coupled SIS at gamma = 0.1 for eps in {1, 0.1, 0.01}; oscillations grow as eps shrinks", {}};
    for (double eps : {1.0, 0.1, 0.01})
      p.runs.push_back(detail::full_run("fig2", ModelKind::sis, sis_reference_params(0.1), {0.2, 0.5, 0.5}, eps,
                                        2000.0, "artifact-default"));
    out.push_back(std::move(p));
  }

  const std::vector<double> strong_eps{1.0, 0.1, 0.01};
  out.push_back(detail::siri_preset("fig3-left", "strengthened-immunity SIRI, gamma = 0.15: non-monotone approach to E2",
                                    siri_strong_reference_params(0.15), {0.2}, strong_eps));
  out.push_back(detail::siri_preset("fig3-mid", "strengthened-immunity SIRI, gamma = 0.1: sliding at y_hat_int = 1/3",
                                    siri_strong_reference_params(0.1), {0.2}, strong_eps));
  out.push_back(detail::siri_preset("fig3-right", "strengthened-immunity SIRI, gamma = 0.078: convergence to E3",
                                    siri_strong_reference_params(0.078), {0.2}, strong_eps));

  const std::vector<double> weak_eps{1.0, 0.1, 0.025};
  out.push_back(detail::siri_preset("fig4-left",
                                    "compromised-immunity SIRI, gamma = 0.14, beta_p = 0.12: bistable, y0 in {0.05, 0.01}",
                                    siri_weak_reference_params(0.12, 0.14), {0.05, 0.01}, weak_eps));
  out.push_back(detail::siri_preset("fig4-mid",
                                    "compromised-immunity SIRI, gamma = 0.14, beta_p = 0.12, y0 = 0.01: outcome depends on eps",
                                    siri_weak_reference_params(0.12, 0.14), {0.01}, weak_eps));
  out.push_back(detail::siri_preset("fig4-right",
                                    "compromised-immunity SIRI, gamma = 0.14, beta_p = 0.15, y0 = 0.001: no bistability",
                                    siri_weak_reference_params(0.15, 0.14), {0.001}, weak_eps));
  return out;
}

inline std::vector<std::pair<std::string, std::string>> list_presets() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : presets()) out.emplace_back(p.name, p.description);
  return out;
}

inline Preset find_preset(std::string_view name) {
  for (auto& p : presets())
    if (p.name == name) return p;
  throw DomainError("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Running scenarios

enum class Action { simulate, reduced, equilibria, classify, bifurcate };

inline const char* to_string(Action a) {
  switch (a) {
    case Action::simulate: return "simulate";
    case Action::reduced: return "reduced";
    case Action::equilibria: return "equilibria";
    case Action::classify: return "classify";
    case Action::bifurcate: return "bifurcate";
  }
  return "?";
}

/// Exit codes shared by run_scenario and the command-line front end.
enum ExitStatus : int { exit_ok = 0, exit_error = 1, exit_usage = 2, exit_integration = 3, exit_check = 4 };

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned jobs = 1;
  bool check = false;           ///< nonzero exit when the run misses every predicted attractor
  double check_tol = 0.01;
  std::optional<Action> action;  ///< default: bifurcate with a sweep, simulate otherwise
};

struct ScenarioResult {
  std::string name;
  int status = exit_ok;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;
  std::optional<double> observed_y;  ///< final-window mean of y
  std::vector<double> predicted_y;   ///< attractors from the classifiers
  std::optional<bool> check_passed;
};

struct Overrides {
  std::optional<double> dt;
  std::optional<double> epsilon;
  std::optional<double> t_end;
};

/// Flags beat config values. A new epsilon without an explicit dt keeps
/// the step inside the stable range for the fast rates.
inline void apply_overrides(ScenarioConfig& c, const Overrides& o) {
  if (o.epsilon) {
    c.integration.epsilon = *o.epsilon;
    if (!o.dt) c.integration.dt = std::min(c.integration.dt, default_dt(*o.epsilon));
  }
  if (o.dt) c.integration.dt = *o.dt;
  if (o.t_end) c.integration.t_end = *o.t_end;
  if (auto v = check_invariants(c.integration)) throw DomainError("override: " + *v);
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  fs::path tmp = path;
  tmp += ".partial-" + std::to_string(tid);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace detail {

inline std::filesystem::path resolve(const RunOptions& o, const std::string& rel) {
  const std::filesystem::path p(rel);
  return p.is_absolute() ? p : o.out_dir / p;
}

inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

inline std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline SisState sis_state(const ScenarioConfig& c) { return {c.initial[0], c.initial[1], c.initial[2]}; }

inline SiriState siri_state(const ScenarioConfig& c) {
  const double y = c.initial[0], r = c.initial[1];
  return {std::max(0.0, 1.0 - y - r), y, r, c.initial[2], c.initial[3], c.initial[4]};
}

/// Limits of y predicted by the classifiers for the given model.
inline std::pair<std::vector<double>, std::string> predicted_attractors(const ScenarioConfig& c) {
  if (const auto* v = std::get_if<VanillaSiriParams>(&c.params)) {
    const auto reg = vanilla_siri_classify(v->beta, v->beta_hat, v->gamma);
    std::vector<double> ys;
    switch (reg.regime) {
      case SiriRegime::infection_free:
      case SiriRegime::epidemic: ys = {0.0}; break;
      case SiriRegime::endemic: ys = {*reg.endemic_level}; break;
      case SiriRegime::bistable: ys = {*reg.endemic_level, 0.0}; break;
      case SiriRegime::degenerate_sis: ys = {reg.R0 > 1.0 ? 1.0 - 1.0 / reg.R0 : 0.0}; break;
    }
    return {ys, std::string("vanilla SIRI regime ") + to_string(reg.regime)};
  }
  if (const auto* q = std::get_if<SiriParams>(&c.params)) {
    const auto rep = siri_classify(*q);
    return {rep.attractors, std::string(rep.strong ? "strengthened" : "compromised") + " immunity case " +
                                std::to_string(rep.case_id) + (rep.bistable ? " (bistable)" : "")};
  }
  const auto& p = std::get<SisParams>(c.params);
  const auto outcome = classify_reduced_sis(p);
  if (c.model == ModelKind::reduced_sis)
    return {{outcome.y_limit}, "reduced SIS case " + std::to_string(outcome.case_id)};
  const auto rows = sis_equilibria(p);
  const auto label = stable_branch(rows);
  if (label.empty()) return {{outcome.y_limit}, "no hyperbolic stable equilibrium; reduced SIS case " +
                                                    std::to_string(outcome.case_id)};
  return {{find_report(rows, label).coordinates[0]}, "stable equilibrium " + label};
}

template <class GetY>
double final_mean(const std::vector<double>& times, GetY get_y) {
  const double from = 0.9 * times.back();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= from) {
      sum += get_y(i);
      ++n;
    }
  return sum / static_cast<double>(n);
}

inline std::string state_line(const std::vector<std::string>& cols, const std::vector<double>& vals) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? " " : "") + cols[i] + "=" + g6(vals[i]);
  return s;
}

inline ModelKind reduced_kind(const ScenarioConfig& c) {
  switch (c.model) {
    case ModelKind::sis:
    case ModelKind::reduced_sis: return ModelKind::reduced_sis;
    case ModelKind::siri: {
      const auto& q = std::get<SiriParams>(c.params);
      return q.beta_p > q.beta_hat_p ? ModelKind::reduced_siri_strong : ModelKind::reduced_siri_weak;
    }
    case ModelKind::reduced_siri_strong:
    case ModelKind::reduced_siri_weak: return c.model;
    case ModelKind::siri_vanilla: break;
  }
  throw DomainError("model siri-vanilla has no behavioural reduction");
}

/// Simulation body shared by the full and reduced actions. Returns the
/// CSV text, the final-state line and the final-window mean of y.
struct SimOutput {
  std::string csv;
  std::string final_state;
  double observed_y = 0.0;
  std::string extra;
};

inline SimOutput simulate_config(const ScenarioConfig& c) {
  SimOutput out;
  std::ostringstream os;
  switch (c.model) {
    case ModelKind::sis: {
      const auto& p = std::get<SisParams>(c.params);
      const auto traj = simulate_sis(p, sis_state(c), c.integration);
      write_csv(os, traj);
      const auto& x = traj.states.back();
      out.final_state = state_line({"t", "y", "z_S", "z_I"}, {traj.times.back(), x.y, x.z_S, x.z_I});
      out.observed_y = final_window(traj, 0).mean;
      out.extra = std::to_string(traj.events.size()) + " crossings of y_int";
      break;
    }
    case ModelKind::siri: {
      const auto& p = std::get<SiriParams>(c.params);
      const auto traj = simulate_siri(p, siri_state(c), c.integration);
      write_csv(os, traj);
      const auto& x = traj.states.back();
      out.final_state = state_line({"t", "s", "y", "r", "z_S", "z_I", "z_R"},
                                   {traj.times.back(), x.s, x.y, x.r, x.z_S, x.z_I, x.z_R});
      out.observed_y = final_window(traj, 1).mean;
      out.extra = std::to_string(traj.events.size()) + " threshold crossings";
      break;
    }
    case ModelKind::siri_vanilla: {
      const auto& p = std::get<VanillaSiriParams>(c.params);
      const double y = c.initial[0], r = c.initial[1];
      const auto traj = simulate_siri_vanilla(p, {std::max(0.0, 1.0 - y - r), y, r}, c.integration);
      write_csv(os, traj);
      const auto& x = traj.states.back();
      out.final_state = state_line({"t", "s", "y", "r"}, {traj.times.back(), x.s, x.y, x.r});
      out.observed_y = final_window(traj, 1).mean;
      break;
    }
    case ModelKind::reduced_sis: {
      const auto& p = std::get<SisParams>(c.params);
      const auto sys = reduced_sis_system(p);
      const auto traj = simulate_hybrid(sys, std::array<double, 1>{c.initial[0]}, c.integration);
      write_csv(os, sys, traj);
      out.final_state = state_line({"t", "y"}, {traj.times.back(), traj.states.back()[0]}) +
                        " mode=" + traj.modes.back().id;
      out.observed_y = final_mean(traj.times, [&](std::size_t i) { return traj.states[i][0]; });
      out.extra = std::to_string(traj.sliding.size()) + " sliding intervals";
      break;
    }
    case ModelKind::reduced_siri_strong:
    case ModelKind::reduced_siri_weak: {
      const auto& p = std::get<SiriParams>(c.params);
      const auto sys = c.model == ModelKind::reduced_siri_strong ? reduced_siri_strong_system(p)
                                                                 : reduced_siri_weak_system(p);
      const auto traj = simulate_hybrid(sys, std::array<double, 2>{c.initial[0], c.initial[1]}, c.integration);
      write_csv(os, sys, traj);
      const auto& x = traj.states.back();
      out.final_state = state_line({"t", "y", "r"}, {traj.times.back(), x[0], x[1]}) + " mode=" + traj.modes.back().id;
      out.observed_y = final_mean(traj.times, [&](std::size_t i) { return traj.states[i][0]; });
      out.extra = std::to_string(traj.sliding.size()) + " sliding intervals";
      break;
    }
  }
  out.csv = os.str();
  return out;
}

inline void run_simulation(const ScenarioConfig& c, const RunOptions& o, ScenarioResult& res, std::ostream& sum) {
  const auto sim = simulate_config(c);
  const auto path = resolve(o, c.output_path);
  write_atomic(path, sim.csv);
  res.artifacts.push_back(path);

  const auto [predicted, verdict] = predicted_attractors(c);
  res.observed_y = sim.observed_y;
  res.predicted_y = predicted;
  double gap = std::numeric_limits<double>::infinity();
  for (double a : predicted) gap = std::min(gap, std::abs(sim.observed_y - a));

  sum << "  output: " << path.string() << "\n  final state: " << sim.final_state << '\n';
  if (!sim.extra.empty()) sum << "  events: " << sim.extra << '\n';
  sum << "  final-window mean y: " << g6(sim.observed_y) << "\n  classifier: " << verdict << ", predicted y in {";
  for (std::size_t i = 0; i < predicted.size(); ++i) sum << (i ? ", " : "") << g6(predicted[i]);
  sum << "}\n  detected attractor: " << (gap <= o.check_tol ? "matches prediction" : "no predicted attractor")
      << " (gap " << g6(gap) << ")\n";
  if (o.check) {
    res.check_passed = gap <= o.check_tol;
    sum << "  check: " << (*res.check_passed ? "pass" : "FAIL") << '\n';
    if (!*res.check_passed) res.status = exit_check;
  }
}

inline void run_equilibria(const ScenarioConfig& c, const RunOptions& o, ScenarioResult& res, std::ostream& sum,
                           bool classify_only) {
  Json doc = {{"scenario", c.name}, {"model", to_string(c.model)}};
  std::string table;
  if (const auto* v = std::get_if<VanillaSiriParams>(&c.params)) {
    const auto reg = vanilla_siri_classify(v->beta, v->beta_hat, v->gamma);
    doc["classification"] = to_json(reg);
    table = std::string("vanilla SIRI: ") + to_string(reg.regime) + " (R0 = " + g6(reg.R0) + ", R1 = " + g6(reg.R1) +
            ")\n";
  } else if (const auto* q = std::get_if<SiriParams>(&c.params)) {
    const auto rep = siri_classify(*q);
    doc["thresholds"] = to_json(thresholds(*q));
    doc["classification"] = to_json(rep);
    table = render_table(rep);
  } else {
    const auto& p = std::get<SisParams>(c.params);
    const auto rows = sis_equilibria(p);
    const auto [band, level] = sis_regime(p);
    doc["thresholds"] = to_json(thresholds(p));
    doc["regime"] = {{"band", band}, {"endemic_level", level}};
    doc["reduced"] = to_json(classify_reduced_sis(p));
    const auto stable = stable_branch(rows);
    doc["stable"] = stable.empty() ? Json(nullptr) : Json(stable);
    if (!classify_only) doc["equilibria"] = to_json(rows);
    table = classify_only ? "regime: " + band + ", " + level + "; stable: " + (stable.empty() ? "none" : stable) +
                                "\nreduced: " + classify_reduced_sis(p).statement + '\n'
                          : render_table(p, rows);
  }
  const auto path = resolve(o, with_suffix(c.output_path, classify_only ? "-classify.json" : "-equilibria.json"));
  write_atomic(path, doc.dump(2) + '\n');
  res.artifacts.push_back(path);
  sum << "  output: " << path.string() << '\n' << table;
}

inline void run_bifurcation(const ScenarioConfig& c, const RunOptions& o, ScenarioResult& res, std::ostream& sum) {
  if (!c.sweep) throw DomainError("bifurcate needs a [sweep] section");
  const auto& p = std::get<SisParams>(c.params);
  const auto table = sweep_gamma(p, c.sweep->gamma_lo, c.sweep->gamma_hi, c.sweep->n_points, o.jobs);
  const auto path = resolve(o, c.output_path);
  write_atomic(path, export_branches(table));
  res.artifacts.push_back(path);
  sum << "  output: " << path.string() << "\n  grid: " << table.gamma_grid.size() << " points in ["
      << g6(c.sweep->gamma_lo) << ", " << g6(c.sweep->gamma_hi) << "]\n";
  for (const auto& t : table.transition_points)
    sum << "  " << t.label << " gamma=" << g6(t.gamma) << " (" << t.branch_a << "/" << t.branch_b << ")\n";
  if (table.notice) sum << "  notice: " << *table.notice << '\n';
  std::string order;
  for (const auto& row : table.rows) {
    const auto s = stable_branch(row);
    if (!s.empty() && (order.empty() || order.substr(order.size() - s.size()) != s))
      order += (order.empty() ? "" : " -> ") + s;
  }
  sum << "  stable branch with increasing gamma: " << order << '\n';
}

}  // namespace detail

/// Runs one scenario. Integration failures are reported through the status
/// and the summary; configuration problems throw.
inline ScenarioResult run_scenario(ScenarioConfig config, const RunOptions& options = {}) {
  if (auto v = check_invariants(config)) throw DomainError("scenario invariant violated: " + *v);
  const Action action = options.action.value_or(config.sweep ? Action::bifurcate : Action::simulate);

  if (action == Action::reduced && config.model != detail::reduced_kind(config)) {
    const auto kind = detail::reduced_kind(config);
    config.initial.resize(kind == ModelKind::reduced_sis ? 1 : 2);
    config.model = kind;
    config.sweep.reset();
    config.output_path = detail::with_suffix(config.output_path, "-reduced.csv");
  }

  ScenarioResult res;
  res.name = config.name;
  std::ostringstream sum;
  sum << "scenario " << config.name << "  model=" << to_string(config.model) << "  action=" << to_string(action)
      << "  provenance=" << config.provenance << '\n';
  try {
    switch (action) {
      case Action::simulate:
      case Action::reduced: detail::run_simulation(config, options, res, sum); break;
      case Action::equilibria: detail::run_equilibria(config, options, res, sum, false); break;
      case Action::classify: detail::run_equilibria(config, options, res, sum, true); break;
      case Action::bifurcate: detail::run_bifurcation(config, options, res, sum); break;
    }
  } catch (const StepSizeError& e) {
    res.status = exit_integration;
    sum << "  integration failed at t = " << detail::g6(e.time()) << ": " << e.what() << '\n';
  } catch (const ChatteringError& e) {
    res.status = exit_integration;
    sum << "  integration failed at t = " << detail::g6(e.time()) << ": " << e.what() << '\n';
  }
  res.summary = sum.str();
  return res;
}

/// Runs every configuration of a preset on up to `options.jobs` workers.
/// Results keep the preset's order.
inline std::vector<ScenarioResult> run_preset(const Preset& preset, const RunOptions& options = {},
                                              const Overrides& overrides = {}) {
  std::vector<ScenarioConfig> runs = preset.runs;
  for (auto& c : runs) apply_overrides(c, overrides);
  std::vector<ScenarioResult> results(runs.size());
  std::vector<std::string> failures(runs.size());
  std::atomic<std::size_t> next{0};

  RunOptions inner = options;
  inner.action.reset();
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        results[i] = run_scenario(runs[i], inner);
      } catch (const std::exception& e) {
        results[i].name = runs[i].name;
        results[i].status = exit_error;
        results[i].summary = "scenario " + runs[i].name + "\n  error: " + e.what() + '\n';
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(runs.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace epigame
