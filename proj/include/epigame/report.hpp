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

// Structured output for equilibrium and classifier reports: JSON documents
// and a fixed-width table with one column per SIS equilibrium.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epigame/bifurcation.hpp"
#include "epigame/equilibria.hpp"
#include "epigame/hybrid.hpp"
#include "epigame/model.hpp"

namespace epigame {

using Json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinities or NaN; those become null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

template <class T>
Json optional_number(const std::optional<T>& v) {
  return v ? number(*v) : Json(nullptr);
}

}  // namespace detail

inline Json to_json(const EquilibriumReport& r) {
  Json ev = Json::array();
  for (const auto& z : r.eigenvalues) ev.push_back({detail::number(z.real()), detail::number(z.imag())});
  return {{"label", r.label},
          {"coordinates", detail::numbers(r.coordinates)},
          {"exists", r.exists},
          {"existence_condition", r.existence_condition},
          {"eigenvalues", ev},
          {"stability", to_string(r.stability)},
          {"eigen_stability", to_string(r.eigen_stability)},
          {"justification", r.justification}};
}

inline Json to_json(const std::vector<EquilibriumReport>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

inline Json to_json(const Thresholds& t) {
  Json out = {{"y_int", detail::number(t.y_int)},
              {"y_u", detail::number(t.y_u)},
              {"y_p", detail::number(t.y_p)},
              {"z_S_int", detail::number(t.z_S_int)}};
  if (t.y_hat_int) out["y_hat_int"] = detail::number(*t.y_hat_int);
  return out;
}

inline const char* to_string(IfeStabilityKind k) {
  switch (k) {
    case IfeStabilityKind::all_stable: return "all-stable";
    case IfeStabilityKind::all_unstable: return "all-unstable";
    case IfeStabilityKind::stable_above_split: return "stable-above-split";
    case IfeStabilityKind::stable_below_split: return "stable-below-split";
  }
  return "?";
}

inline Json to_json(const SiriReducedReport& r) {
  return {{"immunity", r.strong ? "strengthened" : "compromised"},
          {"case", r.case_id},
          {"statement", r.statement},
          {"ife", {{"kind", to_string(r.ife.kind)}, {"r_split", detail::optional_number(r.ife.r_split)}}},
          {"bistable", r.bistable},
          {"attractors", detail::numbers(r.attractors)},
          {"equilibria", to_json(r.equilibria)}};
}

inline Json to_json(const VanillaSiriRegime& r) {
  return {{"R0", detail::number(r.R0)},
          {"R1", detail::number(r.R1)},
          {"M", detail::number(r.M)},
          {"regime", to_string(r.regime)},
          {"basin_threshold", detail::optional_number(r.basin_threshold)},
          {"endemic_level", detail::optional_number(r.endemic_level)},
          {"notice", r.notice}};
}

inline Json to_json(const ReducedOutcome& r) {
  return {{"case", r.case_id},
          {"statement", r.statement},
          {"y_limit", detail::number(r.y_limit)},
          {"r_limit", detail::optional_number(r.r_limit)},
          {"monotone", r.monotone},
          {"sliding_limit", r.sliding_limit}};
}

inline Json to_json(const BranchTable& t) {
  Json points = Json::array();
  for (const auto& tp : t.transition_points)
    points.push_back({{"label", tp.label}, {"gamma", tp.gamma}, {"branches", {tp.branch_a, tp.branch_b}}});
  return {{"n_points", t.gamma_grid.size()},
          {"gamma_lo", t.gamma_grid.empty() ? Json(nullptr) : Json(t.gamma_grid.front())},
          {"gamma_hi", t.gamma_grid.empty() ? Json(nullptr) : Json(t.gamma_grid.back())},
          {"transition_points", points},
          {"notice", t.notice ? Json(*t.notice) : Json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Table rendering. Rows follow the regime bands of the SIS existence table:
// the recovery-rate band, then the ordering of the endemic levels. The
// stable cell is marked with '*'.

/// Regime of the SIS parameters as (recovery band, endemic ordering).
inline std::pair<std::string, std::string> sis_regime(const SisParams& p) {
  const auto th = thresholds(p);
  if (p.gamma > p.beta_p) return {"gamma > beta_p", "-"};
  const std::string band = p.gamma > p.alpha * p.beta_p ? "alpha beta_p < gamma < beta_p" : "gamma < alpha beta_p";
  if (th.y_u < th.y_int) return {band, "y_u < y_int"};
  if (band != "gamma < alpha beta_p") return {band, "y_int < y_u"};
  if (th.y_p < th.y_int) return {band, "y_p < y_int < y_u"};
  return {band, "y_int < y_p"};
}

inline std::string render_table(const SisParams& p, const std::vector<EquilibriumReport>& rows) {
  auto cell = [](const EquilibriumReport& r) -> std::string {
    if (!r.exists) return "-";
    std::string s = std::string("yes, ") + to_string(r.stability);
    if (r.stability == Stability::stable) s += " *";
    return s;
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  const auto [band, level] = sis_regime(p);
  constexpr std::size_t wb = 31, wl = 19, wc = 18;

  std::ostringstream os;
  os << pad("recovery band", wb) << " | " << pad("endemic level", wl);
  for (const auto& r : rows) os << " | " << pad(r.label, wc);
  os << '\n' << std::string(wb, '-') << "-+-" << std::string(wl, '-');
  for (std::size_t i = 0; i < rows.size(); ++i) os << "-+-" << std::string(wc, '-');
  os << '\n' << pad(band, wb) << " | " << pad(level, wl);
  for (const auto& r : rows) os << " | " << pad(cell(r), wc);
  os << "\n\n";

  for (const auto& r : rows) {
    os << r.label << " (";
    for (std::size_t i = 0; i < r.coordinates.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", r.coordinates[i]);
      os << (i ? ", " : "") << buf;
    }
    os << ")  " << (r.exists ? "exists" : "absent") << " [" << r.existence_condition << "]";
    if (r.exists) os << "  eigen: " << to_string(r.eigen_stability);
    os << "\n    " << r.justification << '\n';
  }
  return os.str();
}

/// Same layout for the reduced SIRI report: one column per equilibrium kind.
inline std::string render_table(const SiriReducedReport& rep) {
  std::ostringstream os;
  os << (rep.strong ? "strengthened" : "compromised") << " immunity, case " << rep.case_id << ": " << rep.statement
     << '\n';
  os << "IFE: " << to_string(rep.ife.kind);
  if (rep.ife.r_split) os << " (r split " << *rep.ife.r_split << ')';
  os << (rep.bistable ? ", bistable" : "") << '\n';
  for (const auto& r : rep.equilibria) {
    os << "  " << r.label << ": ";
    if (!r.exists) {
      os << "-\n";
      continue;
    }
    os << to_string(r.stability) << (r.stability == Stability::stable ? " *" : "") << "  (" << r.justification
       << ")\n";
  }
  return os.str();
}

}  // namespace epigame
