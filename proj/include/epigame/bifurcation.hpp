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

/**
 * Recovery-rate sweeps of the coupled SIS equilibria. All branches are
 * closed-form in gamma, so the sweep evaluates them on a grid and the
 * transcritical points come from their closed forms:
 *
 *   T0 = alpha beta_p               (E0 / E4)
 *   T1 = beta_p                     (E1 / E2)
 *   T2 = beta_p (1 - y_int)         (E2 / E3)
 *   T3 = alpha beta_p (1 - y_int)   (E4 / E3)
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "epigame/csv.hpp"
#include "epigame/equilibria.hpp"
#include "epigame/error.hpp"
#include "epigame/model.hpp"

namespace epigame {

struct TransitionPoint {
  std::string label;
  double gamma = 0.0;
  std::string branch_a;
  std::string branch_b;
};

struct TranscriticalPoints {
  std::vector<TransitionPoint> points;
  std::optional<std::string> notice;
};

/// `p.gamma` is ignored. When y_int >= 1 the interior branch E3 never
/// exists and only T0, T1 are returned.
inline TranscriticalPoints transcritical_points(const SisParams& p) {
  const double y_int = thresholds(p).y_int;
  TranscriticalPoints out;
  out.points.push_back({"T0", p.alpha * p.beta_p, "E0", "E4"});
  out.points.push_back({"T1", p.beta_p, "E1", "E2"});
  if (y_int < 1.0) {
    out.points.push_back({"T2", p.beta_p * (1.0 - y_int), "E2", "E3"});
    out.points.push_back({"T3", p.alpha * p.beta_p * (1.0 - y_int), "E4", "E3"});
  } else {
    out.notice = "y_int >= 1: E3 cannot exist, T2 and T3 undefined";
  }
  return out;
}

inline SisParams with_gamma(SisParams p, double gamma) {
  p.gamma = gamma;
  return p;
}

inline const EquilibriumReport& find_report(const std::vector<EquilibriumReport>& rows, std::string_view label) {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw DomainError("no equilibrium labelled " + std::string(label));
}

/// True when both branches of the transition change their number of
/// unstable eigenvalues between gamma - delta and gamma + delta.
inline bool confirms_transition(const SisParams& p, const TransitionPoint& tp, double delta = 1e-4) {
  const auto below = sis_equilibria(with_gamma(p, tp.gamma - delta));
  const auto above = sis_equilibria(with_gamma(p, tp.gamma + delta));
  for (const auto& branch : {tp.branch_a, tp.branch_b}) {
    if (unstable_count(find_report(below, branch).eigenvalues) ==
        unstable_count(find_report(above, branch).eigenvalues))
      return false;
  }
  return true;
}

struct BranchTable {
  std::vector<double> gamma_grid;
  std::vector<std::vector<EquilibriumReport>> rows;
  std::vector<TransitionPoint> transition_points;
  std::optional<std::string> notice;
};

/// Grid points are independent; with jobs > 1 they are evaluated on worker
/// threads. Row order and values do not depend on the worker count.
inline BranchTable sweep_gamma(const SisParams& p, double gamma_lo, double gamma_hi, std::size_t n_points,
                               unsigned jobs = 1) {
  if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi)) throw DomainError("sweep_gamma: need 0 < gamma_lo < gamma_hi");
  if (n_points < 2) throw DomainError("sweep_gamma: need n_points >= 2");
  BranchTable table;
  table.gamma_grid.resize(n_points);
  table.rows.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    table.gamma_grid[i] = i + 1 == n_points
                              ? gamma_hi
                              : gamma_lo + (gamma_hi - gamma_lo) * static_cast<double>(i) /
                                               static_cast<double>(n_points - 1);

  auto fill = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n_points; i += stride) table.rows[i] = sis_equilibria(with_gamma(p, table.gamma_grid[i]));
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, n_points);
  if (workers == 1) {
    fill(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill, w, workers);
    for (auto& t : pool) t.join();
  }
  const auto tc = transcritical_points(p);
  table.notice = tc.notice;
  for (const auto& t : tc.points)
    if (t.gamma >= gamma_lo && t.gamma <= gamma_hi) table.transition_points.push_back(t);
  return table;
}

/// Label of the unique existing stable equilibrium in a row, or empty.
inline std::string stable_branch(const std::vector<EquilibriumReport>& row) {
  std::string label;
  for (const auto& r : row) {
    if (!r.exists || r.stability != Stability::stable) continue;
    if (!label.empty()) return {};
    label = r.label;
  }
  return label;
}

inline std::string export_branches(const BranchTable& table) {
  using csv::format_double;
  std::ostringstream os;
  os << "gamma,label,y,z_S,z_I,stability\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (const auto& r : table.rows[i]) {
      os << format_double(table.gamma_grid[i]) << ',' << r.label;
      for (double c : r.coordinates) os << ',' << format_double(c);
      os << ',' << (r.exists ? to_string(r.stability) : "exists=false") << '\n';
    }
  }
  for (const auto& t : table.transition_points) os << "# " << t.label << " gamma=" << format_double(t.gamma) << '\n';
  return os.str();
}

struct BranchRow {
  double gamma = 0.0;
  std::string label;
  double y = 0.0, z_S = 0.0, z_I = 0.0;
  std::string stability;
};

struct ParsedBranches {
  std::vector<BranchRow> rows;
  std::vector<std::pair<std::string, double>> transitions;
};

inline ParsedBranches parse_branches(std::string_view text) {
  ParsedBranches out;
  std::istringstream is{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find(" gamma=");
      if (eq == std::string::npos) throw DomainError("malformed transition comment: " + line);
      out.transitions.emplace_back(line.substr(2, eq - 2), std::stod(line.substr(eq + 7)));
      continue;
    }
    if (header) {
      header = false;
      continue;
    }
    const auto f = csv::split(line);
    if (f.size() != 6) throw DomainError("malformed branch row: " + line);
    out.rows.push_back({std::stod(f[0]), f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), f[5]});
  }
  return out;
}

}  // namespace epigame
