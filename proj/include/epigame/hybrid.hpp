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
 * Reduced (epsilon -> 0) slow dynamics. Behaviour sits at the stable
 * equilibrium of the fast replicator system, which turns the epidemic
 * field into a piecewise-smooth system switching on y = y_int and/or
 * y = y_hat_int. Solutions are Filippov solutions: on an attractive surface
 * the state slides with the convex weight (equivalent control) that makes
 * the field tangent.
 *
 * Reduced states keep the infected fraction at index 0:
 *   SIS:  x = (y)
 *   SIRI: x = (y, r), s = 1 - y - r
 *
 * Every region is described by constant controls (z_S, z_R); the field is
 * affine in each control, so the convex combination of the two one-sided
 * fields with weight z on the lower side equals the field evaluated with
 * the sliding control set to z.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "epigame/csv.hpp"
#include "epigame/error.hpp"
#include "epigame/integrator.hpp"
#include "epigame/model.hpp"

namespace epigame {

/// Tolerance below which a one-sided normal component counts as tangent.
inline constexpr double kGrazingTol = 1e-12;

/// Controls of a region: (z_S, z_R). SIS systems ignore z_R.
using Controls = std::array<double, 2>;

template <std::size_t N>
struct SwitchedSystem {
  std::vector<Surface> surfaces;          ///< ascending levels on x[0]
  std::vector<Controls> region_controls;  ///< surfaces.size() + 1 entries, bottom to top
  std::vector<std::size_t> surface_control;  ///< control index that switches on each surface
  std::vector<std::string> region_ids;
  std::function<std::array<double, N>(const std::array<double, N>&, const Controls&)> field;

  std::size_t regions() const { return region_controls.size(); }

  std::array<double, N> region_field(std::size_t region, const std::array<double, N>& x) const {
    return field(x, region_controls[region]);
  }

  /// Controls on surface j with the switching control set to z.
  Controls surface_controls(std::size_t j, double z) const {
    Controls c = region_controls[j];
    c[surface_control[j]] = z;
    return c;
  }

  /// Region containing a point strictly off every surface.
  std::size_t region_of(double y) const {
    std::size_t k = 0;
    while (k < surfaces.size() && y > surfaces[k].level) ++k;
    return k;
  }
};

/// Endpoints of the set-valued field on a switching surface. `lower` is the
/// one-sided field from below (control 1, unprotected), `upper` from above.
template <std::size_t N>
struct Inclusion {
  std::size_t surface = 0;
  std::string surface_id;
  std::array<double, N> lower{};
  std::array<double, N> upper{};

  /// Convex combination with weight z on the lower endpoint.
  std::array<double, N> at(double z) const {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = z * lower[i] + (1.0 - z) * upper[i];
    return out;
  }
};

template <std::size_t N>
using ReducedValue = std::variant<std::array<double, N>, Inclusion<N>>;

template <std::size_t N>
ReducedValue<N> evaluate(const SwitchedSystem<N>& sys, const std::array<double, N>& x) {
  for (std::size_t j = 0; j < sys.surfaces.size(); ++j) {
    if (std::abs(x[0] - sys.surfaces[j].level) <= kGrazingTol) {
      return Inclusion<N>{j, sys.surfaces[j].id, sys.region_field(j, x), sys.region_field(j + 1, x)};
    }
  }
  return sys.region_field(sys.region_of(x[0]), x);
}

// ---------------------------------------------------------------------------
// Concrete systems

inline SwitchedSystem<1> reduced_sis_system(const SisParams& p) {
  const auto th = thresholds(p);
  SwitchedSystem<1> sys;
  sys.surfaces = {{"y_int", th.y_int}};
  sys.region_controls = {{1.0, 1.0}, {0.0, 1.0}};
  sys.surface_control = {0};
  sys.region_ids = {"below_y_int", "above_y_int"};
  sys.field = [p](const std::array<double, 1>& x, const Controls& c) {
    const double y = x[0];
    return std::array<double, 1>{((1.0 - y) * p.beta_p * susceptibility(c[0], p.alpha) - p.gamma) * y};
  };
  return sys;
}

namespace detail {
inline std::array<double, 2> reduced_siri_rates(const std::array<double, 2>& x, const Controls& c,
                                                const SiriParams& p) {
  const double y = x[0];
  const double r = x[1];
  const double s = 1.0 - y - r;
  const double reinfection = p.beta_hat_p * susceptibility(c[1], p.alpha) * r;
  return {(p.beta_p * susceptibility(c[0], p.alpha) * s + reinfection - p.gamma) * y,
          (p.gamma - p.beta_hat_p * susceptibility(c[1], p.alpha) * r) * y};
}
}  // namespace detail

/// Strengthened immunity (beta_p > beta_hat_p): z_S switches at y_int,
/// then z_R at y_hat_int.
inline SwitchedSystem<2> reduced_siri_strong_system(const SiriParams& p) {
  if (!(p.beta_p > p.beta_hat_p))
    throw WrongVariantError("strong-immunity reduction requires beta_p > beta_hat_p; use the weak variant");
  const auto th = thresholds(p);
  SwitchedSystem<2> sys;
  sys.surfaces = {{"y_int", th.y_int}, {"y_hat_int", *th.y_hat_int}};
  sys.region_controls = {{1.0, 1.0}, {0.0, 1.0}, {0.0, 0.0}};
  sys.surface_control = {0, 1};
  sys.region_ids = {"low", "mid", "high"};
  sys.field = [p](const std::array<double, 2>& x, const Controls& c) {
    return detail::reduced_siri_rates(x, c, p);
  };
  return sys;
}

/// Compromised immunity (beta_p < beta_hat_p): z_R switches at y_hat_int,
/// then z_S at y_int.
inline SwitchedSystem<2> reduced_siri_weak_system(const SiriParams& p) {
  if (!(p.beta_p < p.beta_hat_p))
    throw WrongVariantError("weak-immunity reduction requires beta_p < beta_hat_p; use the strong variant");
  const auto th = thresholds(p);
  SwitchedSystem<2> sys;
  sys.surfaces = {{"y_hat_int", *th.y_hat_int}, {"y_int", th.y_int}};
  sys.region_controls = {{1.0, 1.0}, {1.0, 0.0}, {0.0, 0.0}};
  sys.surface_control = {1, 0};
  sys.region_ids = {"low", "mid", "high"};
  sys.field = [p](const std::array<double, 2>& x, const Controls& c) {
    return detail::reduced_siri_rates(x, c, p);
  };
  return sys;
}

inline ReducedValue<1> reduced_sis_field(double y, const SisParams& p) {
  return evaluate(reduced_sis_system(p), std::array<double, 1>{y});
}

inline ReducedValue<2> reduced_siri_strong_field(double y, double r, const SiriParams& p) {
  return evaluate(reduced_siri_strong_system(p), std::array<double, 2>{y, r});
}

inline ReducedValue<2> reduced_siri_weak_field(double y, double r, const SiriParams& p) {
  return evaluate(reduced_siri_weak_system(p), std::array<double, 2>{y, r});
}

// ---------------------------------------------------------------------------
// Equivalent control

namespace detail {
/// Weight on the lower one-sided field that zeroes the normal component.
/// Grazing endpoints (within kGrazingTol of zero) are accepted.
inline double convex_weight(double lower, double upper, const char* where) {
  if (!(lower >= -kGrazingTol && upper <= kGrazingTol) ||
      (std::abs(lower) <= kGrazingTol && std::abs(upper) <= kGrazingTol)) {
    throw NoSlidingError(std::string("surface ") + where +
                         " is not attractive: one-sided fields do not point toward it");
  }
  return std::clamp(upper / (upper - lower), 0.0, 1.0);
}
}  // namespace detail

/// Equivalent z_S on y = y_int for the reduced SIS system. Equals
/// z_S_int whenever y_p <= y_int <= y_u.
inline double sliding_control_sis(const SisParams& p) {
  const auto sys = reduced_sis_system(p);
  const std::array<double, 1> x{sys.surfaces[0].level};
  return detail::convex_weight(sys.region_field(0, x)[0], sys.region_field(1, x)[0], "y_int");
}

enum class SiriSurface { y_int, y_hat_int };

/// Equivalent z_S (on y_int) or z_R (on y_hat_int) at the point
/// (y_surface, r) of the reduced SIRI system for either immunity variant.
inline double sliding_control_siri(SiriSurface surface, double y_surface, double r, const SiriParams& p) {
  const auto sys = p.beta_p > p.beta_hat_p ? reduced_siri_strong_system(p) : reduced_siri_weak_system(p);
  const std::string id = surface == SiriSurface::y_int ? "y_int" : "y_hat_int";
  std::size_t j = 0;
  while (sys.surfaces[j].id != id) ++j;
  if (std::abs(y_surface - sys.surfaces[j].level) > 1e-9)
    throw DomainError("sliding_control_siri: point is not on surface " + id);
  const std::array<double, 2> x{sys.surfaces[j].level, r};
  return detail::convex_weight(sys.region_field(j, x)[0], sys.region_field(j + 1, x)[0], id.c_str());
}

// ---------------------------------------------------------------------------
// Simulation

struct HybridMode {
  std::size_t index = 0;  ///< region index, or surface index while sliding
  bool sliding = false;
  std::optional<double> equivalent_control;
  std::string id;
};

struct SlidingInterval {
  std::string surface;
  double t_start = 0.0;
  double t_end = 0.0;  ///< +inf while still sliding at the end of the run
  double exit_control = 0.0;  ///< equivalent control at exit (0 or 1), NaN if never released
};

template <std::size_t N>
struct HybridTrajectory {
  std::vector<double> times;
  std::vector<std::array<double, N>> states;
  std::vector<HybridMode> modes;
  std::vector<CrossingEvent> events;
  std::vector<SlidingInterval> sliding;

  std::size_t size() const { return times.size(); }
};

inline constexpr std::size_t kMaxTransitionsWithoutSliding = 10000;

namespace detail {

template <std::size_t N>
class HybridStepper {
public:
  HybridStepper(const SwitchedSystem<N>& sys, HybridTrajectory<N>& out, double tol)
      : sys_(sys), out_(out), tol_(tol) {}

  struct Mode {
    bool sliding = false;
    std::size_t index = 0;
  };

  /// Mode for a point lying on surface j, approached from `from` (-1 below,
  /// +1 above, 0 unknown).
  Mode decide_on_surface(std::size_t j, const std::array<double, N>& x, int from, double t) {
    const double lower = sys_.region_field(j, x)[0];
    const double upper = sys_.region_field(j + 1, x)[0];
    const bool lower_tangent = std::abs(lower) <= kGrazingTol;
    const bool upper_tangent = std::abs(upper) <= kGrazingTol;
    if (lower > kGrazingTol && upper < -kGrazingTol) {
      out_.sliding.push_back({sys_.surfaces[j].id, t, std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::quiet_NaN()});
      transitions_ = 0;
      return {true, j};
    }
    if (lower_tangent && !upper_tangent) return {false, j};
    if (upper_tangent && !lower_tangent) return {false, j + 1};
    if (lower > kGrazingTol && upper > kGrazingTol) return {false, j + 1};
    if (lower < -kGrazingTol && upper < -kGrazingTol) return {false, j};
    // Repulsive or doubly tangent: stay on the side we came from.
    return {false, from > 0 ? j + 1 : j};
  }

  Mode initial_mode(const std::array<double, N>& x, double t) {
    for (std::size_t j = 0; j < sys_.surfaces.size(); ++j)
      if (std::abs(x[0] - sys_.surfaces[j].level) <= kGrazingTol) return decide_on_surface(j, x, 0, t);
    return {false, sys_.region_of(x[0])};
  }

  std::array<double, N> sliding_field(std::size_t j, const std::array<double, N>& x) const {
    const double lower = sys_.region_field(j, x)[0];
    const double upper = sys_.region_field(j + 1, x)[0];
    const double denom = upper - lower;
    const double z = denom != 0.0 ? upper / denom : 0.5;
    auto d = sys_.field(x, sys_.surface_controls(j, z));
    d[0] = 0.0;
    return d;
  }

  double equivalent_control(std::size_t j, const std::array<double, N>& x) const {
    const double lower = sys_.region_field(j, x)[0];
    const double upper = sys_.region_field(j + 1, x)[0];
    return std::clamp(upper / (upper - lower), 0.0, 1.0);
  }

  std::array<double, N> project(std::array<double, N> x, double t) const {
    if (const auto bad = project_unit_box(x, tol_); bad != N)
      throw StepSizeError("reduced system left [0,1] at t=" + csv::format_double(t), t);
    return x;
  }

  /// Advances the state by h in the current mode, handling any number of
  /// surface crossings and sliding releases inside the step.
  void advance(std::array<double, N>& x, Mode& mode, double t0, double h) {
    double remaining = h;
    double t = t0;
    std::size_t substeps = 0;
    while (remaining > 0.0) {
      if (++substeps > kMaxTransitionsWithoutSliding)
        throw ChatteringError("too many surface transitions inside one step; reduce dt", t);
      const double used = mode.sliding ? advance_sliding(x, mode, t, remaining)
                                       : advance_region(x, mode, t, remaining);
      remaining -= used;
      t += used;
      if (remaining <= 1e-15 * h) break;
    }
  }

private:
  std::array<double, N> region_step(std::size_t k, const std::array<double, N>& x, double h) const {
    return rk4_raw<N>([&](const std::array<double, N>& a) { return sys_.region_field(k, a); }, x, h);
  }

  std::array<double, N> sliding_step(std::size_t j, const std::array<double, N>& x, double h) const {
    auto next = rk4_raw<N>([&](const std::array<double, N>& a) { return sliding_field(j, a); }, x, h);
    next[0] = sys_.surfaces[j].level;
    return next;
  }

  /// Returns the time actually advanced.
  double advance_region(std::array<double, N>& x, Mode& mode, double t, double h) {
    const std::size_t k = mode.index;
    const auto trial = region_step(k, x, h);
    // Surface j is crossed if the trial lands strictly beyond it.
    auto crossed = [&](const std::array<double, N>& s) -> std::optional<std::size_t> {
      if (k > 0 && s[0] < sys_.surfaces[k - 1].level - kCrossSlack) return k - 1;
      if (k < sys_.surfaces.size() && s[0] > sys_.surfaces[k].level + kCrossSlack) return k;
      return std::nullopt;
    };
    const auto hit = crossed(trial);
    if (!hit) {
      x = project(trial, t + h);
      return h;
    }
    const std::size_t j = *hit;
    const double level = sys_.surfaces[j].level;
    const int dir = (k == j) ? +1 : -1;  // leaving through the top of region k means moving up
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < kBisectionIterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto s = region_step(k, x, mid * h);
      const bool beyond = dir > 0 ? s[0] >= level : s[0] <= level;
      (beyond ? hi : lo) = mid;
      if ((hi - lo) * h < 1e-13) break;
    }
    const double used = hi * h;
    auto landed = region_step(k, x, used);
    landed[0] = level;
    x = project(landed, t + used);
    out_.events.push_back({t + used, sys_.surfaces[j].id, dir});
    if (++transitions_ > kMaxTransitionsWithoutSliding)
      throw ChatteringError("more than 10^4 surface transitions without sliding; reduce dt", t + used);
    mode = decide_on_surface(j, x, -dir, t + used);
    return used;
  }

  double advance_sliding(std::array<double, N>& x, Mode& mode, double t, double h) {
    const std::size_t j = mode.index;
    auto margin = [&](const std::array<double, N>& s) {
      return std::min(sys_.region_field(j, s)[0], -sys_.region_field(j + 1, s)[0]);
    };
    const auto trial = sliding_step(j, x, h);
    if (margin(trial) > kGrazingTol) {
      x = project(trial, t + h);
      return h;
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < kBisectionIterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      (margin(sliding_step(j, x, mid * h)) > kGrazingTol ? lo : hi) = mid;
      if ((hi - lo) * h < 1e-13) break;
    }
    const double used = hi * h;
    x = project(sliding_step(j, x, used), t + used);
    const double lower = sys_.region_field(j, x)[0];
    const double upper = sys_.region_field(j + 1, x)[0];
    // Lower side stopped pushing up: the weight ran to 1, release downward.
    const bool release_down = lower <= -upper;
    auto& interval = out_.sliding.back();
    interval.t_end = t + used;
    interval.exit_control = release_down ? 1.0 : 0.0;
    mode = {false, release_down ? j : j + 1};
    return used;
  }

  static constexpr int kBisectionIterations = 40;
  static constexpr double kCrossSlack = 1e-14;

  const SwitchedSystem<N>& sys_;
  HybridTrajectory<N>& out_;
  double tol_;
  std::size_t transitions_ = 0;
};

}  // namespace detail

/// Fixed-step RK4 inside regions, bisection-refined surface crossings,
/// and Filippov sliding on attractive surfaces. `config.epsilon` is unused.
template <std::size_t N>
HybridTrajectory<N> simulate_hybrid(const SwitchedSystem<N>& sys, const std::array<double, N>& x0,
                                    const IntegrationConfig& config) {
  if (auto v = check_invariants(config)) throw DomainError("integration config: " + *v);
  for (double v : x0)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("initial state outside [0,1]^n");

  HybridTrajectory<N> out;
  detail::HybridStepper<N> stepper(sys, out, config.projection_tol);

  auto mode_record = [&](const typename detail::HybridStepper<N>::Mode& m, const std::array<double, N>& x) {
    HybridMode hm;
    hm.index = m.index;
    hm.sliding = m.sliding;
    if (m.sliding) {
      hm.equivalent_control = stepper.equivalent_control(m.index, x);
      hm.id = "sliding_" + sys.surfaces[m.index].id;
    } else {
      hm.id = sys.region_ids[m.index];
    }
    return hm;
  };

  auto x = x0;
  auto mode = stepper.initial_mode(x, 0.0);
  if (mode.sliding) x[0] = sys.surfaces[mode.index].level;
  out.times.push_back(0.0);
  out.states.push_back(x);
  out.modes.push_back(mode_record(mode, x));

  const auto steps = static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * config.dt;
    stepper.advance(x, mode, t_prev, config.dt);
    if (k % config.record_stride == 0 || k == steps) {
      out.times.push_back(static_cast<double>(k) * config.dt);
      out.states.push_back(x);
      out.modes.push_back(mode_record(mode, x));
    }
  }
  return out;
}

inline HybridTrajectory<1> simulate_reduced_sis(const SisParams& p, double y0, const IntegrationConfig& config) {
  return simulate_hybrid(reduced_sis_system(p), std::array<double, 1>{y0}, config);
}

/// Picks the strong or weak reduction from the ordering of beta_p and beta_hat_p.
inline SwitchedSystem<2> reduced_siri_system(const SiriParams& p) {
  return p.beta_p > p.beta_hat_p ? reduced_siri_strong_system(p) : reduced_siri_weak_system(p);
}

inline HybridTrajectory<2> simulate_reduced_siri(const SiriParams& p, double y0, double r0,
                                                 const IntegrationConfig& config) {
  if (y0 + r0 > 1.0 + 1e-12) throw DomainError("reduced SIRI initial state needs y + r <= 1");
  return simulate_hybrid(reduced_siri_system(p), std::array<double, 2>{y0, r0}, config);
}

/// Behavioural coordinates implied by the mode: region controls off the
/// surfaces, the equivalent control on them. Returns (z_S, z_R).
template <std::size_t N>
Controls implied_controls(const SwitchedSystem<N>& sys, const HybridMode& mode) {
  if (!mode.sliding) return sys.region_controls[mode.index];
  return sys.surface_controls(mode.index, mode.equivalent_control.value_or(0.0));
}

/// Columns: t,y,z_S,z_I,mode,z_eq for SIS; t,s,y,r,z_S,z_I,z_R,mode,z_eq for SIRI.
template <std::size_t N>
void write_csv(std::ostream& os, const SwitchedSystem<N>& sys, const HybridTrajectory<N>& traj) {
  static_assert(N == 1 || N == 2);
  using csv::format_double;
  if constexpr (N == 1)
    os << "t,y,z_S,z_I,mode,z_eq\n";
  else
    os << "t,s,y,r,z_S,z_I,z_R,mode,z_eq\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& x = traj.states[i];
    const auto& m = traj.modes[i];
    const auto c = implied_controls(sys, m);
    os << format_double(traj.times[i]) << ',';
    if constexpr (N == 1) {
      os << format_double(x[0]) << ',' << format_double(c[0]) << ",0,";
    } else {
      os << format_double(1.0 - x[0] - x[1]) << ',' << format_double(x[0]) << ',' << format_double(x[1])
         << ',' << format_double(c[0]) << ",0," << format_double(c[1]) << ',';
    }
    os << m.id << ',';
    if (m.equivalent_control) os << format_double(*m.equivalent_control);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Regime classification of the reduced SIS system

struct ReducedOutcome {
  int case_id = 0;  ///< 1..4
  std::string statement;
  double y_limit = 0.0;
  std::optional<double> r_limit;
  bool monotone = false;
  bool sliding_limit = false;
};

/// Ties on a case boundary resolve into the lower-numbered case.
inline ReducedOutcome classify_reduced_sis(const SisParams& p) {
  const auto th = thresholds(p);
  if (th.y_u <= 0.0) return {1, "y_u <= 0: y decreases monotonically to 0", 0.0, std::nullopt, true, false};
  if (th.y_u <= th.y_int)
    return {2, "0 < y_u < y_int: y converges monotonically to y_u", th.y_u, std::nullopt, true, false};
  if (th.y_p <= th.y_int)
    return {3, "y_p < y_int < y_u: y converges to the sliding mode y_int", th.y_int, std::nullopt, false, true};
  return {4, "y_int < y_p: y converges monotonically to y_p", th.y_p, std::nullopt, true, false};
}

}  // namespace epigame
