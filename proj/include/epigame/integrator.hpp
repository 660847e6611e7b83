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
 * Fixed-step classical RK4 for the smooth coupled systems.
 *
 * Behavioural coordinates evolve on the fast timescale: their derivatives
 * are divided by epsilon, so the simulation clock is epidemic time. After
 * each step the state is clamped onto [0,1]^n if it left the box by at most
 * `projection_tol`; larger excursions raise StepSizeError.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "epigame/csv.hpp"
#include "epigame/error.hpp"
#include "epigame/model.hpp"

namespace epigame {

template <class S>
concept PhaseState = requires(const S& s, const std::array<double, S::size>& a) {
  { s.to_array() } -> std::same_as<std::array<double, S::size>>;
  { S::from_array(a) } -> std::same_as<S>;
  S::columns;
  S::behavioral;
  S::infected_index;
};

struct IntegrationConfig {
  double dt = 0.05;
  double t_end = 2000.0;
  double epsilon = 1.0;
  double projection_tol = 1e-9;
  std::size_t record_stride = 1;

  friend bool operator==(const IntegrationConfig&, const IntegrationConfig&) = default;
};

/// Step size that keeps the fast replicator subsystem inside the RK4
/// stability region: 0.05 on the epidemic clock, capped at epsilon / 2.
inline double default_dt(double epsilon) { return std::min(0.05, 0.5 * epsilon); }

inline std::optional<std::string> check_invariants(const IntegrationConfig& c) {
  if (!(c.dt > 0.0 && std::isfinite(c.dt))) return "dt > 0";
  if (!(c.t_end >= c.dt && std::isfinite(c.t_end))) return "t_end >= dt";
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) return "0 < epsilon <= 1 (ε ∈ (0,1])";
  if (!(c.projection_tol >= 0.0)) return "projection_tol >= 0";
  if (c.record_stride < 1) return "record_stride >= 1";
  return std::nullopt;
}

/// A level set y = level of the infected coordinate.
struct Surface {
  std::string id;
  double level = 0.0;
};

struct CrossingEvent {
  double time = 0.0;
  std::string surface;
  int direction = 0;  ///< +1 upward, -1 downward
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<CrossingEvent> events;

  std::size_t size() const { return times.size(); }
};

namespace detail {

template <std::size_t N, class Deriv>
std::array<double, N> rk4_raw(const Deriv& g, const std::array<double, N>& x, double dt) {
  auto axpy = [](const std::array<double, N>& a, double h, const std::array<double, N>& k) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + h * k[i];
    return out;
  };
  const auto k1 = g(x);
  const auto k2 = g(axpy(x, 0.5 * dt, k1));
  const auto k3 = g(axpy(x, 0.5 * dt, k2));
  const auto k4 = g(axpy(x, dt, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

/// Clamp into [0,1]^N; returns the index of the first coordinate that is
/// further than tol outside, or N if every coordinate was accepted.
template <std::size_t N>
std::size_t project_unit_box(std::array<double, N>& x, double tol) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!(x[i] >= -tol && x[i] <= 1.0 + tol)) return i;
    x[i] = std::clamp(x[i], 0.0, 1.0);
  }
  return N;
}

}  // namespace detail

/// One RK4 step of the epsilon-scaled system followed by projection.
/// `t` is only used to stamp errors.
template <PhaseState State, class Field>
State rk4_step(const Field& field, const State& state, double dt, double epsilon,
               double projection_tol = 1e-9, double t = 0.0) {
  constexpr std::size_t N = State::size;
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("rk4_step: epsilon must lie in (0,1]");
  auto scaled = [&](const std::array<double, N>& a) {
    auto d = static_cast<State>(field(State::from_array(a))).to_array();
    for (std::size_t i = 0; i < N; ++i)
      if (State::behavioral[i]) d[i] /= epsilon;
    return d;
  };
  auto next = detail::rk4_raw<N>(scaled, state.to_array(), dt);
  if (const auto bad = detail::project_unit_box(next, projection_tol); bad != N) {
    throw StepSizeError("RK4 step left [0,1] in coordinate " + std::string(State::columns[bad]) +
                            " at t=" + csv::format_double(t + dt) + " (value " +
                            csv::format_double(next[bad]) + "); reduce dt or increase epsilon",
                        t + dt);
  }
  return State::from_array(next);
}

namespace detail {

/// Fixed-step driver shared by both charts. `advance(t_prev)` moves the
/// stepper's internal state by one step and returns it as a State.
template <PhaseState State, class Advance>
Trajectory<State> run_fixed_step(Advance&& advance, const State& state0, const IntegrationConfig& config,
                                 const std::vector<Surface>& surfaces) {
  if (auto v = check_invariants(config)) throw DomainError("integration config: " + *v);
  for (double v : state0.to_array())
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("initial state outside [0,1]^n");

  constexpr std::size_t iy = State::infected_index;
  const auto steps = static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));

  Trajectory<State> traj;
  traj.times.reserve(steps / config.record_stride + 2);
  traj.states.reserve(steps / config.record_stride + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(state0);

  State x = state0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * config.dt;
    const double t = static_cast<double>(k) * config.dt;
    const State next = advance(t_prev);

    const double y0 = x.to_array()[iy];
    const double y1 = next.to_array()[iy];
    for (const auto& s : surfaces) {
      const double a = y0 - s.level;
      const double b = y1 - s.level;
      if ((a >= 0.0) != (b >= 0.0)) {
        const double frac = (a == b) ? 0.0 : a / (a - b);
        traj.events.push_back({t_prev + frac * config.dt, s.id, b >= 0.0 ? +1 : -1});
      }
    }
    x = next;
    if (k % config.record_stride == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(x);
    }
  }
  std::stable_sort(traj.events.begin(), traj.events.end(),
                   [](const CrossingEvent& l, const CrossingEvent& r) { return l.time < r.time; });
  return traj;
}

/// log(z / (1 - z)); the ends of [0,1] map to -inf and +inf.
inline double log_odds(double z) { return std::log(z) - std::log1p(-z); }

/// Inverse of log_odds, evaluated without overflow for either sign.
inline double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace detail

/// Integrates ceil(t_end/dt) steps. Records the initial state, every
/// record_stride-th step and the final step. Sign changes of
/// (y - level) between consecutive steps are logged as events with a
/// linearly interpolated crossing time.
template <PhaseState State, class Field>
Trajectory<State> simulate(const Field& field, const State& state0, const IntegrationConfig& config,
                           const std::vector<Surface>& surfaces = {}) {
  State x = state0;
  auto advance = [&](double t_prev) {
    x = rk4_step(field, x, config.dt, config.epsilon, config.projection_tol, t_prev);
    return x;
  };
  return detail::run_fixed_step(advance, state0, config, surfaces);
}

/// Same contract as simulate for fields of replicator form, given through
/// `growth` (see growth_sis). Behavioural shares are stepped as log-odds,
/// where zdot = z (1 - z) g becomes udot = g / epsilon. In the plain chart
/// a share driven towards 1 rounds to exactly 1 once 1 - z < 2^-53 and can
/// never leave again; near 0 the same happens only below the subnormal
/// range. The log-odds chart keeps both ends resolvable, so a fast
/// behavioural layer can release after a long excursion. Shares that start
/// at exactly 0 or 1 stay there, as in the plain chart.
template <PhaseState State, class Growth>
Trajectory<State> simulate_replicator(const Growth& growth, const State& state0, const IntegrationConfig& config,
                                      const std::vector<Surface>& surfaces = {}) {
  constexpr std::size_t N = State::size;
  auto to_chart = [](std::array<double, N> a) {
    for (std::size_t i = 0; i < N; ++i)
      if (State::behavioral[i]) a[i] = detail::log_odds(a[i]);
    return a;
  };
  auto from_chart = [](std::array<double, N> a) {
    for (std::size_t i = 0; i < N; ++i)
      if (State::behavioral[i]) a[i] = detail::logistic(a[i]);
    return a;
  };
  auto deriv = [&](const std::array<double, N>& w) {
    auto d = static_cast<State>(growth(State::from_array(from_chart(w)))).to_array();
    for (std::size_t i = 0; i < N; ++i)
      if (State::behavioral[i]) d[i] /= config.epsilon;
    return d;
  };

  std::array<double, N> w = to_chart(state0.to_array());
  auto advance = [&](double t_prev) {
    auto next = detail::rk4_raw<N>(deriv, w, config.dt);
    for (std::size_t i = 0; i < N; ++i) {
      if (State::behavioral[i]) {
        if (std::isnan(next[i]))
          throw StepSizeError("RK4 step produced NaN in " + std::string(State::columns[i]), t_prev + config.dt);
        continue;
      }
      if (!(next[i] >= -config.projection_tol && next[i] <= 1.0 + config.projection_tol))
        throw StepSizeError("RK4 step left [0,1] in coordinate " + std::string(State::columns[i]) + " at t=" +
                                csv::format_double(t_prev + config.dt) + " (value " + csv::format_double(next[i]) +
                                "); reduce dt or increase epsilon",
                            t_prev + config.dt);
      next[i] = std::clamp(next[i], 0.0, 1.0);
    }
    w = next;
    return State::from_array(from_chart(w));
  };
  return detail::run_fixed_step(advance, state0, config, surfaces);
}

inline std::vector<Surface> threshold_surfaces(const SisParams& p) {
  const auto th = thresholds(p);
  std::vector<Surface> out;
  if (std::isfinite(th.y_int)) out.push_back({"y_int", th.y_int});
  return out;
}

inline std::vector<Surface> threshold_surfaces(const SiriParams& p) {
  auto out = threshold_surfaces(static_cast<const SisParams&>(p));
  const auto th = thresholds(p);
  if (std::isfinite(*th.y_hat_int)) out.push_back({"y_hat_int", *th.y_hat_int});
  return out;
}

inline Trajectory<SisState> simulate_sis(const SisParams& p, const SisState& state0,
                                         const IntegrationConfig& config) {
  return simulate_replicator([&p](const SisState& s) { return growth_sis(s, p); }, state0, config,
                  threshold_surfaces(p));
}

inline Trajectory<SiriState> simulate_siri(const SiriParams& p, const SiriState& state0,
                                           const IntegrationConfig& config) {
  return simulate_replicator([&p](const SiriState& s) { return growth_siri(s, p); }, state0, config,
                  threshold_surfaces(p));
}

inline Trajectory<VanillaSiriState> simulate_siri_vanilla(const VanillaSiriParams& p,
                                                          const VanillaSiriState& state0,
                                                          const IntegrationConfig& config) {
  return simulate([&p](const VanillaSiriState& s) { return field_siri_vanilla(s, p); }, state0, config);
}

// ---------------------------------------------------------------------------
// Utility differences. Positive: staying unprotected pays off.

inline double delta_f(const SisState& st, const SisParams& p) {
  return p.c_P - p.L * (1.0 - p.alpha) * (p.beta_u * st.z_I + p.beta_p * (1.0 - st.z_I)) * st.y;
}

inline double delta_f(const SiriState& st, const SiriParams& p) {
  return p.c_P - p.L * (1.0 - p.alpha) * (p.beta_u * st.z_I + p.beta_p * (1.0 - st.z_I)) * st.y;
}

inline double delta_f_recovered(const SiriState& st, const SiriParams& p) {
  return p.c_P - p.L * (1.0 - p.alpha) * (p.beta_hat_u * st.z_I + p.beta_hat_p * (1.0 - st.z_I)) * st.y;
}

// ---------------------------------------------------------------------------
// Window statistics used for convergence checks on oscillatory runs.

struct WindowStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double max_deviation = 0.0;  ///< max |x - mean|
  std::size_t samples = 0;

  double amplitude() const { return max - min; }
};

template <class State>
WindowStats window_stats(const Trajectory<State>& traj, std::size_t coordinate, double t_from,
                         double t_to = std::numeric_limits<double>::infinity()) {
  WindowStats w;
  w.min = std::numeric_limits<double>::infinity();
  w.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < t_from || traj.times[i] > t_to) continue;
    const double v = traj.states[i].to_array()[coordinate];
    sum += v;
    w.min = std::min(w.min, v);
    w.max = std::max(w.max, v);
    ++w.samples;
  }
  if (w.samples == 0) throw DomainError("window_stats: empty window");
  w.mean = sum / static_cast<double>(w.samples);
  w.max_deviation = std::max(w.max - w.mean, w.mean - w.min);
  return w;
}

/// Statistics over the last `fraction` of the recorded horizon.
template <class State>
WindowStats final_window(const Trajectory<State>& traj, std::size_t coordinate, double fraction = 0.1) {
  const double t_end = traj.times.back();
  return window_stats(traj, coordinate, t_end * (1.0 - fraction));
}

template <class State>
void write_csv(std::ostream& os, const Trajectory<State>& traj) {
  os << 't';
  for (const char* c : State::columns) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << csv::format_double(traj.times[i]);
    for (double v : traj.states[i].to_array()) os << ',' << csv::format_double(v);
    os << '\n';
  }
}

}  // namespace epigame
