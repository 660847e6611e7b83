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
 * Parameter and state types, payoffs, threshold quantities and the
 * right-hand sides of the coupled epidemic / replicator systems.
 *
 * Two epidemics are covered:
 *  - SIS: state (y, z_S, z_I), susceptible fraction s = 1 - y implicit.
 *  - SIRI: state (s, y, r, z_S, z_I, z_R) with s + y + r = 1; recovered
 *    individuals are reinfected at the hatted rates.
 *
 * z_X is always the *unprotected* share of compartment X.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "epigame/error.hpp"

namespace epigame {

struct SisParams {
  double beta_u = 0.0;  ///< transmission rate of an unprotected infector
  double beta_p = 0.0;  ///< transmission rate of a protected infector
  double alpha = 0.0;   ///< risk multiplier for a protected healthy individual
  double gamma = 0.0;   ///< recovery rate
  double c_P = 0.0;     ///< cost of protection
  double c_IU = 0.0;    ///< cost of an infected individual staying unprotected
  double c_IP = 0.0;    ///< cost of an infected individual adopting protection
  double L = 0.0;       ///< loss upon infection

  friend bool operator==(const SisParams&, const SisParams&) = default;
};

struct SiriParams : SisParams {
  double beta_hat_u = 0.0;  ///< reinfection rate from an unprotected infector
  double beta_hat_p = 0.0;  ///< reinfection rate from a protected infector

  friend bool operator==(const SiriParams&, const SiriParams&) = default;
};

/// Rates of the behaviour-free SIRI epidemic.
struct VanillaSiriParams {
  double beta = 0.0;
  double beta_hat = 0.0;
  double gamma = 0.0;

  friend bool operator==(const VanillaSiriParams&, const VanillaSiriParams&) = default;
};

/// First violated invariant, named as `lhs > rhs` style text, or nullopt.
inline std::optional<std::string> check_invariants(const SisParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!(finite(p.beta_u) && finite(p.beta_p) && finite(p.alpha) && finite(p.gamma) &&
        finite(p.c_P) && finite(p.c_IU) && finite(p.c_IP) && finite(p.L)))
    return "all parameters finite";
  if (!(p.beta_p >= 0.0)) return "beta_p >= 0 (β_p ≥ 0)";
  if (!(p.beta_u > p.beta_p)) return "beta_u > beta_p (β_u > β_p)";
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) return "0 < alpha < 1 (α ∈ (0,1))";
  if (!(p.gamma > 0.0)) return "gamma > 0 (γ > 0)";
  if (!(p.L > 0.0)) return "L > 0";
  if (!(p.c_P > 0.0)) return "c_P > 0";
  if (!(p.c_IP >= 0.0)) return "c_IP >= 0";
  if (!(p.c_IU > p.c_IP)) return "c_IU > c_IP";
  return std::nullopt;
}

inline std::optional<std::string> check_invariants(const SiriParams& p) {
  if (auto v = check_invariants(static_cast<const SisParams&>(p))) return v;
  if (!(std::isfinite(p.beta_hat_u) && std::isfinite(p.beta_hat_p))) return "all parameters finite";
  if (!(p.beta_hat_p >= 0.0)) return "beta_hat_p >= 0 (β̂_p ≥ 0)";
  if (!(p.beta_hat_u > p.beta_hat_p)) return "beta_hat_u > beta_hat_p (β̂_u > β̂_p)";
  return std::nullopt;
}

inline std::optional<std::string> check_invariants(const VanillaSiriParams& p) {
  if (!(p.beta > 0.0)) return "beta > 0";
  if (!(p.beta_hat > 0.0)) return "beta_hat > 0";
  if (!(p.gamma > 0.0)) return "gamma > 0";
  return std::nullopt;
}

template <class Params>
void validate(const Params& p) {
  if (auto v = check_invariants(p)) throw DomainError("parameter invariant violated: " + *v);
}

// ---------------------------------------------------------------------------
// States. Each state type exposes its dimension, CSV column names, which
// coordinates are behavioural (scaled by 1/epsilon) and array conversion, so
// the integrator can stay generic.

struct SisState {
  double y = 0.0;
  double z_S = 0.0;
  double z_I = 0.0;

  static constexpr std::size_t size = 3;
  static constexpr std::size_t infected_index = 0;
  static constexpr std::array<const char*, size> columns{"y", "z_S", "z_I"};
  static constexpr std::array<bool, size> behavioral{false, true, true};

  std::array<double, size> to_array() const { return {y, z_S, z_I}; }
  static SisState from_array(const std::array<double, size>& a) { return {a[0], a[1], a[2]}; }
  friend bool operator==(const SisState&, const SisState&) = default;
};

struct SiriState {
  double s = 0.0;
  double y = 0.0;
  double r = 0.0;
  double z_S = 0.0;
  double z_I = 0.0;
  double z_R = 0.0;

  static constexpr std::size_t size = 6;
  static constexpr std::size_t infected_index = 1;
  static constexpr std::array<const char*, size> columns{"s", "y", "r", "z_S", "z_I", "z_R"};
  static constexpr std::array<bool, size> behavioral{false, false, false, true, true, true};

  std::array<double, size> to_array() const { return {s, y, r, z_S, z_I, z_R}; }
  static SiriState from_array(const std::array<double, size>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  friend bool operator==(const SiriState&, const SiriState&) = default;
};

struct VanillaSiriState {
  double s = 0.0;
  double y = 0.0;
  double r = 0.0;

  static constexpr std::size_t size = 3;
  static constexpr std::size_t infected_index = 1;
  static constexpr std::array<const char*, size> columns{"s", "y", "r"};
  static constexpr std::array<bool, size> behavioral{false, false, false};

  std::array<double, size> to_array() const { return {s, y, r}; }
  static VanillaSiriState from_array(const std::array<double, size>& a) { return {a[0], a[1], a[2]}; }
  friend bool operator==(const VanillaSiriState&, const VanillaSiriState&) = default;
};

// ---------------------------------------------------------------------------
// Thresholds

struct Thresholds {
  double y_int = 0.0;    ///< prevalence at which susceptibles are indifferent
  double y_u = 0.0;      ///< endemic level with nobody protected
  double y_p = 0.0;      ///< endemic level with every susceptible protected
  double z_S_int = 0.0;  ///< unprotected susceptible share at the interior equilibrium
  std::optional<double> y_hat_int;  ///< recovered-side indifference level (SIRI only)
};

namespace detail {
inline double indifference_level(double c_P, double L, double alpha, double beta) {
  const double denom = L * (1.0 - alpha) * beta;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return c_P / denom;
}
}  // namespace detail

/// Values are raw: y_u and y_p may be negative, y_int is +inf when
/// protection cannot reduce anybody's risk.
inline Thresholds thresholds(const SisParams& p) {
  Thresholds t;
  t.y_int = detail::indifference_level(p.c_P, p.L, p.alpha, p.beta_p);
  t.y_u = 1.0 - p.gamma / p.beta_p;
  t.y_p = 1.0 - p.gamma / (p.alpha * p.beta_p);
  t.z_S_int = (p.gamma / (p.beta_p * (1.0 - t.y_int)) - p.alpha) / (1.0 - p.alpha);
  return t;
}

inline Thresholds thresholds(const SiriParams& p) {
  Thresholds t = thresholds(static_cast<const SisParams&>(p));
  t.y_hat_int = detail::indifference_level(p.c_P, p.L, p.alpha, p.beta_hat_p);
  return t;
}

// ---------------------------------------------------------------------------
// Payoffs

struct SisPayoff {
  double su = 0.0, sp = 0.0, iu = 0.0, ip = 0.0;
};

struct SiriPayoff {
  double su = 0.0, sp = 0.0, iu = 0.0, ip = 0.0, ru = 0.0, rp = 0.0;
};

namespace detail {
template <std::size_t N>
void check_simplex(const std::array<double, N>& x, double tol = 1e-9) {
  double sum = 0.0;
  for (double v : x) {
    if (!(v >= 0.0)) throw DomainError("population state has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) throw DomainError("population state does not sum to 1");
}
}  // namespace detail

/// x = (SU, SP, IU, IP).
inline SisPayoff payoff_sis(const std::array<double, 4>& x, const SisParams& p) {
  detail::check_simplex(x);
  const double risk = p.beta_u * x[2] + p.beta_p * x[3];
  return {-p.L * risk, -p.c_P - p.L * p.alpha * risk, -p.c_IU, -p.c_IP};
}

/// x = (SU, SP, IU, IP, RU, RP).
inline SiriPayoff payoff_siri(const std::array<double, 6>& x, const SiriParams& p) {
  detail::check_simplex(x);
  const double risk = p.beta_u * x[2] + p.beta_p * x[3];
  const double risk_hat = p.beta_hat_u * x[2] + p.beta_hat_p * x[3];
  return {-p.L * risk,     -p.c_P - p.L * p.alpha * risk,     -p.c_IU, -p.c_IP,
          -p.L * risk_hat, -p.c_P - p.L * p.alpha * risk_hat};
}

inline std::array<double, 4> population_state(const SisState& st) {
  const double s = 1.0 - st.y;
  return {st.z_S * s, (1.0 - st.z_S) * s, st.z_I * st.y, (1.0 - st.z_I) * st.y};
}

inline std::array<double, 6> population_state(const SiriState& st) {
  return {st.z_S * st.s,  (1.0 - st.z_S) * st.s, st.z_I * st.y,
          (1.0 - st.z_I) * st.y, st.z_R * st.r, (1.0 - st.z_R) * st.r};
}

// ---------------------------------------------------------------------------
// Vector fields

/// Susceptibility of a healthy compartment with unprotected share z.
inline double susceptibility(double z, double alpha) { return z + alpha * (1.0 - z); }

inline double effective_beta(double z_S, double z_I, const SisParams& p) {
  return susceptibility(z_S, p.alpha) * (p.beta_u * z_I + p.beta_p * (1.0 - z_I));
}

/// Epidemic derivatives, with the per-capita replicator rates g in the
/// behavioural slots: each share obeys zdot = z (1 - z) g.
inline SisState growth_sis(const SisState& st, const SisParams& p) {
  const double infectivity = p.beta_u * st.z_I + p.beta_p * (1.0 - st.z_I);
  SisState d;
  d.y = ((1.0 - st.y) * susceptibility(st.z_S, p.alpha) * infectivity - p.gamma) * st.y;
  d.z_S = p.c_P - p.L * (1.0 - p.alpha) * infectivity * st.y;
  d.z_I = p.c_IP - p.c_IU;
  return d;
}

inline SisState field_sis(const SisState& st, const SisParams& p) {
  SisState d = growth_sis(st, p);
  d.z_S *= st.z_S * (1.0 - st.z_S);
  d.z_I *= st.z_I * (1.0 - st.z_I);
  return d;
}

/// Throws DomainError when s + y + r departs from 1 by more than 1e-9.
inline SiriState growth_siri(const SiriState& st, const SiriParams& p) {
  if (std::abs(st.s + st.y + st.r - 1.0) > 1e-9)
    throw DomainError("SIRI state off the simplex: s + y + r != 1");
  const double infectivity = p.beta_u * st.z_I + p.beta_p * (1.0 - st.z_I);
  const double reinfectivity = p.beta_hat_u * st.z_I + p.beta_hat_p * (1.0 - st.z_I);
  const double new_infections = infectivity * susceptibility(st.z_S, p.alpha) * st.s * st.y;
  const double reinfections = reinfectivity * susceptibility(st.z_R, p.alpha) * st.r * st.y;
  const double recoveries = p.gamma * st.y;
  const double gain = p.L * (1.0 - p.alpha);

  SiriState d;
  d.s = -new_infections;
  d.y = new_infections + reinfections - recoveries;
  d.r = recoveries - reinfections;
  d.z_S = p.c_P - gain * infectivity * st.y;
  d.z_I = p.c_IP - p.c_IU;
  d.z_R = p.c_P - gain * reinfectivity * st.y;
  return d;
}

inline SiriState field_siri(const SiriState& st, const SiriParams& p) {
  SiriState d = growth_siri(st, p);
  d.z_S *= st.z_S * (1.0 - st.z_S);
  d.z_I *= st.z_I * (1.0 - st.z_I);
  d.z_R *= st.z_R * (1.0 - st.z_R);
  return d;
}

inline VanillaSiriState field_siri_vanilla(double s, double y, double r, double beta, double beta_hat,
                                           double gamma) {
  const double new_infections = beta * s * y;
  const double reinfections = beta_hat * r * y;
  return {-new_infections, new_infections + reinfections - gamma * y, gamma * y - reinfections};
}

inline VanillaSiriState field_siri_vanilla(const VanillaSiriState& st, const VanillaSiriParams& p) {
  return field_siri_vanilla(st.s, st.y, st.r, p.beta, p.beta_hat, p.gamma);
}

}  // namespace epigame
