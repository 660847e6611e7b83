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
 * Closed-form equilibria and their stability.
 *
 * Coupled SIS: the five equilibria E0..E4 with z_I = 0, analytic Jacobian
 * and eigenvalues from the characteristic cubic. Each report carries both
 * the verdict of the analytic existence/stability conditions and the
 * eigenvalue verdict, so callers can cross-check them.
 *
 * Reduced SIRI: stability comes from the analytic inequalities only; the
 * discontinuous system has no Jacobian at the sliding point.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "epigame/error.hpp"
#include "epigame/model.hpp"

namespace epigame {

using Matrix3 = std::array<std::array<double, 3>, 3>;
using Eigenvalues3 = std::array<std::complex<double>, 3>;

enum class Stability { stable, unstable, nonhyperbolic, not_applicable };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::nonhyperbolic: return "nonhyperbolic";
    case Stability::not_applicable: return "n/a";
  }
  return "?";
}

/// Real parts within this distance of zero are treated as zero.
inline constexpr double kHyperbolicTol = 1e-9;

struct EquilibriumReport {
  std::string label;
  std::vector<double> coordinates;
  bool exists = false;
  std::string existence_condition;  ///< the condition; violated when !exists
  std::vector<std::complex<double>> eigenvalues;
  Stability stability = Stability::not_applicable;        ///< analytic conditions
  Stability eigen_stability = Stability::not_applicable;  ///< eigenvalue signs (SIS only)
  std::string justification;
};

// ---------------------------------------------------------------------------
// Linear algebra

inline Matrix3 sis_jacobian(const SisState& st, const SisParams& p) {
  const double y = st.y, zs = st.z_S, zi = st.z_I;
  const double sigma = susceptibility(zs, p.alpha);
  const double infectivity = p.beta_u * zi + p.beta_p * (1.0 - zi);
  const double gain = p.L * (1.0 - p.alpha);
  Matrix3 J{};
  J[0][0] = (1.0 - y) * sigma * infectivity - p.gamma - y * sigma * infectivity;
  J[0][1] = y * (1.0 - y) * (1.0 - p.alpha) * infectivity;
  J[0][2] = y * (1.0 - y) * sigma * (p.beta_u - p.beta_p);
  J[1][0] = -zs * (1.0 - zs) * gain * infectivity;
  J[1][1] = (1.0 - 2.0 * zs) * (p.c_P - gain * infectivity * y);
  J[1][2] = -zs * (1.0 - zs) * gain * (p.beta_u - p.beta_p) * y;
  J[2][0] = 0.0;
  J[2][1] = 0.0;
  J[2][2] = (1.0 - 2.0 * zi) * (p.c_IP - p.c_IU);
  return J;
}

inline double determinant(const Matrix3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

namespace detail {

struct Cubic {
  double a, b, c;  // lambda^3 + a lambda^2 + b lambda + c
  double operator()(double x) const { return ((x + a) * x + b) * x + c; }
  double derivative(double x) const { return (3.0 * x + 2.0 * a) * x + b; }
};

inline double newton_polish(const Cubic& f, double x) {
  for (int i = 0; i < 3; ++i) {
    const double d = f.derivative(x);
    if (d == 0.0) break;
    const double step = f(x) / d;
    if (!std::isfinite(step)) break;
    const double next = x - step;
    if (std::abs(f(next)) >= std::abs(f(x))) break;
    x = next;
  }
  return x;
}

}  // namespace detail

/// Roots of the characteristic cubic, Cardano / trigonometric form.
/// Three real roots are sorted ascending; otherwise the real root comes
/// first followed by the conjugate pair.
inline Eigenvalues3 eigen3(const Matrix3& A) {
  const double tr = A[0][0] + A[1][1] + A[2][2];
  const double minors = (A[0][0] * A[1][1] - A[0][1] * A[1][0]) + (A[0][0] * A[2][2] - A[0][2] * A[2][0]) +
                        (A[1][1] * A[2][2] - A[1][2] * A[2][1]);
  const detail::Cubic f{-tr, minors, -determinant(A)};

  const double shift = -f.a / 3.0;
  const double p = f.b - f.a * f.a / 3.0;
  const double q = 2.0 * f.a * f.a * f.a / 27.0 - f.a * f.b / 3.0 + f.c;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  // Scale-aware zero test for the discriminant.
  const double scale = std::max({std::abs(f.a), std::sqrt(std::abs(f.b)), std::cbrt(std::abs(f.c)), 1e-300});
  const double disc_tol = 1e-14 * std::pow(scale, 6);

  if (disc > disc_tol) {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 - std::copysign(sq, q));
    const double t = (u != 0.0) ? u - p / (3.0 * u) : 0.0;
    const double real = detail::newton_polish(f, t + shift);
    // Deflate: lambda^2 + (a + real) lambda + (b + real (a + real)).
    const double bq = f.a + real;
    const double cq = f.b + real * bq;
    const double dq = bq * bq / 4.0 - cq;
    if (dq >= 0.0) {
      const double s = std::sqrt(dq);
      std::array<double, 3> r{real, -bq / 2.0 - s, -bq / 2.0 + s};
      std::sort(r.begin(), r.end());
      return {std::complex<double>(r[0]), std::complex<double>(r[1]), std::complex<double>(r[2])};
    }
    const double im = std::sqrt(-dq);
    return {std::complex<double>(real), std::complex<double>(-bq / 2.0, -im),
            std::complex<double>(-bq / 2.0, im)};
  }

  std::array<double, 3> r;
  if (p >= 0.0) {
    // p == 0 up to rounding: triple root.
    r = {shift, shift, shift};
  } else {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
      r[k] = detail::newton_polish(f, m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
  }
  std::sort(r.begin(), r.end());
  return {std::complex<double>(r[0]), std::complex<double>(r[1]), std::complex<double>(r[2])};
}

inline Stability stability_from_eigenvalues(const std::vector<std::complex<double>>& ev,
                                            double tol = kHyperbolicTol) {
  double max_re = -std::numeric_limits<double>::infinity();
  for (const auto& l : ev) max_re = std::max(max_re, l.real());
  if (max_re < -tol) return Stability::stable;
  if (max_re > tol) return Stability::unstable;
  return Stability::nonhyperbolic;
}

/// Count of eigenvalues with real part above tol.
inline int unstable_count(const std::vector<std::complex<double>>& ev, double tol = kHyperbolicTol) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [tol](auto l) { return l.real() > tol; }));
}

// ---------------------------------------------------------------------------
// Coupled SIS

namespace detail {
/// Negative margin: stable; positive: unstable; within tol: nonhyperbolic.
inline Stability verdict(double margin, double tol = kHyperbolicTol) {
  if (margin < -tol) return Stability::stable;
  if (margin > tol) return Stability::unstable;
  return Stability::nonhyperbolic;
}

inline EquilibriumReport sis_report(std::string label, const SisState& st, const SisParams& p) {
  EquilibriumReport r;
  r.label = std::move(label);
  r.coordinates = {st.y, st.z_S, st.z_I};
  const auto ev = eigen3(sis_jacobian(st, p));
  r.eigenvalues.assign(ev.begin(), ev.end());
  r.eigen_stability = stability_from_eigenvalues(r.eigenvalues);
  return r;
}
}  // namespace detail

/// Reports for E0..E4 in that order. Non-existent equilibria are still
/// reported (exists = false) with their raw coordinates, their eigenvalue
/// verdict and the violated existence condition.
inline std::vector<EquilibriumReport> sis_equilibria(const SisParams& p) {
  const auto th = thresholds(p);
  std::vector<EquilibriumReport> out;

  auto e0 = detail::sis_report("E0", {0.0, 0.0, 0.0}, p);
  e0.exists = true;
  e0.existence_condition = "always";
  e0.stability = Stability::unstable;
  e0.justification = "E0 is always unstable: eigenvalue c_P > 0";
  out.push_back(e0);

  auto e1 = detail::sis_report("E1", {0.0, 1.0, 0.0}, p);
  e1.exists = true;
  e1.existence_condition = "always";
  e1.stability = detail::verdict(p.beta_p - p.gamma);
  e1.justification = "E1 stable iff beta_p < gamma";
  out.push_back(e1);

  auto e2 = detail::sis_report("E2", {th.y_u, 1.0, 0.0}, p);
  e2.exists = p.beta_p > p.gamma;
  e2.existence_condition = "beta_p > gamma";
  if (e2.exists) {
    e2.stability = detail::verdict(th.y_u - th.y_int);
    e2.justification = "E2 stable iff y_u < y_int";
  } else {
    e2.stability = e2.eigen_stability;
    e2.justification = "E2 does not exist: beta_p > gamma violated";
  }
  out.push_back(e2);

  auto e3 = detail::sis_report("E3", {th.y_int, th.z_S_int, 0.0}, p);
  e3.exists = th.y_p < th.y_int && th.y_int < th.y_u;
  e3.existence_condition = "y_p < y_int < y_u";
  if (e3.exists) {
    // Block-triangular Jacobian: 2x2 (y, z_S) block plus the z_I eigenvalue.
    const auto J = sis_jacobian({th.y_int, th.z_S_int, 0.0}, p);
    const double trace = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double zi_eig = J[2][2];
    if (trace < -kHyperbolicTol && det > kHyperbolicTol * kHyperbolicTol && zi_eig < -kHyperbolicTol)
      e3.stability = Stability::stable;
    else if (trace > kHyperbolicTol || det < -kHyperbolicTol * kHyperbolicTol || zi_eig > kHyperbolicTol)
      e3.stability = Stability::unstable;
    else
      e3.stability = Stability::nonhyperbolic;
    e3.justification = "E3 stable whenever it exists: 2x2 block trace < 0, det > 0, z_I eigenvalue c_IP - c_IU < 0";
  } else {
    e3.stability = e3.eigen_stability;
    e3.justification = "E3 does not exist: y_p < y_int < y_u violated";
  }
  out.push_back(e3);

  auto e4 = detail::sis_report("E4", {th.y_p, 0.0, 0.0}, p);
  e4.exists = p.gamma < p.alpha * p.beta_p;
  e4.existence_condition = "gamma < alpha beta_p";
  if (e4.exists) {
    e4.stability = detail::verdict(th.y_int - th.y_p);
    e4.justification = "E4 stable iff y_p > y_int";
  } else {
    e4.stability = e4.eigen_stability;
    e4.justification = "E4 does not exist: gamma < alpha beta_p violated";
  }
  out.push_back(e4);
  return out;
}

// ---------------------------------------------------------------------------
// Behaviour-free SIRI

enum class SiriRegime { infection_free, endemic, epidemic, bistable, degenerate_sis };

inline const char* to_string(SiriRegime r) {
  switch (r) {
    case SiriRegime::infection_free: return "infection-free";
    case SiriRegime::endemic: return "endemic";
    case SiriRegime::epidemic: return "epidemic";
    case SiriRegime::bistable: return "bistable";
    case SiriRegime::degenerate_sis: return "degenerate-sis";
  }
  return "?";
}

struct VanillaSiriRegime {
  double R0 = 0.0;
  double R1 = 0.0;
  double M = std::numeric_limits<double>::quiet_NaN();
  SiriRegime regime = SiriRegime::infection_free;
  std::optional<double> basin_threshold;  ///< bistable: y(0) below -> IFE (with r(0) = 0)
  std::optional<double> endemic_level;    ///< y at EE when it exists
  std::string notice;
};

inline VanillaSiriRegime vanilla_siri_classify(double beta, double beta_hat, double gamma) {
  if (!(beta > 0.0 && beta_hat > 0.0 && gamma > 0.0))
    throw DomainError("vanilla_siri_classify: rates must be positive");
  VanillaSiriRegime out;
  out.R0 = beta / gamma;
  out.R1 = beta_hat / gamma;
  if (out.R1 > 1.0) out.endemic_level = 1.0 - gamma / beta_hat;
  if (out.R0 == out.R1) {
    out.regime = SiriRegime::degenerate_sis;
    out.notice = "R0 == R1: M undefined; merging S and R recovers the SIS model (endemic iff R0 > 1)";
    return out;
  }
  out.M = (1.0 - out.R1) / (out.R0 - out.R1);
  if (out.R0 < 1.0 && out.R1 < 1.0) {
    out.regime = SiriRegime::infection_free;
  } else if (out.R0 > 1.0 && out.R1 > 1.0) {
    out.regime = SiriRegime::endemic;
  } else if (out.R0 > 1.0) {
    out.regime = SiriRegime::epidemic;
  } else if (out.R1 > 1.0) {
    out.regime = SiriRegime::bistable;
    out.basin_threshold = 1.0 - out.M * std::pow(out.R0 * out.M, -out.R0 / out.R1);
  } else {
    // R0 == 1 with R1 <= 1, or R1 == 1 with R0 < 1: infection cannot persist.
    out.regime = SiriRegime::infection_free;
    out.notice = "on the R0 = 1 / R1 = 1 boundary";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced SIRI

/// Stable behaviour of the fast replicator system at prevalence y.
/// nullopt marks the indifference point where every value is an equilibrium.
struct FastEquilibrium {
  std::optional<double> z_S;
  double z_I = 0.0;
  std::optional<double> z_R;
};

inline FastEquilibrium siri_fast_equilibria(double y, const SiriParams& p) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("siri_fast_equilibria: y outside [0,1]");
  const auto th = thresholds(p);
  auto pick = [y](double level) -> std::optional<double> {
    if (y == level) return std::nullopt;
    return y < level ? 1.0 : 0.0;
  };
  return {pick(th.y_int), 0.0, pick(*th.y_hat_int)};
}

enum class IfeStabilityKind { all_stable, all_unstable, stable_above_split, stable_below_split };

struct IfeStability {
  IfeStabilityKind kind = IfeStabilityKind::all_unstable;
  std::optional<double> r_split;  ///< (beta_p - gamma) / (beta_p - beta_hat_p)

  bool stable_at(double r_star) const {
    switch (kind) {
      case IfeStabilityKind::all_stable: return true;
      case IfeStabilityKind::all_unstable: return false;
      case IfeStabilityKind::stable_above_split: return r_star > *r_split;
      case IfeStabilityKind::stable_below_split: return r_star < *r_split;
    }
    return false;
  }
};

struct SiriReducedReport {
  bool strong = true;  ///< beta_p > beta_hat_p
  int case_id = 0;
  std::string statement;
  std::vector<EquilibriumReport> equilibria;  ///< IFE, E2, E3, SLIDING
  IfeStability ife;
  bool bistable = false;
  std::vector<double> attractors;  ///< predicted limits of y
};

namespace detail {

inline std::vector<EquilibriumReport> siri_reduced_equilibria(const SiriParams& p, int case_e2, int case_e3,
                                                              int case_sliding, int case_id,
                                                              const IfeStability& ife) {
  const double y_hat = *thresholds(p).y_hat_int;
  std::vector<EquilibriumReport> eq;

  EquilibriumReport ifer;
  ifer.label = "IFE";
  ifer.coordinates = {0.0};
  ifer.exists = true;
  ifer.existence_condition = "always (continuum y = 0, r* in [0,1])";
  switch (ife.kind) {
    case IfeStabilityKind::all_stable:
      ifer.stability = Stability::stable;
      ifer.justification = "all IFE points locally stable";
      break;
    case IfeStabilityKind::all_unstable:
      ifer.stability = Stability::unstable;
      ifer.justification = "all IFE points unstable";
      break;
    case IfeStabilityKind::stable_above_split:
      ifer.stability = Stability::nonhyperbolic;
      ifer.justification = "IFE locally stable for r* > " + std::to_string(*ife.r_split) + ", unstable otherwise";
      break;
    case IfeStabilityKind::stable_below_split:
      ifer.stability = Stability::nonhyperbolic;
      ifer.justification = "IFE locally stable for r* < " + std::to_string(*ife.r_split) + ", unstable otherwise";
      break;
  }
  eq.push_back(ifer);

  auto point = [&](std::string label, double y, double r, bool exists, std::string cond) {
    EquilibriumReport e;
    e.label = std::move(label);
    e.coordinates = {y, r};
    e.exists = exists;
    e.existence_condition = std::move(cond);
    e.stability = exists ? Stability::stable : Stability::not_applicable;
    e.justification = (exists ? "case " : "absent in case ") + std::to_string(case_id);
    return e;
  };
  const double r2 = p.gamma / p.beta_hat_p;
  const double r3 = p.gamma / (p.alpha * p.beta_hat_p);
  eq.push_back(point("E2", 1.0 - r2, r2, case_id == case_e2,
                     "beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p"));
  eq.push_back(point("E3", 1.0 - r3, r3, case_id == case_e3, "gamma < alpha beta_hat_p (1 - y_hat_int)"));
  eq.push_back(point("SLIDING", y_hat, 1.0 - y_hat, case_id == case_sliding,
                     "alpha beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p (1 - y_hat_int)"));
  return eq;
}

}  // namespace detail

/// Strengthened immunity, five cases ordered by decreasing gamma. Ties go
/// to the lower-numbered case.
inline SiriReducedReport siri_strong_classify(const SiriParams& p) {
  if (!(p.beta_p > p.beta_hat_p))
    throw WrongVariantError("siri_strong_classify requires beta_p > beta_hat_p");
  const double y_hat = *thresholds(p).y_hat_int;
  const double g = p.gamma;
  const double upper_slide = p.beta_hat_p * (1.0 - y_hat);
  const double lower_slide = p.alpha * upper_slide;

  SiriReducedReport rep;
  rep.strong = true;
  if (g >= p.beta_p) {
    rep.case_id = 1;
    rep.statement = "gamma > beta_p: IFE stable, y decays monotonically to 0";
    rep.ife = {IfeStabilityKind::all_stable, std::nullopt};
    rep.attractors = {0.0};
  } else if (g >= p.beta_hat_p) {
    rep.case_id = 2;
    rep.statement = "beta_hat_p < gamma < beta_p: IFE with r* above the split stable, y -> 0";
    rep.ife = {IfeStabilityKind::stable_above_split, (p.beta_p - g) / (p.beta_p - p.beta_hat_p)};
    rep.attractors = {0.0};
  } else if (g >= upper_slide) {
    rep.case_id = 3;
    rep.statement = "beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p: E2 asymptotically stable";
    rep.ife = {IfeStabilityKind::all_unstable, std::nullopt};
    rep.attractors = {1.0 - g / p.beta_hat_p};
  } else if (g >= lower_slide) {
    rep.case_id = 4;
    rep.statement = "alpha beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p (1 - y_hat_int): sliding at y_hat_int";
    rep.ife = {IfeStabilityKind::all_unstable, std::nullopt};
    rep.attractors = {y_hat};
  } else {
    rep.case_id = 5;
    rep.statement = "gamma < alpha beta_hat_p (1 - y_hat_int): E3 asymptotically stable";
    rep.ife = {IfeStabilityKind::all_unstable, std::nullopt};
    rep.attractors = {1.0 - g / (p.alpha * p.beta_hat_p)};
  }
  rep.equilibria = detail::siri_reduced_equilibria(p, 3, 5, 4, rep.case_id, rep.ife);
  return rep;
}

/// Compromised immunity, four cases plus the IFE split. Bistable when
/// gamma > beta_p in cases 2-4.
inline SiriReducedReport siri_weak_classify(const SiriParams& p) {
  if (!(p.beta_p < p.beta_hat_p))
    throw WrongVariantError("siri_weak_classify requires beta_p < beta_hat_p");
  const double y_hat = *thresholds(p).y_hat_int;
  const double g = p.gamma;
  const double upper_slide = p.beta_hat_p * (1.0 - y_hat);
  const double lower_slide = p.alpha * upper_slide;

  SiriReducedReport rep;
  rep.strong = false;
  if (g >= p.beta_hat_p) {
    rep.case_id = 1;
    rep.statement = "gamma > beta_hat_p: IFE stable, y decays monotonically to 0";
    rep.attractors = {0.0};
  } else if (g >= upper_slide) {
    rep.case_id = 2;
    rep.statement = "beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p: E2 locally stable";
    rep.attractors = {1.0 - g / p.beta_hat_p};
  } else if (g >= lower_slide) {
    rep.case_id = 3;
    rep.statement = "alpha beta_hat_p (1 - y_hat_int) < gamma < beta_hat_p (1 - y_hat_int): sliding at y_hat_int";
    rep.attractors = {y_hat};
  } else {
    rep.case_id = 4;
    rep.statement = "gamma < alpha beta_hat_p (1 - y_hat_int): E3 locally stable";
    rep.attractors = {1.0 - g / (p.alpha * p.beta_hat_p)};
  }
  if (rep.case_id == 1) {
    rep.ife = {IfeStabilityKind::all_stable, std::nullopt};
  } else if (g > p.beta_p) {
    rep.ife = {IfeStabilityKind::stable_below_split, (p.beta_p - g) / (p.beta_p - p.beta_hat_p)};
    rep.bistable = true;
    rep.attractors.push_back(0.0);
  } else {
    rep.ife = {IfeStabilityKind::all_unstable, std::nullopt};
  }
  rep.equilibria = detail::siri_reduced_equilibria(p, 2, 4, 3, rep.case_id, rep.ife);
  return rep;
}

inline SiriReducedReport siri_classify(const SiriParams& p) {
  return p.beta_p > p.beta_hat_p ? siri_strong_classify(p) : siri_weak_classify(p);
}

}  // namespace epigame
