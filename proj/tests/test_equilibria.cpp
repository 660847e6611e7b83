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

#include <cmath>
#include <complex>
#include <random>

#include "epigame/equilibria.hpp"
#include "epigame/hybrid.hpp"
#include "oracles.hpp"

using namespace epigame;
using epigame::testing::siri_strong_params;
using epigame::testing::siri_weak_params;
using epigame::testing::sis_table_params;

namespace {

const EquilibriumReport& find(const std::vector<EquilibriumReport>& rows, const std::string& label) {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw std::runtime_error("missing " + label);
}

std::complex<double> char_poly(const Matrix3& A, std::complex<double> l) {
  using C = std::complex<double>;
  const C a = A[0][0] - l, e = A[1][1] - l, i = A[2][2] - l;
  return a * (e * i - A[1][2] * A[2][1]) - C(A[0][1]) * (C(A[1][0]) * i - A[1][2] * A[2][0]) +
         C(A[0][2]) * (C(A[1][0]) * A[2][1] - e * A[2][0]);
}

double frobenius(const Matrix3& A) {
  double s = 0.0;
  for (const auto& row : A)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

int pattern_code(const EquilibriumReport& r) {
  if (!r.exists) return 0;
  return r.stability == Stability::stable ? 2 : 1;
}

}  // namespace

// --- SIS equilibria -------------------------------------------------------

TEST(SisEquilibria, InteriorRegime) {
  const auto rows = sis_equilibria(sis_table_params(0.1));
  ASSERT_EQ(rows.size(), 5u);
  const auto& e3 = find(rows, "E3");
  EXPECT_TRUE(e3.exists);
  EXPECT_EQ(e3.stability, Stability::stable);
  EXPECT_EQ(e3.eigen_stability, Stability::stable);
  EXPECT_NEAR(e3.coordinates[0], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(e3.coordinates[1], 0.6, 1e-14);
  EXPECT_EQ(e3.coordinates[2], 0.0);
  EXPECT_TRUE(find(rows, "E1").exists);
  EXPECT_EQ(find(rows, "E1").stability, Stability::unstable);
  EXPECT_TRUE(find(rows, "E2").exists);
  EXPECT_EQ(find(rows, "E2").stability, Stability::unstable);
  EXPECT_FALSE(find(rows, "E4").exists);
  EXPECT_EQ(find(rows, "E4").existence_condition, "gamma < alpha beta_p");
  EXPECT_EQ(find(rows, "E0").stability, Stability::unstable);
}

TEST(SisEquilibria, DiseaseFreeRegime) {
  const auto rows = sis_equilibria(sis_table_params(0.2));
  EXPECT_TRUE(find(rows, "E0").exists);
  EXPECT_TRUE(find(rows, "E1").exists);
  EXPECT_EQ(find(rows, "E1").stability, Stability::stable);
  EXPECT_FALSE(find(rows, "E2").exists);
  EXPECT_FALSE(find(rows, "E3").exists);
  EXPECT_FALSE(find(rows, "E4").exists);
}

TEST(SisEquilibria, ProtectedEndemicRegime) {
  const auto rows = sis_equilibria(sis_table_params(0.05));
  const auto& e4 = find(rows, "E4");
  EXPECT_TRUE(e4.exists);
  EXPECT_EQ(e4.stability, Stability::stable);
  EXPECT_NEAR(e4.coordinates[0], 1.0 / 3.0, 1e-15);
  EXPECT_FALSE(find(rows, "E3").exists);
}

TEST(SisJacobian, BoundaryEquilibria) {
  const auto p = sis_table_params(0.1);
  const auto J0 = sis_jacobian({0, 0, 0}, p);
  const Matrix3 D0{{{p.alpha * p.beta_p - p.gamma, 0, 0}, {0, p.c_P, 0}, {0, 0, p.c_IP - p.c_IU}}};
  const auto J1 = sis_jacobian({0, 1, 0}, p);
  const Matrix3 D1{{{p.beta_p - p.gamma, 0, 0}, {0, -p.c_P, 0}, {0, 0, p.c_IP - p.c_IU}}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(J0[i][j], D0[i][j], 1e-15);
      EXPECT_NEAR(J1[i][j], D1[i][j], 1e-15);
    }
}

TEST(Eigen3, Examples) {
  const auto id = eigen3({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
  for (const auto& l : id) EXPECT_NEAR(std::abs(l - 1.0), 0.0, 1e-12);

  const auto d = eigen3({{{-0.025, 0, 0}, {0, 1, 0}, {0, 0, -1}}});
  EXPECT_NEAR(d[0].real(), -1.0, 1e-12);
  EXPECT_NEAR(d[1].real(), -0.025, 1e-12);
  EXPECT_NEAR(d[2].real(), 1.0, 1e-12);

  // Companion matrix of lambda^3 - 1.
  const auto c = eigen3({{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}});
  const double h = std::sqrt(3.0) / 2.0;
  EXPECT_NEAR(std::abs(c[0] - std::complex<double>(1.0, 0.0)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(c[1] - std::complex<double>(-0.5, -h)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(c[2] - std::complex<double>(-0.5, h)), 0.0, 1e-10);
}

TEST(Eigen3, DegenerateSpectra) {
  const auto zero = eigen3({});
  for (const auto& l : zero) EXPECT_EQ(std::abs(l), 0.0);
  const auto nil = eigen3({{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}});
  for (const auto& l : nil) EXPECT_NEAR(std::abs(l), 0.0, 1e-12);
  const auto dbl = eigen3({{{2, 0, 0}, {0, 2, 0}, {0, 0, -3}}});
  EXPECT_NEAR(dbl[0].real(), -3.0, 1e-12);
  EXPECT_NEAR(dbl[1].real(), 2.0, 1e-7);
  EXPECT_NEAR(dbl[2].real(), 2.0, 1e-7);
}

TEST(Eigen3, ResidualBoundOnRandomMatrices) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  for (int k = 0; k < 2000; ++k) {
    Matrix3 A;
    const double s = std::pow(10.0, scale(rng));
    for (auto& row : A)
      for (double& v : row) v = s * n(rng);
    const double bound = 1e-8 * (1.0 + std::pow(frobenius(A), 3));
    for (const auto& l : eigen3(A)) EXPECT_LT(std::abs(char_poly(A, l)), bound);
  }
}

TEST(Stability, Verdicts) {
  EXPECT_EQ(stability_from_eigenvalues({-1.0, -2.0, {-0.1, 3.0}}), Stability::stable);
  EXPECT_EQ(stability_from_eigenvalues({-1.0, 0.5}), Stability::unstable);
  EXPECT_EQ(stability_from_eigenvalues({-1.0, 1e-12}), Stability::nonhyperbolic);
  EXPECT_EQ(unstable_count({{0.1, 1.0}, {0.1, -1.0}, -3.0}), 2);
}

// --- behaviour-free SIRI ----------------------------------------------------

TEST(VanillaSiri, Regimes) {
  auto v = vanilla_siri_classify(0.05, 0.05, 0.1);
  EXPECT_EQ(v.regime, SiriRegime::degenerate_sis);
  EXPECT_FALSE(v.notice.empty());

  v = vanilla_siri_classify(0.2, 0.05, 0.1);
  EXPECT_EQ(v.regime, SiriRegime::epidemic);
  EXPECT_NEAR(v.M, 1.0 / 3.0, 1e-15);

  v = vanilla_siri_classify(0.08, 0.2, 0.1);
  EXPECT_EQ(v.regime, SiriRegime::bistable);
  const double M = 5.0 / 6.0;
  EXPECT_NEAR(v.M, M, 1e-15);
  ASSERT_TRUE(v.basin_threshold.has_value());
  EXPECT_NEAR(*v.basin_threshold, 1.0 - M * std::pow(0.8 * M, -0.4), 1e-14);

  EXPECT_EQ(vanilla_siri_classify(0.05, 0.08, 0.1).regime, SiriRegime::infection_free);
  v = vanilla_siri_classify(0.3, 0.4, 0.1);
  EXPECT_EQ(v.regime, SiriRegime::endemic);
  EXPECT_NEAR(*v.endemic_level, 0.75, 1e-15);
  EXPECT_THROW(vanilla_siri_classify(0.0, 0.1, 0.1), DomainError);
}

// --- reduced SIRI -----------------------------------------------------------

TEST(SiriFastEquilibria, Examples) {
  const auto p = siri_strong_params(0.1);
  auto f = siri_fast_equilibria(0.0, p);
  EXPECT_EQ(f.z_S, 1.0);
  EXPECT_EQ(f.z_I, 0.0);
  EXPECT_EQ(f.z_R, 1.0);
  f = siri_fast_equilibria(0.3, p);
  EXPECT_EQ(f.z_S, 0.0);
  EXPECT_EQ(f.z_R, 1.0);
  f = siri_fast_equilibria(thresholds(p).y_int, p);
  EXPECT_FALSE(f.z_S.has_value());
  EXPECT_EQ(f.z_R, 1.0);
  f = siri_fast_equilibria(0.5, p);
  EXPECT_EQ(f.z_S, 0.0);
  EXPECT_EQ(f.z_R, 0.0);
}

TEST(SiriStrongClassify, PublishedCases) {
  auto rep = siri_strong_classify(siri_strong_params(0.15));
  EXPECT_EQ(rep.case_id, 3);
  const auto& e2 = find(rep.equilibria, "E2");
  EXPECT_TRUE(e2.exists);
  EXPECT_EQ(e2.stability, Stability::stable);
  EXPECT_NEAR(e2.coordinates[0], 0.25, 1e-15);
  EXPECT_NEAR(e2.coordinates[1], 0.75, 1e-15);
  EXPECT_EQ(find(rep.equilibria, "IFE").stability, Stability::unstable);

  rep = siri_strong_classify(siri_strong_params(0.1));
  EXPECT_EQ(rep.case_id, 4);
  EXPECT_TRUE(find(rep.equilibria, "SLIDING").exists);
  EXPECT_NEAR(rep.attractors.at(0), 1.0 / 3.0, 1e-15);

  rep = siri_strong_classify(siri_strong_params(0.078));
  EXPECT_EQ(rep.case_id, 5);
  const auto& e3 = find(rep.equilibria, "E3");
  EXPECT_TRUE(e3.exists);
  EXPECT_NEAR(e3.coordinates[0], 0.35, 1e-14);
  EXPECT_NEAR(e3.coordinates[1], 0.65, 1e-14);
}

TEST(SiriStrongClassify, InfectionFreeCases) {
  auto rep = siri_strong_classify(siri_strong_params(0.35));
  EXPECT_EQ(rep.case_id, 1);
  EXPECT_TRUE(rep.ife.stable_at(0.0));
  rep = siri_strong_classify(siri_strong_params(0.25));
  EXPECT_EQ(rep.case_id, 2);
  ASSERT_TRUE(rep.ife.r_split.has_value());
  EXPECT_NEAR(*rep.ife.r_split, 0.5, 1e-15);
  EXPECT_TRUE(rep.ife.stable_at(0.6));
  EXPECT_FALSE(rep.ife.stable_at(0.4));
  EXPECT_THROW(siri_strong_classify(siri_weak_params(0.12, 0.14)), WrongVariantError);
}

TEST(SiriWeakClassify, PublishedCases) {
  auto rep = siri_weak_classify(siri_weak_params(0.12, 0.14));
  EXPECT_EQ(rep.case_id, 3);
  EXPECT_TRUE(rep.bistable);
  ASSERT_TRUE(rep.ife.r_split.has_value());
  EXPECT_NEAR(*rep.ife.r_split, 0.02 / 0.13, 1e-15);
  EXPECT_TRUE(rep.ife.stable_at(0.1));
  EXPECT_FALSE(rep.ife.stable_at(0.2));
  EXPECT_NEAR(find(rep.equilibria, "SLIDING").coordinates[0], 0.16, 1e-15);

  rep = siri_weak_classify(siri_weak_params(0.15, 0.14));
  EXPECT_EQ(rep.case_id, 3);
  EXPECT_FALSE(rep.bistable);
  EXPECT_FALSE(rep.ife.stable_at(0.0));
  EXPECT_FALSE(rep.ife.stable_at(1.0));

  rep = siri_weak_classify(siri_weak_params(0.12, 0.3));
  EXPECT_EQ(rep.case_id, 1);
  EXPECT_TRUE(rep.ife.stable_at(0.5));
  EXPECT_FALSE(rep.bistable);
  EXPECT_THROW(siri_weak_classify(siri_strong_params(0.1)), WrongVariantError);
}

// --- properties -------------------------------------------------------------

TEST(Properties, ExistingEquilibriaAreFieldZeros) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 1000; ++k) {
    const auto p = epigame::testing::random_sis_params(rng);
    for (const auto& r : sis_equilibria(p)) {
      if (!r.exists) continue;
      for (double c : r.coordinates) {
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
      }
      const auto d = field_sis({r.coordinates[0], r.coordinates[1], r.coordinates[2]}, p);
      EXPECT_LT(std::abs(d.y), 1e-12) << r.label;
      EXPECT_LT(std::abs(d.z_S), 1e-12) << r.label;
      EXPECT_LT(std::abs(d.z_I), 1e-12) << r.label;
    }
  }
}

TEST(Properties, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const auto p = epigame::testing::random_sis_params(rng);
    const SisState st{u(rng), u(rng), u(rng)};
    const auto J = sis_jacobian(st, p);
    const auto F = epigame::testing::fd_jacobian(
        [&](const std::array<double, 3>& x) { return field_sis(SisState::from_array(x), p).to_array(); },
        st.to_array());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(J[i][j], F[i][j], 1e-5) << i << ',' << j;
  }
}

TEST(Properties, ExistenceTablePatternAndExactlyOneStable) {
  std::mt19937_64 rng(53);
  int checked = 0;
  while (checked < 1000) {
    const auto p = epigame::testing::random_sis_params(rng);
    if (epigame::testing::near_threshold(p)) continue;
    ++checked;
    const auto rows = sis_equilibria(p);
    const auto expected = epigame::testing::existence_table_pattern(p);
    int stable = 0;
    for (int k = 1; k <= 4; ++k) {
      const auto& r = rows[k];
      EXPECT_EQ(pattern_code(r), expected[k - 1]) << r.label;
      if (r.exists) {
        EXPECT_EQ(r.stability, r.eigen_stability) << r.label;
        if (r.stability == Stability::stable) ++stable;
      }
    }
    EXPECT_EQ(stable, 1);
    EXPECT_EQ(rows[0].eigen_stability, Stability::unstable);
  }
}

// Classifier against reduced-hybrid simulation for every case of both
// immunity variants. Bistable draws must reach one of the two attractors.
TEST(Properties, SiriClassifierMatchesReducedSimulation) {
  struct Draw {
    SiriParams p;
    int expected_case;
  };
  const std::vector<Draw> draws{
      {siri_strong_params(0.35), 1}, {siri_strong_params(0.25), 2}, {siri_strong_params(0.15), 3},
      {siri_strong_params(0.1), 4},  {siri_strong_params(0.078), 5}, {siri_weak_params(0.12, 0.3), 1},
      {siri_weak_params(0.12, 0.23), 2}, {siri_weak_params(0.12, 0.14), 3}, {siri_weak_params(0.15, 0.14), 3},
      {siri_weak_params(0.12, 0.1), 4}};
  IntegrationConfig c;
  c.t_end = 5000.0;
  c.record_stride = 100;
  for (const auto& d : draws) {
    const auto rep = siri_classify(d.p);
    EXPECT_EQ(rep.case_id, d.expected_case);
    for (double y0 : {0.05, 0.3}) {
      const auto tr = simulate_reduced_siri(d.p, y0, 0.01, c);
      const double y_end = tr.states.back()[0];
      bool hit = false;
      for (double a : rep.attractors) hit = hit || std::abs(y_end - a) < 0.01;
      EXPECT_TRUE(hit) << "gamma=" << d.p.gamma << " beta_p=" << d.p.beta_p << " y0=" << y0 << " y_end=" << y_end;
      if (!rep.bistable) {
        EXPECT_NEAR(y_end, rep.attractors.front(), 0.01);
      }
    }
  }
}
