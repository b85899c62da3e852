#include <gtest/gtest.h>

#include "staged_reduction/algebras.hpp"
#include "staged_reduction/stages.hpp"
#include "test_support.hpp"

using namespace sred;
using sred::testing::random_spd;
using sred::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Case {
  std::string name;
  LieAlgebra alg;
  std::vector<int> blocks;
};

std::vector<Case> chain_cases() {
  return {
      {"h3 [1,1,1]", algebras::heisenberg(), {1, 1, 1}},
      {"h3 [1,2]", algebras::heisenberg(), {1, 2}},
      {"h3 [2,1]", algebras::heisenberg(), {2, 1}},
      {"se2 [1,2]", algebras::se2(), {1, 2}},
      {"n4 [3,2,1]", algebras::strictly_upper_triangular(4), {3, 2, 1}},
      {"n5 [4,3,2,1]", algebras::strictly_upper_triangular(5), {4, 3, 2, 1}},
      {"so3+R2 [3,2]", algebras::direct_sum(algebras::so3(), algebras::abelian(2)), {3, 2}},
      {"so3 single", algebras::so3(), {3}},
  };
}

double equivalence_residual(const StagedStructure& st) {
  const auto& g = st.algebra();
  double worst = 0.0;
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j)
      worst = std::max(worst, max_abs(st.bracket_by_stages(g.basis_vector(i), g.basis_vector(j)) -
                                      g.bracket(g.basis_vector(i), g.basis_vector(j))));
  return worst;
}

}  // namespace

TEST(StageChain, Layout) {
  const StageChain c({1, 2, 3});
  EXPECT_EQ(c.num_blocks(), 3);
  EXPECT_EQ(c.stages(), 2);
  EXPECT_EQ(c.dim(), 6);
  EXPECT_EQ(c.offset(2), 3);
  EXPECT_EQ(c.block_of(0), 0);
  EXPECT_EQ(c.block_of(2), 1);
  EXPECT_EQ(c.block_of(5), 2);
  EXPECT_THROW(StageChain({1, 0, 2}), StructuralError);
  EXPECT_THROW(StageChain(std::vector<int>{}), StructuralError);
}

TEST(ValidateChain, Examples) {
  EXPECT_TRUE(validate_chain(algebras::heisenberg(), StageChain({1, 1, 1})).passed);
  EXPECT_TRUE(validate_chain(algebras::se2(), StageChain({1, 2})).passed);
  const auto so3 = validate_chain(algebras::so3(), StageChain({1, 2}));
  EXPECT_FALSE(so3.passed);
  EXPECT_EQ(so3.ideal_residual, 1.0);
  EXPECT_TRUE(validate_chain(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1})).passed);
  EXPECT_TRUE(validate_chain(algebras::heisenberg(), StageChain({2, 1})).passed);
  EXPECT_THROW(validate_chain(algebras::heisenberg(), StageChain({1, 1})), StructuralError);
}

TEST(ValidateChain, NonIdealOrderingFails) {
  // basis reordered so the last block is Y: [X, Y] = Z escapes span{Y}
  const auto alg = LieAlgebra::from_brackets({"X", "Z", "Y"}, {{0, 2, 1, 1.0}});
  EXPECT_FALSE(validate_chain(alg, StageChain({2, 1})).passed);
  EXPECT_THROW(StagedStructure(alg, StageChain({2, 1}), Metric::identity(3)), StructuralError);
}

TEST(Metric, RejectsNonSpd) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 0.5;
  EXPECT_THROW(Metric{m}, StructuralError);
  m(1, 0) = 0.5;
  EXPECT_NO_THROW(Metric{m});
  m(0, 1) = m(1, 0) = 2.0;
  EXPECT_THROW(Metric{m}, NumericError);
}

TEST(StagedStructure, So3SplitIsRejected) {
  // [e2, e3] = e1 leaves span{e2, e3}
  EXPECT_THROW(StagedStructure(algebras::so3(), StageChain({1, 2}), Metric::identity(3)), StructuralError);
}

TEST(HorizontalLift, OrthonormalIsEmbedding) {
  const StagedStructure st(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1}), Metric::identity(6));
  const Vector k = vec({1.0, -2.0, 0.5});
  Vector want = Vector::Zero(6);
  want.head(3) = k;
  EXPECT_EQ(st.horizontal_lift(1, k), want);
  EXPECT_EQ(st.horizontal_lift(2, vec({0, 0})), Vector::Zero(6));
}

TEST(HorizontalLift, CoupledMetricHeisenberg) {
  Matrix g = Matrix::Identity(3, 3);
  g(0, 2) = g(2, 0) = 0.5;
  const StagedStructure st(algebras::heisenberg(), StageChain({1, 1, 1}), Metric(g));
  EXPECT_LE(max_abs(st.horizontal_lift(1, vec({1.0})) - vec({1.0, 0.0, -0.5})), 1e-15);
  EXPECT_LE(max_abs(st.horizontal_lift(2, vec({1.0})) - vec({0.0, 1.0, 0.0})), 1e-15);
}

TEST(HorizontalLift, InvariantsUnderRandomMetrics) {
  std::mt19937 rng(5);
  for (const auto& c : chain_cases()) {
    const int n = c.alg.dim();
    const StagedStructure st(c.alg, StageChain(c.blocks), Metric(random_spd(rng, n)));
    for (int j = 1; j <= st.stages(); ++j) {
      const Vector k = random_vector(rng, st.chain().size(j - 1));
      const Vector w = st.horizontal_lift(j, k);
      const Vector diff = w - st.embed(j - 1, k);
      const int lo = st.chain().offset(j);
      EXPECT_LE(max_abs(diff.head(lo)), 1e-15) << c.name;
      for (int q = lo; q < n; ++q)
        EXPECT_LE(std::abs(w.dot(st.metric().gram() * c.alg.basis_vector(q))), 1e-12) << c.name;
    }
  }
}

TEST(ConnectionProject, Properties) {
  std::mt19937 rng(9);
  const StagedStructure st(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1}), Metric(random_spd(rng, 6)));
  for (int j = 1; j <= 2; ++j) {
    const Vector k = random_vector(rng, st.chain().size(j - 1));
    EXPECT_LE(max_abs(st.connection_project(j, st.horizontal_lift(j, k))), 1e-14);
    Vector eta = random_vector(rng, 6);
    eta.head(st.chain().offset(j)).setZero();
    EXPECT_LE(max_abs(st.connection_project(j, eta) - eta), 1e-14);
  }
  Vector outside = Vector::Zero(6);
  outside[0] = 1.0;
  EXPECT_THROW(st.connection_project(2, outside), StructuralError);
}

TEST(ConnectionProject, OrthonormalKeepsTailBlocks) {
  const StagedStructure st(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1}), Metric::identity(6));
  const Vector v = vec({1, 2, 3, 4, 5, 6});
  EXPECT_EQ(st.connection_project(1, v), vec({0, 0, 0, 4, 5, 6}));
  EXPECT_EQ(st.connection_project(2, vec({0, 0, 0, 4, 5, 6})), vec({0, 0, 0, 0, 0, 6}));
}

TEST(Forms, AbelianVanish) {
  const StagedStructure st(algebras::abelian(4), StageChain({1, 2, 1}), Metric::identity(4));
  for (int j = 1; j <= 2; ++j) {
    for (const auto& m : st.b_tensor(j)) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
    for (const auto& m : st.a_tensor(j)) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Forms, DirectProductHasNoB) {
  const StagedStructure st(algebras::direct_sum(algebras::so3(), algebras::se2()), StageChain({3, 3}),
                           Metric::identity(6));
  for (const auto& m : st.b_tensor(1)) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
  for (const auto& m : st.a_tensor(1)) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forms, HeisenbergOrthonormal) {
  const StagedStructure st(algebras::heisenberg(), StageChain({1, 1, 1}), Metric::identity(3));
  const Vector b = st.b_form(1, vec({1.0}), vec({0.0, 1.0, 0.0}));
  EXPECT_EQ(b, vec({0, 0, 1}));
  // staged components: b^(1,2) = 0, b^(2,3) = Z
  EXPECT_EQ(st.block(st.decompose(b), 1)[0], 0.0);
  EXPECT_EQ(st.block(st.decompose(b), 2)[0], 1.0);
  EXPECT_EQ(st.a_form(1, vec({1.0}), vec({1.0})), Vector::Zero(3));
  EXPECT_EQ(st.a_form(2, vec({1.0}), vec({-2.0})), Vector::Zero(3));
}

TEST(Forms, Se2TwoStage) {
  const StagedStructure st(algebras::se2(), StageChain({1, 2}), Metric::identity(3));
  // b(J, P1) = [J, P1] = P2
  EXPECT_EQ(st.b_form(1, vec({1.0}), vec({0, 1, 0})), vec({0, 0, 1}));
  EXPECT_THROW(st.b_form(1, vec({1.0, 2.0}), vec({0, 1, 0})), StructuralError);
  EXPECT_THROW(st.b_form(2, vec({1.0}), vec({0, 1, 0})), StructuralError);
}

TEST(Forms, InvariantsRandomMetrics) {
  std::mt19937 rng(21);
  for (const auto& c : chain_cases()) {
    const StagedStructure st(c.alg, StageChain(c.blocks), Metric(random_spd(rng, c.alg.dim())));
    for (int j = 1; j <= st.stages(); ++j) {
      const int d = st.chain().size(j - 1), lo = st.chain().offset(j);
      const Vector k1 = random_vector(rng, d), k2 = random_vector(rng, d);
      Vector eta = random_vector(rng, c.alg.dim());
      eta.head(lo).setZero();
      EXPECT_LE(max_abs(st.a_form(j, k1, k2) + st.a_form(j, k2, k1)), 1e-12) << c.name;
      EXPECT_LE(max_abs(st.a_form(j, k1, k2).head(lo)), 1e-12) << c.name;
      EXPECT_LE(max_abs(st.b_form(j, k1, eta).head(lo)), 1e-12) << c.name;
      EXPECT_EQ(max_abs(st.b_form(j, Vector::Zero(d), eta)), 0.0) << c.name;
      EXPECT_LE(max_abs(st.b_form(j, k1, eta) - c.alg.bracket(st.horizontal_lift(j, k1), eta)), 1e-12) << c.name;
    }
  }
}

TEST(Decompose, RoundTripAndOrthonormalIdentity) {
  std::mt19937 rng(2);
  const StagedStructure orth(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1}), Metric::identity(6));
  const Vector u = random_vector(rng, 6);
  EXPECT_EQ(orth.decompose(u), u);
  const StagedStructure st(algebras::strictly_upper_triangular(4), StageChain({3, 2, 1}), Metric(random_spd(rng, 6)));
  EXPECT_LE(max_abs(st.compose(st.decompose(u)) - u), 1e-13);
  const Vector beta = random_vector(rng, 6);
  EXPECT_LE(max_abs(st.raw_covector(st.staged_covector(beta)) - beta), 1e-13);
  EXPECT_NEAR(st.staged_covector(beta).dot(st.decompose(u)), beta.dot(u), 1e-12);
}

TEST(BracketByStages, SingleBlockIsBracket) {
  std::mt19937 rng(4);
  const StagedStructure st(algebras::so3(), StageChain::trivial(3), Metric(random_spd(rng, 3)));
  const Vector u = random_vector(rng, 3), v = random_vector(rng, 3);
  EXPECT_LE(max_abs(st.bracket_by_stages(u, v) - st.algebra().bracket(u, v)), 1e-15);
}

TEST(BracketByStages, HeisenbergXY) {
  const StagedStructure st(algebras::heisenberg(), StageChain({1, 1, 1}), Metric::identity(3));
  EXPECT_EQ(st.bracket_by_stages(vec({1, 0, 0}), vec({0, 1, 0})), vec({0, 0, 1}));
}

TEST(BracketByStages, Se2SemidirectFormula) {
  const StagedStructure st(algebras::se2(), StageChain({1, 2}), Metric::identity(3));
  const double J = 0.7, Jp = -1.3;
  const Vector p = vec({0, 2.0, -0.5}), pp = vec({0, 0.25, 1.5});
  const Vector u = vec({J, p[1], p[2]}), v = vec({Jp, pp[1], pp[2]});
  const auto& g = st.algebra();
  const Vector want = J * g.bracket(vec({1, 0, 0}), pp) - Jp * g.bracket(vec({1, 0, 0}), p);
  EXPECT_LE(max_abs(st.bracket_by_stages(u, v) - want), 1e-15);
  EXPECT_EQ(st.bracket_by_stages(u, v)[0], 0.0);
}

TEST(BracketByStages, EquivalenceIdentityAndRandomMetrics) {
  std::mt19937 rng(13);
  for (const auto& c : chain_cases()) {
    const int n = c.alg.dim();
    EXPECT_LE(equivalence_residual(StagedStructure(c.alg, StageChain(c.blocks), Metric::identity(n))), 1e-12) << c.name;
    for (int trial = 0; trial < 3; ++trial)
      EXPECT_LE(equivalence_residual(StagedStructure(c.alg, StageChain(c.blocks), Metric(random_spd(rng, n)))), 1e-12)
          << c.name;
  }
}

TEST(BracketByStages, BilinearAntisymmetric) {
  std::mt19937 rng(17);
  for (const auto& c : chain_cases()) {
    const int n = c.alg.dim();
    const StagedStructure st(c.alg, StageChain(c.blocks), Metric(random_spd(rng, n)));
    const Vector u = random_vector(rng, n), v = random_vector(rng, n), w = random_vector(rng, n);
    const double a = 0.7, b = -1.9;
    EXPECT_LE(max_abs(st.bracket_by_stages(u, v) + st.bracket_by_stages(v, u)), 1e-12) << c.name;
    EXPECT_LE(max_abs(st.bracket_by_stages(a * u + b * w, v) - a * st.bracket_by_stages(u, v) -
                      b * st.bracket_by_stages(w, v)),
              1e-12)
        << c.name;
  }
}

TEST(BracketByStages, MetricChangesFormsButNotBracket) {
  std::mt19937 rng(23);
  const auto alg = algebras::strictly_upper_triangular(5);
  const StagedStructure s1(alg, StageChain({4, 3, 2, 1}), Metric::identity(10));
  const StagedStructure s2(alg, StageChain({4, 3, 2, 1}), Metric(random_spd(rng, 10)));
  double b_diff = 0.0, a_diff = 0.0;
  for (int j = 1; j <= 3; ++j)
    for (size_t p = 0; p < s1.b_tensor(j).size(); ++p) {
      b_diff = std::max(b_diff, (s1.b_tensor(j)[p] - s2.b_tensor(j)[p]).cwiseAbs().maxCoeff());
      a_diff = std::max(a_diff, (s1.a_tensor(j)[p] - s2.a_tensor(j)[p]).cwiseAbs().maxCoeff());
    }
  EXPECT_GT(b_diff, 1e-3);
  EXPECT_GT(a_diff, 1e-3);
  const Vector u = random_vector(rng, 10), v = random_vector(rng, 10);
  EXPECT_LE(max_abs(s1.bracket_by_stages(u, v) - s2.bracket_by_stages(u, v)), 1e-12);
}

TEST(Expansions, TwoStage) {
  std::mt19937 rng(29);
  const StagedStructure h(algebras::heisenberg(), StageChain({1, 2}), Metric::identity(3));
  EXPECT_EQ(expand_two_stage(h, vec({1, 0, 0}), vec({0, 1, 0})), vec({0, 0, 1}));
  const Vector u = random_vector(rng, 3);
  EXPECT_LE(max_abs(expand_two_stage(h, u, u)), 1e-15);
  for (const auto& c : chain_cases()) {
    if (c.blocks.size() != 2) continue;
    for (int trial = 0; trial < 2; ++trial) {
      const Metric m = trial == 0 ? Metric::identity(c.alg.dim()) : Metric(random_spd(rng, c.alg.dim()));
      const StagedStructure st(c.alg, StageChain(c.blocks), m);
      for (int i = 0; i < c.alg.dim(); ++i)
        for (int j = 0; j < c.alg.dim(); ++j) {
          const Vector ei = c.alg.basis_vector(i), ej = c.alg.basis_vector(j);
          EXPECT_LE(max_abs(expand_two_stage(st, ei, ej) - st.bracket_by_stages(ei, ej)), 1e-12) << c.name;
        }
    }
  }
  EXPECT_THROW(expand_two_stage(StagedStructure(algebras::heisenberg(), StageChain({1, 1, 1}), Metric::identity(3)),
                                vec({1, 0, 0}), vec({0, 1, 0})),
               StructuralError);
}

TEST(Expansions, ThreeStageNilpotent) {
  std::mt19937 rng(31);
  const auto alg = algebras::strictly_upper_triangular(4);
  for (int trial = 0; trial < 3; ++trial) {
    const Metric m = trial == 0 ? Metric::identity(6) : Metric(random_spd(rng, 6));
    const StagedStructure st(alg, StageChain({3, 2, 1}), m);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const Vector ei = alg.basis_vector(i), ej = alg.basis_vector(j);
        EXPECT_LE(max_abs(expand_three_stage(st, ei, ej) - alg.bracket(ei, ej)), 1e-12);
        EXPECT_LE(max_abs(expand_three_stage(st, ei, ej) - st.bracket_by_stages(ei, ej)), 1e-12);
      }
    const Vector u = random_vector(rng, 6);
    EXPECT_LE(max_abs(expand_three_stage(st, u, u)), 1e-12);
  }
  const StagedStructure h(algebras::heisenberg(), StageChain({1, 1, 1}), Metric::identity(3));
  EXPECT_EQ(expand_three_stage(h, vec({1, 0, 0}), vec({0, 1, 0})), vec({0, 0, 1}));
}

TEST(Expansions, FourStageNilpotent) {
  std::mt19937 rng(37);
  const auto alg = algebras::strictly_upper_triangular(5);
  for (int trial = 0; trial < 2; ++trial) {
    const Metric m = trial == 0 ? Metric::identity(10) : Metric(random_spd(rng, 10));
    const StagedStructure st(alg, StageChain({4, 3, 2, 1}), m);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const Vector ei = alg.basis_vector(i), ej = alg.basis_vector(j);
        EXPECT_LE(max_abs(expand_four_stage(st, ei, ej) - alg.bracket(ei, ej)), 1e-12);
      }
  }
}
