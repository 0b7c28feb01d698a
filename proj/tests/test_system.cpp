#include "switchid/errors.hpp"
#include "switchid/system.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace switchid;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

StateSpace scalar_plant(double a, double b = 1.0, double c = 1.0) {
  return StateSpace{scalar(a), scalar(b), scalar(c)};
}

SwitchedFamily two_model_family() {
  SwitchedFamily f;
  f.plants = {scalar_plant(0.5, 1.0), scalar_plant(0.5, 2.0)};
  f.controllers = {Controller::make_static(scalar(0.0)), Controller::make_static(scalar(0.0))};
  f.noise = NoiseSpec{1.0, 1.0, 1.0};
  return f;
}

}  // namespace

TEST(ClosedLoop, ZeroStaticGainIsPlant) {
  const StateSpace p{(Matrix(2, 2) << 0.1, 0.2, 0.3, 0.4).finished(), Matrix::Ones(2, 1),
                     Matrix::Ones(1, 2)};
  const StateSpace cl = assemble_closed_loop(p, Controller::make_static(scalar(0.0)));
  EXPECT_TRUE(cl.A.isApprox(p.A));
  EXPECT_TRUE(cl.B.isApprox(p.B));
  EXPECT_TRUE(cl.C.isApprox(p.C));
}

TEST(ClosedLoop, ScalarStaticFeedback) {
  const StateSpace cl = assemble_closed_loop(scalar_plant(1.2), Controller::make_static(scalar(-0.9)));
  EXPECT_NEAR(cl.A(0, 0), 0.3, 1e-15);
}

TEST(ClosedLoop, ZeroDynamicController) {
  const Controller k = Controller::make_dynamic(scalar(0), scalar(0), scalar(0), scalar(0));
  const StateSpace cl = assemble_closed_loop(scalar_plant(0.7, 2.0, 3.0), k);
  EXPECT_TRUE(cl.A.isApprox((Matrix(2, 2) << 0.7, 0, 0, 0).finished()));
  EXPECT_TRUE(cl.B.isApprox((Matrix(2, 1) << 2.0, 0).finished()));
  EXPECT_TRUE(cl.C.isApprox((Matrix(1, 2) << 3.0, 0).finished()));
}

TEST(ClosedLoop, DynamicControllerBlocks) {
  const Controller k = Controller::make_dynamic(scalar(0.2), scalar(0.3), scalar(0.4), scalar(0.5));
  const StateSpace cl = assemble_closed_loop(scalar_plant(0.7, 2.0, 3.0), k);
  // [A + B DK C, B CK; BK C, AK]
  EXPECT_NEAR(cl.A(0, 0), 0.7 + 2.0 * 0.5 * 3.0, 1e-15);
  EXPECT_NEAR(cl.A(0, 1), 2.0 * 0.4, 1e-15);
  EXPECT_NEAR(cl.A(1, 0), 0.3 * 3.0, 1e-15);
  EXPECT_NEAR(cl.A(1, 1), 0.2, 1e-15);
}

TEST(ClosedLoop, DimensionMismatch) {
  EXPECT_THROW(assemble_closed_loop(scalar_plant(0.5), Controller::make_static(Matrix::Zero(1, 2))),
               ValidationError);
}

TEST(Grid, SingleModel) {
  SwitchedFamily f = two_model_family();
  f.plants.resize(1);
  f.controllers.resize(1);
  const ClosedLoopGrid g = build_grid(f);
  ASSERT_EQ(g.entries.size(), 1U);
  EXPECT_NEAR(g.at(0, 0).A(0, 0), 0.5, 1e-15);
}

TEST(Grid, EntriesMatchDirectAssembly) {
  SwitchedFamily f = two_model_family();
  f.controllers[1] = Controller::make_static(scalar(-0.25));
  const ClosedLoopGrid g = build_grid(f);
  ASSERT_EQ(g.entries.size(), 4U);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_TRUE(g.at(i, j).A.isApprox(assemble_closed_loop(f.plants[i], f.controllers[j]).A));
    }
  }
}

TEST(Grid, MismatchNamesEntry) {
  SwitchedFamily f = two_model_family();
  f.controllers[1] = Controller::make_static(Matrix::Zero(1, 2));
  try {
    build_grid(f);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("controller 2"), std::string::npos);
  }
}

TEST(Family, Validation) {
  SwitchedFamily f = two_model_family();
  f.controllers.pop_back();
  EXPECT_THROW(f.validate(), ValidationError);
  f = two_model_family();
  f.true_index = 2;
  EXPECT_THROW(f.validate(), ValidationError);
  f = two_model_family();
  f.noise.sigma_u = 0.0;
  EXPECT_THROW(f.validate(), ValidationError);
  f = two_model_family();
  f.plants[1] = StateSpace{Matrix::Identity(2, 2) * 0.5, Matrix::Ones(2, 1), Matrix::Ones(1, 2)};
  EXPECT_THROW(f.validate(), ValidationError);
}

TEST(Analysis, HandEvaluatedConstants) {
  const double dp = 0.01;
  const FamilyAnalysis a = analyze_family(two_model_family(), 1, dp);
  EXPECT_FALSE(a.eps_a.has_value());
  for (const auto& e : a.grid) {
    EXPECT_TRUE(e.stable);
    EXPECT_NEAR(e.rho, 0.5, 1e-15);
    EXPECT_NEAR(e.lyapunov(0, 0), 4.0 / 3.0, 1e-14);
  }
  EXPECT_NEAR(a.eps_c, 1.0, 1e-14);
  EXPECT_NEAR(a.gamma, 0.5, 1e-14);
  const FamilyConstants& k = a.constants;
  EXPECT_DOUBLE_EQ(k.m_a, 1.0);
  EXPECT_DOUBLE_EQ(k.m_s, 2.0);
  EXPECT_NEAR(k.m_p, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(k.m_t, 4.0 / 3.0, 1e-14);
  EXPECT_DOUBLE_EQ(k.sigma_m, 1.0);
  EXPECT_DOUBLE_EQ(k.c_e, 1.0);
  EXPECT_NEAR(k.c_r, 4.0 / 3.0 * 23.0, 1e-12);
  EXPECT_NEAR(k.c_p, 8.0 / 3.0, 1e-14);
  // worst entry B = 2: tr P + 4 tr P + 1 = 23/3
  EXPECT_NEAR(k.c_s, 5.0 * 23.0 / 3.0 * std::log(1.0 / dp), 1e-10);
}

TEST(Analysis, UnstableEntriesSetMargin) {
  SwitchedFamily f = two_model_family();
  f.plants[0] = scalar_plant(1.5);
  f.controllers[0] = Controller::make_static(scalar(-1.2));  // 0.3 on plant 1, -0.7 on plant 2
  const FamilyAnalysis a = analyze_family(f, 2, 0.01);
  ASSERT_TRUE(a.eps_a.has_value());
  EXPECT_NEAR(*a.eps_a, 0.5, 1e-12);  // plant 1 under controller 2
  EXPECT_FALSE(a.at(0, 1).stable);
  EXPECT_TRUE(a.at(0, 0).stable);
  EXPECT_NEAR(a.constants.c_e, 1.0 / std::log(1.5), 1e-12);
}

TEST(Analysis, UnobservableIsAssumptionError) {
  SwitchedFamily f;
  const Matrix a = (Matrix(2, 2) << 0.5, 0, 0, 0.3).finished();
  f.plants = {StateSpace{a, Matrix::Ones(2, 1), (Matrix(1, 2) << 1, 0).finished()},
              StateSpace{a, Matrix::Ones(2, 1) * 2, (Matrix(1, 2) << 1, 0).finished()}};
  f.controllers = {Controller::make_static(scalar(0)), Controller::make_static(scalar(0))};
  EXPECT_THROW(analyze_family(f, 2, 0.01), AssumptionError);
}

TEST(Analysis, IdenticalModelsAreAssumptionError) {
  SwitchedFamily f = two_model_family();
  f.plants[1] = f.plants[0];
  EXPECT_THROW(analyze_family(f, 2, 0.01), AssumptionError);
}

TEST(Analysis, MarginallyUnstableIsAssumptionError) {
  SwitchedFamily f = two_model_family();
  f.plants[0] = scalar_plant(1.0);
  EXPECT_THROW(analyze_family(f, 2, 0.01), AssumptionError);
}

TEST(Analysis, StableColumnsScopeSkipsUnstablePairs) {
  SwitchedFamily f;
  f.plants = {scalar_plant(1.5), scalar_plant(3.0)};
  f.controllers = {Controller::make_static(scalar(-1.2)), Controller::make_static(scalar(-2.7))};
  const FamilyAnalysis all = analyze_family(f, 2, 0.01, GammaScope::AllColumns);
  const FamilyAnalysis stable = analyze_family(f, 2, 0.01, GammaScope::StableColumns);
  EXPECT_TRUE(std::isfinite(all.gamma));
  EXPECT_TRUE(std::isinf(stable.gamma));
  EXPECT_EQ(stable.column_directions[0].size(), 1U);
}
