#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "relqm/catalog.hpp"
#include "relqm/verify.hpp"

using namespace relqm;

namespace {

CheckResult check(CheckKind kind, std::vector<double> values, std::vector<double> bounds = {}) {
  CheckResult c;
  c.name = "c";
  c.kind = kind;
  int n = 16;
  for (double v : values) {
    c.residuals.push_back({n, v});
    n *= 2;
  }
  c.bounds = bounds.empty() ? std::vector<double>(values.size(), 0.0) : bounds;
  return c;
}

const std::vector<double> kH{0.75, 0.375};

}  // namespace

TEST(Verify, ConvergenceOrder) {
  EXPECT_NEAR(convergence_order(16.0, 1.0, 0.5, 0.25), 4.0, 1e-14);
  EXPECT_NEAR(convergence_order(1.0, 1.0, 0.5, 0.25), 0.0, 1e-14);
}

TEST(Verify, JudgeRules) {
  const TolerancePolicy pol;
  auto c = check(CheckKind::exact, {1e-12, 5e-11});
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  c = check(CheckKind::exact, {1e-12, 2e-10});
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);

  c = check(CheckKind::convergent, {1.6e-1, 1e-2});  // order 4
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  EXPECT_NEAR(*c.order_estimate, 4.0, 1e-12);
  c = check(CheckKind::convergent, {8e-2, 1e-2});  // order 3
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);
  c = check(CheckKind::convergent, {3.2e-1, 1e-2});  // order 5
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);
  c = check(CheckKind::convergent, {1e-15, 3e-15});  // exact on the lattice
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  EXPECT_FALSE(c.order_estimate.has_value());

  c = check(CheckKind::decaying, {1e-2, 4e-3});
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  c = check(CheckKind::decaying, {1e-2, 9e-3});
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);

  c = check(CheckKind::upper_bound, {1.0, 2.0}, {1.5, 1.5});
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);
  c = check(CheckKind::lower_bound, {0.4, 0.39}, {0.1, 0.1});
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  c = check(CheckKind::lower_bound, {0.4, 0.1}, {0.05, 0.05});  // decays at order 2
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);

  c = check(CheckKind::recorded, {1.0, 7.0});
  judge(c, kH, pol);
  EXPECT_TRUE(c.pass);
  c = check(CheckKind::exact, {0.0, std::numeric_limits<double>::quiet_NaN()});
  judge(c, kH, pol);
  EXPECT_FALSE(c.pass);
}

TEST(Verify, AssembleRequiresMatchingNames) {
  const TolerancePolicy pol;
  std::vector<std::vector<Measurement>> per{{{"a", "", CheckKind::exact, 0.0, 0.0, ""}},
                                            {{"b", "", CheckKind::exact, 0.0, 0.0, ""}}};
  EXPECT_THROW(assemble_section("s", {16, 32}, kH, per, pol), std::logic_error);
  per[1][0].name = "a";
  const auto sec = assemble_section("s", {16, 32}, kH, per, pol);
  ASSERT_EQ(sec.checks.size(), 1u);
  EXPECT_TRUE(sec.checks[0].pass);
  EXPECT_EQ(sec.checks[0].residuals[1].n, 32);
}

TEST(Verify, TimeFlowMatchesExactPhase) {
  const MomentumGrid g(16, 6.0, 1.0);
  const auto tr = make_triplet(TripletClass::parse("massive_plus"), g);
  PacketSpec s;
  s.center = {0.5, 0.3, -0.2};
  s.width = 1.2;
  const FlowResult r = group_flow(tr, s, FlowKind::time, 0, 0.3);
  EXPECT_FALSE(r.unstable);
  EXPECT_LE(r.vs_reference, 1e-8);
  const FlowResult tr1 = group_flow(tr, s, FlowKind::translation, 1, 0.3);
  EXPECT_LE(tr1.vs_reference, 1e-8);
}

TEST(Verify, BoostPreservesNormOnMassivePlus) {
  const MomentumGrid g(24, 6.0, 1.0);
  const auto tr = make_triplet(TripletClass::parse("massive_plus"), g);
  PacketSpec s;
  s.center = {0.5, 0.3, -0.2};
  s.width = 1.2;
  const FlowResult r = group_flow(tr, s, FlowKind::boost, 0, 0.05);
  EXPECT_LE(r.norm_drift, 1e-6);
  EXPECT_LE(r.vs_reference, 2.0 * r.interpolation_error + 1e-8);
}

TEST(Verify, ExactSuiteOnSmallGrid) {
  const MomentumGrid g(8, 6.0, 1.0, 2);
  const auto tr = make_triplet(TripletClass::parse("massive_pm_2"), g);
  for (const auto& m : exact_suite(tr, gaussian_catalog(g, CatalogFamily::massive)))
    EXPECT_LE(m.value, 1e-10) << m.name;
}

TEST(Verify, RejectsUnknownSuite) {
  VerifyOptions opt;
  opt.suites = {"nonsense"};
  EXPECT_THROW(verify_class(TripletClass::parse("massive_plus"), opt), std::invalid_argument);
}

TEST(Verify, UnavailableSectionsAreMarked) {
  VerifyOptions opt;
  opt.resolutions = {8, 10};
  opt.suites = {"inversion", "kg"};
  const auto rep = verify_class(TripletClass::parse("massless_pm:m=2"), opt);
  ASSERT_EQ(rep.sections.size(), 2u);
  for (const auto& s : rep.sections) EXPECT_FALSE(s.available) << s.name;
  EXPECT_TRUE(rep.all_pass());
}
