#include <gtest/gtest.h>

#include <cmath>

#include "relqm/catalog.hpp"

using namespace relqm;

TEST(Catalog, DeterministicForSeed) {
  const auto a = catalog_specs(CatalogFamily::massive, 6.0, 1.0);
  const auto b = catalog_specs(CatalogFamily::massive, 6.0, 1.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].center, b[i].center);
    EXPECT_EQ(a[i].width, b[i].width);
    EXPECT_EQ(a[i].offset, b[i].offset);
  }
  CatalogOptions other;
  other.seed = 7;
  const auto c = catalog_specs(CatalogFamily::massive, 6.0, 1.0, other);
  EXPECT_NE(a[0].center, c[0].center);
}

TEST(Catalog, EveryFamilyRespectsBoundarySupport) {
  const MomentumGrid g(16, 6.0, 0.0, 2);
  for (auto fam : {CatalogFamily::massive, CatalogFamily::massless, CatalogFamily::massless_axis_free})
    for (const auto& s : catalog_specs(fam, 6.0, fam == CatalogFamily::massive ? 1.0 : 0.0))
      EXPECT_NO_THROW(check_boundary_support(g, s)) << family_name(fam);
}

TEST(Catalog, AxisFreePacketsStayAwayFromAxis) {
  for (const auto& s : catalog_specs(CatalogFamily::massless_axis_free, 6.0, 0.0)) {
    const double rho = std::hypot(s.center[0], s.center[1]);
    EXPECT_GT(rho, 2.5 * s.width);
  }
}

TEST(Catalog, SymmetrizedVariantsOnMassiveOnly) {
  const auto massive = catalog_specs(CatalogFamily::massive, 6.0, 1.0);
  int even = 0, odd = 0;
  for (const auto& s : massive) {
    even += s.symmetry == PacketSymmetry::even;
    odd += s.symmetry == PacketSymmetry::odd;
  }
  EXPECT_EQ(even, 1);
  EXPECT_EQ(odd, 1);
  for (const auto& s : catalog_specs(CatalogFamily::massless, 6.0, 0.0)) EXPECT_EQ(s.symmetry, PacketSymmetry::none);
}

TEST(Catalog, TwoBlockGridsGetThreeStatesPerProfile) {
  const auto specs = catalog_specs(CatalogFamily::massive, 6.0, 1.0);
  const MomentumGrid one(8, 6.0, 1.0, 1), two(8, 6.0, 1.0, 2);
  EXPECT_EQ(gaussian_catalog(specs, one).size(), specs.size());
  const SampleSet s2 = gaussian_catalog(specs, two);
  ASSERT_EQ(s2.size(), 3 * specs.size());
  for (const auto& s : s2) EXPECT_NEAR(norm(s.state), 1.0, 1e-12);
}
