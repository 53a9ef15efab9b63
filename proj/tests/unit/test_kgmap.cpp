#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "relqm/catalog.hpp"
#include "relqm/kgmap.hpp"

using namespace relqm;

namespace {

State test_state(const MomentumGrid& g) {
  State s(g);
  for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = cplx(std::sin(0.13 * i + 0.2), std::cos(0.07 * i));
  return s;
}

}  // namespace

TEST(KgMap, PositionGridSpacing) {
  const MomentumGrid g(16, 6.0, 1.0, 2);
  const PositionGrid pg(g);
  EXPECT_NEAR(pg.spacing(), 2.0 * std::numbers::pi / (16 * g.spacing()), 1e-15);
  EXPECT_NEAR(pg.coord(0), -pg.x_max() + 0.5 * pg.spacing(), 1e-15);
}

TEST(KgMap, TransformMatchesNaiveFourierSum) {
  // chi(x) = (2 pi)^(-3/2) sum_p h^3 exp(i p.x) phi(p) on an n = 8 lattice.
  const MomentumGrid g(8, 4.0, 1.0, 2);
  const State phi = test_state(g);
  const KGState chi = fourier_to_position(phi);
  const PositionGrid& pg = chi.grid();
  const double c = std::pow(g.spacing(), 3) / std::pow(2.0 * std::numbers::pi, 1.5);
  double worst = 0.0;
  for (int b = 0; b < 2; ++b)
    for (std::size_t xn = 0; xn < pg.node_count(); ++xn) {
      const Vec3 x = pg.position(xn);
      cplx acc = 0.0;
      for (std::size_t pn = 0; pn < g.node_count(); ++pn) {
        const Vec3 p = g.momentum(pn);
        acc += std::polar(1.0, p[0] * x[0] + p[1] * x[1] + p[2] * x[2]) * phi.at(b, pn);
      }
      worst = std::max(worst, std::abs(c * acc - chi.field(b)[xn]));
    }
  EXPECT_LE(worst, 1e-12);
}

TEST(KgMap, UnitaryRoundTripAndDensity) {
  const MomentumGrid g(8, 4.0, 1.0, 2);
  const State psi = test_state(g);
  const KGState chi = kg_forward(psi);
  EXPECT_LE(norm(kg_backward(chi) - psi) / norm(psi), 1e-13);
  EXPECT_NEAR(norm(chi), norm(psi), 1e-12);
  const auto rho = kg_density(chi);
  for (double r : rho) EXPECT_GE(r, 0.0);
  EXPECT_NEAR(integrate_density(rho, chi.grid()), norm(psi) * norm(psi), 1e-11);
}

TEST(KgMap, EvolutionConservesDensityIntegral) {
  const MomentumGrid g(12, 6.0, 1.0, 2);
  const auto samples = gaussian_catalog(g, CatalogFamily::massive);
  const KGState chi = kg_forward(samples.front().state);
  const double i0 = integrate_density(kg_density(chi), chi.grid());
  for (double t : {0.5, 2.0}) EXPECT_NEAR(integrate_density(kg_density(kg_evolve(chi, t)), chi.grid()), i0, 1e-12);
}

TEST(KgMap, DomainErrors) {
  EXPECT_THROW(kg_forward(State(MomentumGrid(8, 4.0, 1.0, 1))), KgError);
  EXPECT_THROW(kg_forward(State(MomentumGrid(8, 4.0, 0.0, 2))), KgError);
}

TEST(KgMap, HattedEnergyIsSpectralMultiplication) {
  const MomentumGrid g(12, 6.0, 1.0, 2);
  const auto tr = make_triplet(TripletClass::parse("massive_pm_1"), g);
  const auto samples = gaussian_catalog(g, CatalogFamily::massive);
  const double tol = calibrate_fft_tolerance(g);
  EXPECT_GE(tol, 1e-13);
  for (const auto& e : kg_equivalence_residual(tr, samples)) {
    if (e.generator == "P0" || e.generator == "S" || e.generator == "T")
      EXPECT_LE(e.stats.max_relative_residual, tol) << e.generator;
  }
}

TEST(KgMap, DensitySliceCsvHasHeader) {
  const MomentumGrid g(8, 4.0, 1.0, 2);
  const KGState chi = kg_forward(test_state(g));
  const std::string path = testing::TempDir() + "rho_slice.csv";
  write_density_slice_csv(kg_density(chi), chi.grid(), path);
  std::FILE* f = std::fopen(path.c_str(), "r");
  ASSERT_NE(f, nullptr);
  char line[64] = {0};
  ASSERT_NE(std::fgets(line, sizeof line, f), nullptr);
  std::fclose(f);
  EXPECT_STREQ(line, "x1,x2,rho\n");
}
