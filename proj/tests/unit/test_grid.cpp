#include <gtest/gtest.h>

#include <cmath>

#include "relqm/grid.hpp"

using namespace relqm;

namespace {

double gauss(const Vec3& p, const Vec3& c, double w) {
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) r2 += (p[a] - c[a]) * (p[a] - c[a]);
  return std::exp(-r2 / (2.0 * w * w));
}

// Largest |D psi - psi'| over nodes at least `margin` nodes from the faces.
double interior_derivative_error(int n, int order, int axis, int margin) {
  const MomentumGrid g(n, 6.0, 1.0);
  const Vec3 c{0.4, -0.3, 0.2};
  const double w = 1.2;
  const State psi = sample(g, [&](const Vec3& p) { return gauss(p, c, w); });
  const State d = derivative(psi, axis, order);
  double err = 0.0;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const auto ijk = g.ijk(k);
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && ijk[a] >= margin && ijk[a] < n - margin;
    if (!inside) continue;
    const Vec3 p = g.momentum(k);
    const double exact = -(p[axis] - c[axis]) / (w * w) * gauss(p, c, w);
    err = std::max(err, std::abs(d.at(0, k) - exact));
  }
  return err;
}

}  // namespace

TEST(Grid, RejectsInvalidParameters) {
  EXPECT_THROW(MomentumGrid(15, 6.0, 1.0), GridError);
  EXPECT_THROW(MomentumGrid(6, 6.0, 1.0), GridError);
  EXPECT_THROW(MomentumGrid(16, 0.0, 1.0), GridError);
  EXPECT_THROW(MomentumGrid(16, 6.0, -1.0), GridError);
  EXPECT_THROW(MomentumGrid(16, 6.0, 1.0, 3), GridError);
}

TEST(Grid, CellCentredCoordinatesAndMirror) {
  const MomentumGrid g(8, 4.0, 1.0);
  EXPECT_DOUBLE_EQ(g.spacing(), 1.0);
  EXPECT_DOUBLE_EQ(g.coord(0), -3.5);
  EXPECT_DOUBLE_EQ(g.coord(7), 3.5);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const Vec3 p = g.momentum(k);
    const Vec3 q = g.momentum(g.mirror(k));
    for (int a = 0; a < 3; ++a) EXPECT_EQ(q[a], -p[a]);
  }
}

TEST(Grid, WeightsAreInvariantMeasure) {
  const MomentumGrid g(8, 4.0, 2.0);
  for (std::size_t k = 0; k < g.node_count(); k += 37) {
    const Vec3 p = g.momentum(k);
    const double p0 = std::sqrt(4.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    EXPECT_NEAR(g.energy(k), p0, 1e-14);
    EXPECT_NEAR(g.weight(k), 1.0 / p0, 1e-15);
  }
}

TEST(Grid, InnerProductMatchesDirectSum) {
  const MomentumGrid g(8, 4.0, 1.0, 2);
  State a(g), b(g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = cplx(std::sin(0.3 * i), std::cos(0.7 * i));
    b.data()[i] = cplx(std::cos(0.2 * i), 0.1 * i);
  }
  cplx oracle = 0.0;
  for (int blk = 0; blk < 2; ++blk)
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      const Vec3 p = g.momentum(k);
      const double p0 = std::sqrt(1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      oracle += std::conj(a.at(blk, k)) * b.at(blk, k) / p0;
    }
  EXPECT_NEAR(std::abs(inner_product(a, b) - oracle), 0.0, 1e-10);
  EXPECT_NEAR(norm(a) * norm(a), inner_product(a, a).real(), 1e-10);
}

TEST(Grid, MismatchedGridsThrow) {
  const State a(MomentumGrid(8, 4.0, 1.0));
  const State b(MomentumGrid(10, 4.0, 1.0));
  EXPECT_THROW(inner_product(a, b), GridError);
}

TEST(Grid, StencilsAreExactOnPolynomials) {
  const MomentumGrid g(8, 4.0, 1.0);
  // Order 4 is exact through degree 4, including the one-sided closures.
  const State f = sample(g, [](const Vec3& p) { return std::pow(p[1], 4) - 2.0 * p[1]; });
  const State d = derivative(f, 1, 4);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const double y = g.momentum(k)[1];
    EXPECT_NEAR(d.at(0, k).real(), 4.0 * y * y * y - 2.0, 1e-11);
  }
  const State q = sample(g, [](const Vec3& p) { return p[2] * p[2]; });
  const State d2 = derivative(q, 2, 2);
  for (std::size_t k = 0; k < g.node_count(); ++k) EXPECT_NEAR(d2.at(0, k).real(), 2.0 * g.momentum(k)[2], 1e-12);
}

TEST(Grid, DerivativeConvergesAtStencilOrder) {
  for (int order : {2, 4}) {
    const double e1 = interior_derivative_error(24, order, 0, 0);
    const double e2 = interior_derivative_error(48, order, 0, 0);
    const double h1 = 12.0 / 24.0, h2 = 12.0 / 48.0;
    const double est = std::log(e1 / e2) / std::log(h1 / h2);
    EXPECT_NEAR(est, order, 0.3) << "order " << order;
  }
}

TEST(Grid, ParityAnticommutesWithDerivativeInInterior) {
  const MomentumGrid g(16, 6.0, 1.0);
  PacketSpec s;
  s.center = {0.5, -0.2, 0.3};
  s.width = 0.6;
  const State psi = gaussian_packet(g, s);
  for (int axis = 0; axis < 3; ++axis) {
    const State lhs = parity(derivative(psi, axis));
    const State rhs = derivative(parity(psi), axis);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) worst = std::max(worst, std::abs(lhs.data()[i] + rhs.data()[i]));
    EXPECT_LE(worst, 1e-12);
  }
}

TEST(Grid, ParityAndConjugationAreInvolutions) {
  const MomentumGrid g(8, 4.0, 1.0, 2);
  State a(g);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = cplx(0.1 * i, -0.05 * i * i);
  EXPECT_EQ(parity(parity(a)).data(), a.data());
  EXPECT_EQ(conjugate(conjugate(a)).data(), a.data());
}

TEST(Grid, PacketNormalizedAndBoundaryChecked) {
  const MomentumGrid g(16, 6.0, 1.0, 2);
  const State psi = gaussian_packet(g, {1.0, 0.0, 0.0}, 1.0, {cplx(1.0), cplx(0.0, 1.0)});
  EXPECT_NEAR(norm(psi), 1.0, 1e-13);
  PacketSpec bad;
  bad.center = {3.5, 0.0, 0.0};
  bad.width = 1.0;
  EXPECT_THROW(check_boundary_support(g, bad), BoundaryError);
  EXPECT_THROW(gaussian_packet(g, bad), BoundaryError);
}

TEST(Grid, PacketMomentumMomentMatchesCenter) {
  const MomentumGrid g(24, 6.0, 1.0);
  const State psi = gaussian_packet(g, {1.0, -0.5, 0.25}, 0.8);
  // Direct summation of <p_j> with the invariant-measure weights.
  for (int a = 0; a < 3; ++a) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      num += std::norm(psi.at(0, k)) * g.weight(k) * g.momentum(k)[a];
      den += std::norm(psi.at(0, k)) * g.weight(k);
    }
    const double centre = std::array<double, 3>{1.0, -0.5, 0.25}[a];
    // The 1/p0 weight skews the moment towards smaller |p|; bound by sigma^2 |grad log p0|.
    EXPECT_NEAR(num / den, centre, 0.8 * 0.8 * 1.0);
  }
}

TEST(Grid, SymmetrizedPacketsHaveDefiniteParity) {
  const MomentumGrid g(16, 6.0, 1.0);
  PacketSpec s;
  s.center = {1.0, 0.5, 0.0};
  s.width = 1.0;
  s.symmetry = PacketSymmetry::odd;
  const State odd = gaussian_packet(g, s);
  EXPECT_LE(norm(parity(odd) + odd), 1e-14);
  s.symmetry = PacketSymmetry::even;
  const State even = gaussian_packet(g, s);
  EXPECT_LE(norm(parity(even) - even), 1e-14);
}

TEST(Grid, InterpolationIsExactForTrilinearFunctions) {
  const MomentumGrid g(8, 4.0, 1.0);
  auto f = [](const Vec3& p) { return 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[2] + 0.25 * p[0] * p[1] * p[2]; };
  const State psi = sample(g, f);
  for (const Vec3& p : {Vec3{0.1, 0.2, -0.3}, Vec3{-2.9, 1.7, 0.05}, Vec3{3.0, -3.0, 2.2}})
    EXPECT_NEAR(interpolate(psi, 0, p).real(), f(p), 1e-12);
  EXPECT_EQ(interpolate(psi, 0, {3.9, 0.0, 0.0}), cplx(0.0));
}
