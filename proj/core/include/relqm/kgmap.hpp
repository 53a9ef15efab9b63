#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "relqm/grid.hpp"
#include "relqm/opcalc.hpp"
#include "relqm/triplets.hpp"

namespace relqm {

/// Raised when the KG map is used outside its domain.
class KgError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cell-centred position lattice paired with a MomentumGrid by the
/// centred discrete Fourier transform: h_x = 2 pi / (n h_p).
class PositionGrid {
 public:
  explicit PositionGrid(const MomentumGrid& momentum);

  int n() const { return n_; }
  double spacing() const { return h_; }
  double x_max() const { return x_max_; }
  double coord(int i) const { return -x_max_ + (i + 0.5) * h_; }
  std::size_t node_count() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  Vec3 position(std::size_t node) const;
  const MomentumGrid& momentum_grid() const { return momentum_; }

 private:
  MomentumGrid momentum_;
  int n_;
  double h_;
  double x_max_;
};

/// Two position-space fields with the flat measure h_x^3.
class KGState {
 public:
  explicit KGState(const PositionGrid& grid);
  const PositionGrid& grid() const { return grid_; }
  std::vector<cplx>& field(int b) { return fields_.at(b); }
  const std::vector<cplx>& field(int b) const { return fields_.at(b); }

  KGState& operator+=(const KGState& o);
  KGState& operator-=(const KGState& o);
  KGState& operator*=(cplx c);

 private:
  PositionGrid grid_;
  std::array<std::vector<cplx>, 2> fields_;
};

KGState operator+(KGState a, const KGState& b);
KGState operator-(KGState a, const KGState& b);
KGState operator*(cplx c, KGState a);

double norm(const KGState& chi);
cplx inner_product(const KGState& a, const KGState& b);

/// Z = Z1 Z2: multiplication by p0^{-1/2}, then the unitary inverse
/// Fourier transform per block.
KGState kg_forward(const State& psi);
/// Z^{-1}.
State kg_backward(const KGState& chi);

/// Z1 and its inverse alone (no p0 factor), per block.
KGState fourier_to_position(const State& flat);
State fourier_to_momentum(const KGState& chi);

/// |chi_1|^2 + |chi_2|^2 per node.
std::vector<double> kg_density(const KGState& chi);
/// Sum of the density times h_x^3.
double integrate_density(const std::vector<double>& rho, const PositionGrid& grid);

/// Map on KGStates with a linearity flag.
struct KgOperator {
  std::string label;
  Linearity linearity = Linearity::linear;
  std::function<KGState(const KGState&)> apply;
  KGState operator()(const KGState& chi) const { return apply(chi); }
};

/// Position-space operators of the Klein-Gordon theory.
struct KgOperators {
  KgOperator P0;
  std::array<KgOperator, 3> P;
  std::array<KgOperator, 3> J;
  std::array<KgOperator, 3> K;
  std::array<KgOperator, 3> Q;
  KgOperator S;
  KgOperator T;
};

/// Hatted operators; which inversion pair (1 or 2) is selected by pair.
KgOperators kg_operators(const PositionGrid& grid, double mass, int pair);

/// Spectral multiplication: Z1 s(p) Z1^{-1} with a per-block symbol.
KGState spectral_multiply(const KGState& chi, const std::function<cplx(int, const Vec3&)>& symbol);
/// exp(-i P0^ t) chi.
KGState kg_evolve(const KGState& chi, double t);

/// Round-trip error of a pure Gaussian through the transform pair, scaled
/// by the factor and floored; the calibrated FFT tolerance.
double calibrate_fft_tolerance(const MomentumGrid& grid, double factor = 1e3, double floor = 1e-13);

struct KgEquivalence {
  std::string generator;
  ResidualStats stats;
};
/// ||Z G psi - G^ Z psi|| / ||psi|| for G in {P0, Pj, Jj, Kj, Qj, S, T}.
std::vector<KgEquivalence> kg_equivalence_residual(const TransformerTriplet& triplet,
                                                    const SampleSet& samples);

/// Write the x3-slice of the density nearest x3 = 0 as CSV (x1,x2,rho).
void write_density_slice_csv(const std::vector<double>& rho, const PositionGrid& grid,
                             const std::string& path);

}  // namespace relqm
