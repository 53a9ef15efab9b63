#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relqm/grid.hpp"
#include "relqm/opcalc.hpp"

namespace relqm {

enum class TripletTag {
  massive_plus,
  massive_minus,
  massive_pm_1,
  massive_pm_2,
  massless_plus,
  massless_minus,
  massless_pm,
};

/// Raised for operators the construction formulas do not provide
/// (inversions of massless theories with m != 0).
class UnavailableInSource : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for inconsistent class / grid / parameter combinations.
class TripletError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TripletClass {
  TripletTag tag = TripletTag::massive_plus;
  double mass = 1.0;
  /// Helicity parameter, massless_pm only.
  int m = 0;
  /// Inversion pair 1..3, massless_pm with m = 0 only.
  std::optional<int> st_pair;

  bool massive() const;
  bool two_block() const;
  int blocks() const { return two_block() ? 2 : 1; }
  /// Throws TripletError when the invariants do not hold.
  void validate() const;
  /// Stable string form, e.g. "massive_pm_1", "massless_pm:m=2",
  /// "massless_pm:m=0,pair=3".
  std::string to_string() const;
  /// Inverse of to_string. The mass is not part of the tag and is set
  /// separately; massless tags get mass 0.
  static TripletClass parse(std::string_view tag, double mass = 1.0);
  bool operator==(const TripletClass&) const = default;
};

std::string tag_name(TripletTag tag);

enum class SpectrumClass { negative, positive, both };
std::string to_string(SpectrumClass c);
/// Spectrum class implied by the tag: both exactly for the PM classes.
SpectrumClass predicted_spectrum(const TripletClass& cls);

class TransformerTriplet {
 public:
  TransformerTriplet(TripletClass cls, MomentumGrid grid, int order, ParticleOperator p0,
                     std::array<ParticleOperator, 3> p, std::array<ParticleOperator, 3> j,
                     std::array<ParticleOperator, 3> k, std::optional<ParticleOperator> s,
                     std::optional<ParticleOperator> t);

  const TripletClass& cls() const { return cls_; }
  const MomentumGrid& grid() const { return grid_; }
  int stencil_order() const { return order_; }
  const ParticleOperator& P0() const { return p0_; }
  const ParticleOperator& P(int j) const { return p_.at(j); }
  const ParticleOperator& J(int j) const { return j_.at(j); }
  const ParticleOperator& K(int j) const { return k_.at(j); }
  bool has_inversions() const { return s_.has_value(); }
  /// Throws UnavailableInSource for generator-only triplets.
  const ParticleOperator& S() const;
  const ParticleOperator& T() const;
  /// Sign of P0 on each block (+1 or -1).
  const std::vector<double>& energy_signs() const { return signs_; }

 private:
  TripletClass cls_;
  MomentumGrid grid_;
  int order_;
  ParticleOperator p0_;
  std::array<ParticleOperator, 3> p_;
  std::array<ParticleOperator, 3> j_;
  std::array<ParticleOperator, 3> k_;
  std::optional<ParticleOperator> s_;
  std::optional<ParticleOperator> t_;
  std::vector<double> signs_;
};

/// Builds the generators and inversions of a class on a grid.
/// Throws TripletError for inconsistent grids and UnavailableInSource when
/// an inversion pair is requested for m != 0.
TransformerTriplet make_triplet(const TripletClass& cls, const MomentumGrid& grid, int order = 4);

/// Symbols of the massless helicity terms at a momentum:
/// jj = (m/2)(p1 p0, p2 p0, 0)/rho^2, kk = (m/2)(-p2 p3, p3 p1, 0)/rho^2.
std::array<double, 3> helicity_rotation_symbol(int m, const Vec3& p, double p0);
std::array<double, 3> helicity_boost_symbol(int m, const Vec3& p);

/// <psi_b, (J.P/p0) psi_b> / <psi_b, psi_b> per block; blocks with zero
/// content report NaN. Massive triplets are rejected.
std::vector<double> helicity_expectation(const TransformerTriplet& triplet, const State& psi);
/// ||(P0^2 - sum Pj^2 - mu^2) psi|| over samples.
ResidualStats mass_shell_residual(const TransformerTriplet& triplet, const SampleSet& samples);

struct SpectrumProbe {
  std::string description;
  int block;
  double energy;
};
struct SpectrumResult {
  SpectrumClass verdict;
  std::vector<SpectrumProbe> probes;
};
/// Classifies the sign of <P0> on block-supported probes built from the
/// samples. eps guards floating-point summation only.
SpectrumResult spectrum_probe(const TransformerTriplet& triplet, const SampleSet& samples,
                              double eps);
SpectrumClass spectrum_class(const TransformerTriplet& triplet, const SampleSet& samples,
                             double eps);

/// Keep one block of a state, zero the rest.
State restrict_to_block(const State& psi, int block);

}  // namespace relqm
