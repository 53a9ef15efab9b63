#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "relqm/catalog.hpp"
#include "relqm/opcalc.hpp"
#include "relqm/triplets.hpp"

namespace relqm {

/// Discretization of the Newton-Wigner operator
/// F_j = i d_j - i p_j / (2 p0^2).
enum class NwForm {
  /// p0^{1/2} (i D_j) p0^{-1/2}; equal to F_j in the continuum, and
  /// exactly commuting and dnu-symmetric on the lattice.
  factored,
  /// i D_j - i p_j/(2 p0^2) applied term by term.
  direct,
};

struct PositionOperator {
  std::array<ParticleOperator, 3> Q;
  int blocks = 1;
  NwForm form = NwForm::factored;
};

/// Block-diagonal Newton-Wigner operator diag(F, ..., F) on the grid.
PositionOperator newton_wigner(const MomentumGrid& grid, int order = 4,
                               NwForm form = NwForm::factored);
/// i d_j without the correction term.
ParticleOperator uncorrected_position(int axis, int order = 4);

/// One named relation, aggregated over its index pairs.
struct RelationResidual {
  std::string name;
  ResidualStats stats;
  /// Per index pair, e.g. "[J1,Q2]" -> max residual.
  std::map<std::string, double> components;
};

struct CovarianceResiduals {
  RelationResidual ccr;            // [Q_j, P_k] = i delta_jk
  RelationResidual rotation;       // [J_j, Q_k] = i eps_jkl Q_l
  RelationResidual commutativity;  // [Q_j, Q_k] = 0
  bool has_inversions = false;
  RelationResidual time_reversal;    // T Q = Q T
  RelationResidual space_inversion;  // S Q = -Q S
};

CovarianceResiduals covariance_residuals(const TransformerTriplet& triplet, const PositionOperator& q,
                                         const SampleSet& samples);

/// i[P0, Q_j] - sign_b p_j/p0, aggregated over j.
RelationResidual velocity_residual(const TransformerTriplet& triplet, const PositionOperator& q,
                                   const SampleSet& samples);

/// Multiplication by mu (1 - |v|^2)^{-1/2} with v = p/p0 the velocity
/// symbol; for mu = 0 the limit p0 is used.
ParticleOperator kinetic_energy(const MomentumGrid& grid);
/// ||(E_kin - p0) psi|| over samples, with p0 the unsigned energy symbol.
ResidualStats kinetic_energy_residual(const MomentumGrid& grid, const SampleSet& samples);

/// Real symbol basis for the correction search. Each entry is a vector
/// field with a single nonzero component.
struct CorrectionTerm {
  std::string label;
  int component;  // 0..2
  std::function<double(const Vec3&)> symbol;
};
std::vector<CorrectionTerm> correction_basis();

enum class CorrectionRelation { commutativity, ccr, rotation, time_reversal, space_inversion };

struct CorrectionFit {
  std::vector<double> coefficients;
  /// Largest ||Delta_k psi|| over samples and components.
  double correction_size = 0.0;
  /// Total squared residual before and after.
  double objective_before = 0.0;
  double objective_after = 0.0;
  /// Per relation, max residual after correction.
  std::map<std::string, double> relation_max_after;
  int rank = 0;
};

/// Least-squares correction Q + Delta within the span of correction_basis().
/// Two-block grids use diag(Delta, -Delta).
CorrectionFit best_correction(const TransformerTriplet& triplet, const PositionOperator& q,
                              const SampleSet& samples, const std::vector<CorrectionRelation>& relations);

enum class Verdict { localizable, obstructed, inconclusive };
std::string to_string(Verdict v);

struct LocalizabilityOptions {
  std::vector<int> resolutions{16, 24, 32};
  double p_max = 6.0;
  int order = 4;
  NwForm form = NwForm::factored;
  CatalogOptions catalog{};
  /// Obstruction requires every defect >= threshold_factor * |m|.
  double threshold_factor = 0.0;
  /// A defect decays at stencil order when its fitted slope is at least
  /// order - order_band.
  double order_band = 0.5;
  /// A defect is non-decaying when its slope between the two finest grids
  /// is below this.
  double flat_slope = 0.5;
  bool correction_search = true;
};

/// Threshold factor frozen from the m = 2 calibration run (see README).
double default_obstruction_threshold();

struct LocalizabilityReport {
  int m = 0;
  std::vector<int> resolutions;
  std::vector<double> spacings;
  std::vector<double> raw_defect;        // max over (j,k) of the rotation relation
  std::vector<double> optimized_defect;  // same, after the correction search
  std::vector<double> commutativity_defect;
  std::vector<double> ccr_defect;
  std::vector<double> correction_size;
  double raw_slope = 0.0;
  double optimized_slope = 0.0;
  /// Slopes between the two finest resolutions; the coarsest grid can be
  /// dominated by discretization error.
  double raw_fine_slope = 0.0;
  double optimized_fine_slope = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string rationale;
};

/// Slope of log(value) against log(h) by least squares.
double fitted_slope(const std::vector<double>& spacings, const std::vector<double>& values);

LocalizabilityReport localizability_experiment(int m, const LocalizabilityOptions& options);

}  // namespace relqm
