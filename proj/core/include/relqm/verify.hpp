#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relqm/catalog.hpp"
#include "relqm/grid.hpp"
#include "relqm/position.hpp"
#include "relqm/triplets.hpp"

namespace relqm {

/// How a check turns residuals into pass/fail.
enum class CheckKind {
  /// Every residual <= exact tolerance.
  exact,
  /// Order estimate within the band around the stencil order, or every
  /// residual <= exact tolerance (identity holds exactly on the lattice).
  convergent,
  /// Residual decreases across the ladder (order estimate >= min_decay_order).
  decaying,
  /// Every residual <= its own bound.
  upper_bound,
  /// Every residual >= its own bound and the sequence is not decaying.
  lower_bound,
  /// Recorded only; always passes.
  recorded,
};
std::string to_string(CheckKind k);

struct TolerancePolicy {
  double exact = 1e-10;
  int stencil_order = 4;
  double order_band = 0.5;
  double min_decay_order = 1.0;
  /// Slope below which a lower-bounded defect counts as non-decaying.
  double flat_slope = 0.5;
  double helicity_factor = 5.0;
  /// Guard for spectrum classification; multiplication operators are exact.
  double spectrum_eps = 1e-9;
  double fft_factor = 1e3;
  double fft_floor = 1e-13;
  double ehrenfest_relative = 0.01;
  double group_translation = 1e-8;
  double group_norm = 1e-6;
  double group_interp_factor = 2.0;
};

/// One value measured at one resolution.
struct Measurement {
  std::string name;
  std::string anchor;
  CheckKind kind = CheckKind::exact;
  double value = 0.0;
  double bound = 0.0;
  std::string note;
};

struct ResidualAt {
  int n;
  double value;
};

struct CheckResult {
  std::string name;
  std::string anchor;
  CheckKind kind = CheckKind::exact;
  std::vector<ResidualAt> residuals;
  std::vector<double> bounds;
  std::optional<double> order_estimate;
  bool pass = false;
  std::string note;
};

struct ReportSection {
  std::string name;
  bool available = true;
  std::string note;
  std::vector<CheckResult> checks;
};

struct VerificationReport {
  std::string triplet_class;
  std::vector<int> resolutions;
  double p_max = 0.0;
  double mass = 0.0;
  int stencil_order = 4;
  std::uint64_t seed = 0;
  TolerancePolicy policy;
  std::vector<ReportSection> sections;

  bool all_pass() const;
  std::size_t passed() const;
  std::size_t failed() const;
};

/// log(r_coarse / r_fine) / log(h_coarse / h_fine).
double convergence_order(double r_coarse, double r_fine, double h_coarse, double h_fine);

/// Turns per-resolution measurements into checks. Measurements are matched
/// by name; every resolution must produce the same names in the same order.
ReportSection assemble_section(const std::string& name, const std::vector<int>& ns,
                               const std::vector<double>& hs,
                               const std::vector<std::vector<Measurement>>& per_resolution,
                               const TolerancePolicy& policy);
/// Applies the pass rule of a check kind; fills order_estimate and pass.
void judge(CheckResult& check, const std::vector<double>& hs, const TolerancePolicy& policy);

// Per-resolution suites.
std::vector<Measurement> lie_algebra_suite(const TransformerTriplet& triplet, const SampleSet& samples);
std::vector<Measurement> inversion_suite(const TransformerTriplet& triplet, const SampleSet& samples,
                                         const TolerancePolicy& policy);
std::vector<Measurement> exact_suite(const TransformerTriplet& triplet, const SampleSet& samples);
std::vector<Measurement> spectrum_suite(const TransformerTriplet& triplet, const SampleSet& samples,
                                        const TolerancePolicy& policy);
std::vector<Measurement> helicity_suite(const TransformerTriplet& triplet, const SampleSet& samples,
                                        const TolerancePolicy& policy);
/// expect_obstructed switches the rotation relation of m != 0 theories to a
/// lower-bound check against the obstruction threshold.
std::vector<Measurement> covariance_suite(const TransformerTriplet& triplet, const PositionOperator& q,
                                          const SampleSet& samples, bool expect_obstructed,
                                          double obstruction_threshold);
std::vector<Measurement> kg_suite(const TransformerTriplet& triplet, const SampleSet& samples,
                                  const TolerancePolicy& policy);

/// Kinds of one-parameter flows.
enum class FlowKind { time, translation, rotation, boost };
std::string to_string(FlowKind k);

struct FlowResult {
  FlowKind kind;
  int axis;
  double parameter;
  int steps;
  bool unstable = false;
  /// Relative norm drift of the integrated state.
  double norm_drift = 0.0;
  /// Against the exact phase (time, translation) or the interpolated
  /// point transformation (rotation, boost); NaN if unavailable.
  double vs_reference = 0.0;
  /// Interpolated point transformation against the analytic packet.
  double interpolation_error = 0.0;
  /// Flow against the analytic packet.
  double vs_analytic = 0.0;
  bool point_comparison = true;
};

/// Integrates d psi/d tau = i G psi with classical RK4 and compares with the
/// point action of the flow. The packet must satisfy the boundary rule.
FlowResult group_flow(const TransformerTriplet& triplet, const PacketSpec& packet, FlowKind kind,
                      int axis, double parameter);
std::vector<Measurement> group_action_suite(const TransformerTriplet& triplet, const PacketSpec& packet,
                                            const TolerancePolicy& policy, double angle = 0.1,
                                            double shift = 0.3, double rapidity = 0.05, double time = 0.3);

struct TrajectoryPoint {
  double t;
  std::array<double, 3> q;
  std::array<double, 3> p;
  double p0;
  double e_kin;
  double norm;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Per block: fitted d<Q_j>/dt of the block-restricted state and the
  /// expected sign_b <p_j/p0>_b.
  std::vector<std::array<double, 3>> block_slope;
  std::vector<std::array<double, 3>> block_velocity;
  std::vector<double> block_weight;
};

/// psi_t = exp(-i P0 t) psi (exact phase per node), expectations of the
/// Newton-Wigner position, momentum, energy and E_kin.
Trajectory ehrenfest_evolution(const TransformerTriplet& triplet, const State& psi,
                               const std::vector<double>& times, NwForm form = NwForm::factored);
std::vector<Measurement> ehrenfest_suite(const TransformerTriplet& triplet, const PacketSpec& packet,
                                         const TolerancePolicy& policy);

struct VerifyOptions {
  std::vector<int> resolutions{16, 32};
  double p_max = 6.0;
  double mass = 1.0;
  int order = 4;
  std::set<std::string> suites{"exact", "lie", "inversion", "spectrum", "covariance"};
  CatalogOptions catalog{};
  TolerancePolicy policy{};
  bool expect_obstructed = false;
  double obstruction_factor = 0.0;  // 0 selects default_obstruction_threshold()
  NwForm form = NwForm::factored;
};

/// Names accepted in VerifyOptions::suites.
const std::vector<std::string>& known_suites();

/// Runs the selected suites on the ladder for a class.
VerificationReport verify_class(const TripletClass& cls, const VerifyOptions& options);

}  // namespace relqm
