#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relqm/grid.hpp"

namespace relqm {

enum class Linearity { linear, conjugate_linear };

/// Raised when an operation receives an operator of the wrong linearity.
class LinearityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 2x2 block description used only for diagnostics, e.g. {"p0", "0", "0", "-p0"}.
struct BlockStructure {
  std::array<std::string, 4> entries;
};

/// Matrix-free linear or conjugate-linear map on States.
class ParticleOperator {
 public:
  using Map = std::function<State(const State&)>;

  ParticleOperator(std::string label, Linearity linearity, Map apply,
                   std::optional<BlockStructure> blocks = std::nullopt);

  State operator()(const State& psi) const { return apply_(psi); }

  Linearity linearity() const { return linearity_; }
  bool is_linear() const { return linearity_ == Linearity::linear; }
  const std::string& label() const { return label_; }
  const std::optional<BlockStructure>& block_structure() const { return blocks_; }

  ParticleOperator relabeled(std::string label) const;

 private:
  std::string label_;
  Linearity linearity_;
  Map apply_;
  std::optional<BlockStructure> blocks_;
};

/// (A o B)(psi) = A(B(psi)); conjugate-linearity flags combine by XOR.
ParticleOperator compose(const ParticleOperator& a, const ParticleOperator& b);
/// Pointwise sum and difference; linearity flags must agree.
ParticleOperator operator+(const ParticleOperator& a, const ParticleOperator& b);
ParticleOperator operator-(const ParticleOperator& a, const ParticleOperator& b);
/// (c A)(psi) = c * A(psi).
ParticleOperator operator*(cplx c, const ParticleOperator& a);
/// A o B - B o A for linear A and B.
ParticleOperator commutator(const ParticleOperator& a, const ParticleOperator& b);

// Primitive operators.
ParticleOperator identity_op();
ParticleOperator zero_op();
/// Complex conjugation K.
ParticleOperator conjugation_op();
/// Parity Upsilon.
ParticleOperator parity_op();
/// Multiplication by a per-block symbol s(block, p). The symbol is tabulated
/// once for the grid.
ParticleOperator multiply_op(std::string label, const MomentumGrid& grid,
                             const std::function<cplx(int, const Vec3&)>& symbol);
/// Multiplication by a tabulated symbol of length grid.size().
ParticleOperator multiply_table(std::string label, std::vector<cplx> table,
                                const MomentumGrid& grid);
/// Finite-difference d/dp_axis.
ParticleOperator derivative_op(int axis, int order = 4);
/// Exchange of the two blocks.
ParticleOperator swap_op();
/// diag(a, b) on the two blocks.
ParticleOperator block_diag_op(cplx a, cplx b);
/// [[0, upper], [lower, 0]] on the two blocks.
ParticleOperator block_offdiag_op(cplx upper, cplx lower);

/// Randomized check of the declared linearity flag. Returns the largest
/// relative violation observed.
double linearity_violation(const ParticleOperator& op, const MomentumGrid& grid,
                           std::uint64_t seed = 1, int probes = 2);

struct Sample {
  std::string description;
  State state;
};
using SampleSet = std::vector<Sample>;

struct ResidualStats {
  double max_relative_residual = 0.0;
  double mean_relative_residual = 0.0;
  std::size_t sample_count = 0;
  std::vector<std::string> state_descriptions;
  std::vector<double> values;
};

/// Reduce a list of per-sample values into statistics.
ResidualStats make_stats(const SampleSet& samples, std::vector<double> values);

/// Stats of ||D psi|| / ||psi|| over samples for an arbitrary defect map.
ResidualStats defect_residual(const std::function<State(const State&)>& defect,
                              const SampleSet& samples);
/// ||(AB - BA - C) psi|| over samples; A, B, C linear.
ResidualStats commutator_residual(const ParticleOperator& a, const ParticleOperator& b,
                                  const ParticleOperator& c, const SampleSet& samples);
/// |<phi, A psi> - <A phi, psi>| over consecutive sample pairs (cyclic).
ResidualStats adjoint_residual(const ParticleOperator& a, const SampleSet& samples);
/// ||(A - B) psi|| over samples; A and B must share linearity.
ResidualStats identity_residual(const ParticleOperator& a, const ParticleOperator& b,
                                const SampleSet& samples);

/// Thread count for sample-parallel evaluation (RELQM_THREADS, default 1).
int worker_count();
/// Evaluate f(i) for i in [0, count) on worker threads; results in order.
std::vector<double> parallel_values(std::size_t count, const std::function<double(std::size_t)>& f);
/// Run f(i) for i in [0, count) on worker threads; f must only write to
/// slot i of caller-owned storage.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& f);

}  // namespace relqm
