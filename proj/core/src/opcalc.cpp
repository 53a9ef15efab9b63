#include "relqm/opcalc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

namespace relqm {

ParticleOperator::ParticleOperator(std::string label, Linearity linearity, Map apply,
                                   std::optional<BlockStructure> blocks)
    : label_(std::move(label)), linearity_(linearity), apply_(std::move(apply)),
      blocks_(std::move(blocks)) {}

ParticleOperator ParticleOperator::relabeled(std::string label) const {
  ParticleOperator out = *this;
  out.label_ = std::move(label);
  return out;
}

ParticleOperator compose(const ParticleOperator& a, const ParticleOperator& b) {
  const bool anti = (a.linearity() == Linearity::conjugate_linear) !=
                    (b.linearity() == Linearity::conjugate_linear);
  return ParticleOperator("(" + a.label() + ")(" + b.label() + ")",
                          anti ? Linearity::conjugate_linear : Linearity::linear,
                          [a, b](const State& psi) { return a(b(psi)); });
}

ParticleOperator operator+(const ParticleOperator& a, const ParticleOperator& b) {
  if (a.linearity() != b.linearity()) throw LinearityError("sum of operators with different linearity");
  return ParticleOperator(a.label() + " + " + b.label(), a.linearity(),
                          [a, b](const State& psi) { return a(psi) + b(psi); });
}

ParticleOperator operator-(const ParticleOperator& a, const ParticleOperator& b) {
  if (a.linearity() != b.linearity())
    throw LinearityError("difference of operators with different linearity");
  return ParticleOperator(a.label() + " - " + b.label(), a.linearity(),
                          [a, b](const State& psi) { return a(psi) - b(psi); });
}

ParticleOperator operator*(cplx c, const ParticleOperator& a) {
  std::ostringstream os;
  os << c;
  return ParticleOperator(os.str() + "*" + a.label(), a.linearity(),
                          [c, a](const State& psi) { return c * a(psi); });
}

ParticleOperator commutator(const ParticleOperator& a, const ParticleOperator& b) {
  if (!a.is_linear() || !b.is_linear())
    throw LinearityError("commutator requires linear operators");
  return ParticleOperator("[" + a.label() + ", " + b.label() + "]", Linearity::linear,
                          [a, b](const State& psi) { return a(b(psi)) - b(a(psi)); });
}

ParticleOperator identity_op() {
  return ParticleOperator("1", Linearity::linear, [](const State& psi) { return psi; });
}

ParticleOperator zero_op() {
  return ParticleOperator("0", Linearity::linear,
                          [](const State& psi) { return State(psi.grid()); });
}

ParticleOperator conjugation_op() {
  return ParticleOperator("K", Linearity::conjugate_linear,
                          [](const State& psi) { return conjugate(psi); });
}

ParticleOperator parity_op() {
  return ParticleOperator("Y", Linearity::linear, [](const State& psi) { return parity(psi); });
}

ParticleOperator multiply_table(std::string label, std::vector<cplx> table,
                                const MomentumGrid& grid) {
  if (table.size() != grid.size()) throw GridError("symbol table size does not match grid");
  auto tab = std::make_shared<const std::vector<cplx>>(std::move(table));
  return ParticleOperator(std::move(label), Linearity::linear, [tab, grid](const State& psi) {
    if (!(psi.grid() == grid)) throw GridError("multiplication operator applied on foreign grid");
    State out = psi;
    auto& d = out.data();
    const auto& t = *tab;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= t[i];
    return out;
  });
}

ParticleOperator multiply_op(std::string label, const MomentumGrid& grid,
                             const std::function<cplx(int, const Vec3&)>& symbol) {
  std::vector<cplx> table(grid.size());
  for (int b = 0; b < grid.blocks(); ++b)
    for (std::size_t k = 0; k < grid.node_count(); ++k)
      table[b * grid.node_count() + k] = symbol(b, grid.momentum(k));
  return multiply_table(std::move(label), std::move(table), grid);
}

ParticleOperator derivative_op(int axis, int order) {
  return ParticleOperator("d" + std::to_string(axis + 1), Linearity::linear,
                          [axis, order](const State& psi) { return derivative(psi, axis, order); });
}

namespace {

void require_two_blocks(const State& psi) {
  if (psi.grid().blocks() != 2) throw GridError("block operator needs a two-block state");
}

}  // namespace

ParticleOperator swap_op() {
  return ParticleOperator(
      "swap", Linearity::linear,
      [](const State& psi) {
        require_two_blocks(psi);
        State out(psi.grid());
        std::copy(psi.block(1).begin(), psi.block(1).end(), out.block(0).begin());
        std::copy(psi.block(0).begin(), psi.block(0).end(), out.block(1).begin());
        return out;
      },
      BlockStructure{{"0", "1", "1", "0"}});
}

ParticleOperator block_diag_op(cplx a, cplx b) {
  std::ostringstream sa, sb;
  sa << a;
  sb << b;
  return ParticleOperator(
      "diag(" + sa.str() + "," + sb.str() + ")", Linearity::linear,
      [a, b](const State& psi) {
        require_two_blocks(psi);
        State out = psi;
        for (auto& v : out.block(0)) v *= a;
        for (auto& v : out.block(1)) v *= b;
        return out;
      },
      BlockStructure{{sa.str(), "0", "0", sb.str()}});
}

ParticleOperator block_offdiag_op(cplx upper, cplx lower) {
  std::ostringstream su, sl;
  su << upper;
  sl << lower;
  return ParticleOperator(
      "offdiag(" + su.str() + "," + sl.str() + ")", Linearity::linear,
      [upper, lower](const State& psi) {
        require_two_blocks(psi);
        State out(psi.grid());
        auto o0 = out.block(0);
        auto o1 = out.block(1);
        const auto i0 = psi.block(0);
        const auto i1 = psi.block(1);
        for (std::size_t k = 0; k < o0.size(); ++k) {
          o0[k] = upper * i1[k];
          o1[k] = lower * i0[k];
        }
        return out;
      },
      BlockStructure{{"0", su.str(), sl.str(), "0"}});
}

double linearity_violation(const ParticleOperator& op, const MomentumGrid& grid,
                           std::uint64_t seed, int probes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto random_packet = [&]() {
    PacketSpec spec;
    const double lim = std::max(0.0, (grid.p_max() - 3.0 * 0.2 * grid.p_max()) / 2.0);
    for (int j = 0; j < 3; ++j) spec.center[j] = std::clamp(0.3 * gauss(rng), -lim, lim);
    spec.width = 0.2 * grid.p_max();
    spec.offset = {0.5 * gauss(rng), 0.5 * gauss(rng), 0.5 * gauss(rng)};
    spec.block_weights.resize(grid.blocks());
    for (auto& w : spec.block_weights) w = cplx(gauss(rng), gauss(rng));
    return gaussian_packet(grid, spec);
  };
  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    const State psi = random_packet();
    const State phi = random_packet();
    const cplx alpha(gauss(rng), gauss(rng));
    const cplx beta(gauss(rng), gauss(rng));
    const State lhs = op(alpha * psi + beta * phi);
    const cplx a = op.is_linear() ? alpha : std::conj(alpha);
    const cplx b = op.is_linear() ? beta : std::conj(beta);
    const State opsi = op(psi);
    const State ophi = op(phi);
    const State rhs = a * opsi + b * ophi;
    const double scale = std::abs(alpha) * norm(opsi) + std::abs(beta) * norm(ophi);
    const double defect = norm(lhs - rhs);
    worst = std::max(worst, scale > 0.0 ? defect / scale : defect);
  }
  return worst;
}

int worker_count() {
  const char* env = std::getenv("RELQM_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 256));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& f) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> parallel_values(std::size_t count,
                                    const std::function<double(std::size_t)>& f) {
  std::vector<double> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

ResidualStats make_stats(const SampleSet& samples, std::vector<double> values) {
  ResidualStats st;
  st.sample_count = values.size();
  double sum = 0.0;
  for (double v : values) {
    st.max_relative_residual = std::max(st.max_relative_residual, v);
    sum += v;
  }
  st.mean_relative_residual = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
  for (const auto& s : samples) st.state_descriptions.push_back(s.description);
  st.values = std::move(values);
  return st;
}

ResidualStats defect_residual(const std::function<State(const State&)>& defect,
                              const SampleSet& samples) {
  auto values = parallel_values(samples.size(), [&](std::size_t i) {
    const State& psi = samples[i].state;
    return norm(defect(psi)) / norm(psi);
  });
  return make_stats(samples, std::move(values));
}

ResidualStats commutator_residual(const ParticleOperator& a, const ParticleOperator& b,
                                  const ParticleOperator& c, const SampleSet& samples) {
  if (!a.is_linear() || !b.is_linear() || !c.is_linear())
    throw LinearityError("commutator_residual requires linear operators");
  return defect_residual(
      [&](const State& psi) { return a(b(psi)) - b(a(psi)) - c(psi); }, samples);
}

ResidualStats adjoint_residual(const ParticleOperator& a, const SampleSet& samples) {
  if (!a.is_linear()) throw LinearityError("adjoint_residual requires a linear operator");
  const std::size_t n = samples.size();
  auto values = parallel_values(n, [&](std::size_t i) {
    const State& phi = samples[i].state;
    const State& psi = samples[(i + 1) % n].state;
    const cplx lhs = inner_product(phi, a(psi));
    const cplx rhs = inner_product(a(phi), psi);
    return std::abs(lhs - rhs) / (norm(phi) * norm(psi));
  });
  return make_stats(samples, std::move(values));
}

ResidualStats identity_residual(const ParticleOperator& a, const ParticleOperator& b,
                                const SampleSet& samples) {
  if (a.linearity() != b.linearity())
    throw LinearityError("identity_residual requires operators of equal linearity");
  return defect_residual([&](const State& psi) { return a(psi) - b(psi); }, samples);
}

}  // namespace relqm
