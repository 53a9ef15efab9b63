#include "relqm/grid.hpp"

#include <cmath>
#include <sstream>

namespace relqm {

MomentumGrid::MomentumGrid(int n_per_axis, double p_max, double mass, int blocks)
    : n_(n_per_axis), p_max_(p_max), mass_(mass), blocks_(blocks) {
  if (n_per_axis < 8 || n_per_axis % 2 != 0)
    throw GridError("n_per_axis must be even and >= 8, got " + std::to_string(n_per_axis));
  if (!(p_max > 0.0) || !std::isfinite(p_max)) throw GridError("p_max must be positive");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw GridError("mass must be nonnegative");
  if (blocks != 1 && blocks != 2) throw GridError("blocks must be 1 or 2");
  h_ = 2.0 * p_max_ / n_;
  nodes_ = static_cast<std::size_t>(n_) * n_ * n_;
  auto energy = std::make_shared<std::vector<double>>(nodes_);
  auto weight = std::make_shared<std::vector<double>>(nodes_);
  const double h3 = h_ * h_ * h_;
  for (std::size_t k = 0; k < nodes_; ++k) {
    const Vec3 p = momentum(k);
    const double e = std::sqrt(mass_ * mass_ + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    (*energy)[k] = e;
    (*weight)[k] = h3 / e;
  }
  energy_ = std::move(energy);
  weight_ = std::move(weight);
}

std::array<int, 3> MomentumGrid::ijk(std::size_t node) const {
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(node / (n * n)), static_cast<int>((node / n) % n),
          static_cast<int>(node % n)};
}

Vec3 MomentumGrid::momentum(std::size_t node) const {
  const auto c = ijk(node);
  return {coord(c[0]), coord(c[1]), coord(c[2])};
}

std::size_t MomentumGrid::stride(int axis) const {
  switch (axis) {
    case 0: return static_cast<std::size_t>(n_) * n_;
    case 1: return static_cast<std::size_t>(n_);
    case 2: return 1;
    default: throw GridError("axis must be 0, 1 or 2");
  }
}

MomentumGrid MomentumGrid::with_blocks(int blocks) const {
  MomentumGrid g = *this;
  if (blocks != 1 && blocks != 2) throw GridError("blocks must be 1 or 2");
  g.blocks_ = blocks;
  return g;
}

bool MomentumGrid::same_lattice(const MomentumGrid& o) const {
  return n_ == o.n_ && p_max_ == o.p_max_ && mass_ == o.mass_;
}

bool MomentumGrid::operator==(const MomentumGrid& o) const {
  return same_lattice(o) && blocks_ == o.blocks_;
}

std::string MomentumGrid::describe() const {
  std::ostringstream os;
  os << "n=" << n_ << " p_max=" << p_max_ << " mu=" << mass_ << " blocks=" << blocks_;
  return os.str();
}

MomentumGrid build_grid(int n_per_axis, double p_max, double mass, int blocks) {
  return MomentumGrid(n_per_axis, p_max, mass, blocks);
}

State::State(const MomentumGrid& grid) : grid_(grid), data_(grid.size()) {}

State::State(const MomentumGrid& grid, std::vector<cplx> amplitudes)
    : grid_(grid), data_(std::move(amplitudes)) {
  if (data_.size() != grid_.size()) throw GridError("amplitude count does not match grid");
}

std::span<cplx> State::block(int b) {
  return {data_.data() + b * grid_.node_count(), grid_.node_count()};
}

std::span<const cplx> State::block(int b) const {
  return {data_.data() + b * grid_.node_count(), grid_.node_count()};
}

void require_same_grid(const State& a, const State& b) {
  if (!(a.grid() == b.grid()))
    throw GridError("grid mismatch: " + a.grid().describe() + " vs " + b.grid().describe());
}

State& State::operator+=(const State& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

State& State::operator-=(const State& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

State& State::operator*=(cplx f) {
  for (auto& v : data_) v *= f;
  return *this;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(cplx f, State a) { return a *= f; }

cplx inner_product(const State& phi, const State& psi) {
  require_same_grid(phi, psi);
  const auto& g = phi.grid();
  const auto& w = g.weights();
  cplx acc = 0.0;
  for (int b = 0; b < g.blocks(); ++b) {
    const auto x = phi.block(b);
    const auto y = psi.block(b);
    for (std::size_t k = 0; k < g.node_count(); ++k) acc += std::conj(x[k]) * y[k] * w[k];
  }
  return acc;
}

double norm(const State& psi) {
  const auto& g = psi.grid();
  const auto& w = g.weights();
  double acc = 0.0;
  for (int b = 0; b < g.blocks(); ++b) {
    const auto y = psi.block(b);
    for (std::size_t k = 0; k < g.node_count(); ++k) acc += std::norm(y[k]) * w[k];
  }
  return std::sqrt(acc);
}

State normalized(State psi) {
  const double nr = norm(psi);
  if (!(nr > 0.0)) throw GridError("cannot normalize the zero state");
  psi *= 1.0 / nr;
  return psi;
}

namespace {

// One line of samples f[0..n-1] at stride s; writes the derivative times h.
void diff_line(const cplx* f, cplx* g, int n, std::size_t s, int order) {
  auto F = [&](int i) { return f[i * s]; };
  if (order == 2) {
    g[0] = (-3.0 * F(0) + 4.0 * F(1) - F(2)) / 2.0;
    for (int i = 1; i < n - 1; ++i) g[i * s] = (F(i + 1) - F(i - 1)) / 2.0;
    g[(n - 1) * s] = -(-3.0 * F(n - 1) + 4.0 * F(n - 2) - F(n - 3)) / 2.0;
    return;
  }
  g[0] = (-25.0 * F(0) + 48.0 * F(1) - 36.0 * F(2) + 16.0 * F(3) - 3.0 * F(4)) / 12.0;
  g[s] = (-3.0 * F(0) - 10.0 * F(1) + 18.0 * F(2) - 6.0 * F(3) + F(4)) / 12.0;
  for (int i = 2; i < n - 2; ++i)
    g[i * s] = (8.0 * (F(i + 1) - F(i - 1)) - (F(i + 2) - F(i - 2))) / 12.0;
  const int e = n - 1;
  g[(e - 1) * s] =
      -(-3.0 * F(e) - 10.0 * F(e - 1) + 18.0 * F(e - 2) - 6.0 * F(e - 3) + F(e - 4)) / 12.0;
  g[e * s] =
      -(-25.0 * F(e) + 48.0 * F(e - 1) - 36.0 * F(e - 2) + 16.0 * F(e - 3) - 3.0 * F(e - 4)) / 12.0;
}

}  // namespace

void derivative_into(const State& psi, int axis, int order, State& out) {
  if (order != 2 && order != 4) throw GridError("derivative order must be 2 or 4");
  const auto& g = psi.grid();
  if (!(out.grid() == g)) out = State(g);
  const int n = g.n();
  const std::size_t s = g.stride(axis);
  const double inv_h = 1.0 / g.spacing();
  const auto nn = static_cast<std::size_t>(n);
  for (int b = 0; b < g.blocks(); ++b) {
    const cplx* src = psi.block(b).data();
    cplx* dst = out.block(b).data();
    // Enumerate line starts: all nodes whose coordinate along `axis` is 0.
    for (std::size_t a = 0; a < nn; ++a) {
      for (std::size_t c = 0; c < nn; ++c) {
        std::size_t start = 0;
        switch (axis) {
          case 0: start = a * nn + c; break;
          case 1: start = a * nn * nn + c; break;
          default: start = (a * nn + c) * nn; break;
        }
        diff_line(src + start, dst + start, n, s, order);
      }
    }
  }
  out *= inv_h;
}

State derivative(const State& psi, int axis, int order) {
  State out(psi.grid());
  derivative_into(psi, axis, order, out);
  return out;
}

State parity(const State& psi) {
  const auto& g = psi.grid();
  State out(g);
  for (int b = 0; b < g.blocks(); ++b) {
    const auto x = psi.block(b);
    auto y = out.block(b);
    for (std::size_t k = 0; k < g.node_count(); ++k) y[k] = x[g.mirror(k)];
  }
  return out;
}

State conjugate(const State& psi) {
  State out = psi;
  for (auto& v : out.data()) v = std::conj(v);
  return out;
}

cplx packet_profile(const PacketSpec& spec, const Vec3& p) {
  auto one = [&](const Vec3& q) {
    double r2 = 0.0, phase = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double d = q[j] - spec.center[j];
      r2 += d * d;
      phase -= q[j] * spec.offset[j];
    }
    return std::exp(-r2 / (2.0 * spec.width * spec.width)) * std::polar(1.0, phase);
  };
  const cplx v = one(p);
  if (spec.symmetry == PacketSymmetry::none) return v;
  const cplx m = one(Vec3{-p[0], -p[1], -p[2]});
  return spec.symmetry == PacketSymmetry::even ? v + m : v - m;
}

void check_boundary_support(const MomentumGrid& grid, const PacketSpec& spec) {
  if (!(spec.width > 0.0)) throw BoundaryError("packet width must be positive");
  const auto& c = spec.center;
  const double r = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  const double reach = r + 3.0 * spec.width;
  if (!(reach < grid.p_max())) {
    std::ostringstream os;
    os << "packet violates boundary support: |center| + 3 width = " << reach
       << " >= p_max = " << grid.p_max();
    throw BoundaryError(os.str());
  }
}

namespace {

std::vector<cplx> effective_weights(const MomentumGrid& grid, const PacketSpec& spec) {
  std::vector<cplx> w = spec.block_weights;
  if (w.empty()) {
    w.assign(grid.blocks(), 0.0);
    w[0] = 1.0;
  }
  if (static_cast<int>(w.size()) != grid.blocks())
    throw GridError("block weight count does not match grid blocks");
  return w;
}

}  // namespace

double packet_normalization(const MomentumGrid& grid, const PacketSpec& spec) {
  check_boundary_support(grid, spec);
  const auto w = effective_weights(grid, spec);
  double wsum = 0.0;
  for (const auto& x : w) wsum += std::norm(x);
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k)
    acc += std::norm(packet_profile(spec, grid.momentum(k))) * grid.weight(k);
  acc *= wsum;
  if (!(acc > 0.0)) throw GridError("degenerate packet (zero norm)");
  return 1.0 / std::sqrt(acc);
}

State gaussian_packet(const MomentumGrid& grid, const PacketSpec& spec) {
  const double c = packet_normalization(grid, spec);
  const auto w = effective_weights(grid, spec);
  State s(grid);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const cplx v = c * packet_profile(spec, grid.momentum(k));
    for (int b = 0; b < grid.blocks(); ++b) s.at(b, k) = w[b] * v;
  }
  return s;
}

State gaussian_packet(const MomentumGrid& grid, const Vec3& center, double width,
                      const std::vector<cplx>& block_weights) {
  PacketSpec spec;
  spec.center = center;
  spec.width = width;
  spec.block_weights = block_weights;
  return gaussian_packet(grid, spec);
}

cplx interpolate(const State& psi, int block, const Vec3& p) {
  const auto& g = psi.grid();
  const int n = g.n();
  const double h = g.spacing();
  std::array<int, 3> i0{};
  std::array<double, 3> t{};
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] + g.p_max()) / h - 0.5;
    if (u < 0.0 || u > n - 1) return 0.0;
    int i = static_cast<int>(std::floor(u));
    if (i >= n - 1) i = n - 2;
    i0[a] = i;
    t[a] = u - i;
  }
  const auto blk = psi.block(block);
  cplx acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    double wgt = 1.0;
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      const int bit = (c >> a) & 1;
      idx[a] = i0[a] + bit;
      wgt *= bit ? t[a] : 1.0 - t[a];
    }
    acc += wgt * blk[g.index(idx[0], idx[1], idx[2])];
  }
  return acc;
}

}  // namespace relqm
