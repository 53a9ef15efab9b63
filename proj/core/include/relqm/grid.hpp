#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relqm {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

/// Raised for invalid grid parameters or mismatched grids.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a packet violates the boundary-support rule.
class BoundaryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cell-centred cubic lattice over momentum space with the weight
/// h^3/p0 of the invariant measure d^3p/p0.
///
/// Node coordinates are -p_max + (i + 1/2) h on every axis, so no node
/// lies on a coordinate plane and p -> -p permutes the nodes. Nodes are
/// enumerated lexicographically with axis 0 slowest.
class MomentumGrid {
 public:
  MomentumGrid(int n_per_axis, double p_max, double mass, int blocks = 1);

  int n() const { return n_; }
  double p_max() const { return p_max_; }
  double spacing() const { return h_; }
  double mass() const { return mass_; }
  int blocks() const { return blocks_; }
  int fiber_dim() const { return 1; }

  std::size_t node_count() const { return nodes_; }
  /// Total amplitude count: blocks * fiber_dim * node_count.
  std::size_t size() const { return nodes_ * static_cast<std::size_t>(blocks_); }

  double coord(int i) const { return -p_max_ + (i + 0.5) * h_; }
  std::size_t index(int i0, int i1, int i2) const {
    return (static_cast<std::size_t>(i0) * n_ + i1) * n_ + i2;
  }
  std::array<int, 3> ijk(std::size_t node) const;
  Vec3 momentum(std::size_t node) const;
  /// p0 = sqrt(mu^2 + |p|^2) at a node.
  double energy(std::size_t node) const { return (*energy_)[node]; }
  /// Quadrature weight h^3 / p0.
  double weight(std::size_t node) const { return (*weight_)[node]; }
  /// Node holding -p.
  std::size_t mirror(std::size_t node) const { return nodes_ - 1 - node; }
  /// Stride between neighbours along an axis.
  std::size_t stride(int axis) const;

  const std::vector<double>& energies() const { return *energy_; }
  const std::vector<double>& weights() const { return *weight_; }

  MomentumGrid with_blocks(int blocks) const;
  bool same_lattice(const MomentumGrid& other) const;
  bool operator==(const MomentumGrid& other) const;
  std::string describe() const;

 private:
  int n_;
  double p_max_;
  double h_;
  double mass_;
  int blocks_;
  std::size_t nodes_;
  std::shared_ptr<const std::vector<double>> energy_;
  std::shared_ptr<const std::vector<double>> weight_;
};

MomentumGrid build_grid(int n_per_axis, double p_max, double mass, int blocks = 1);

/// Discrete wavefunction: amplitudes of shape (blocks, fiber, nodes).
class State {
 public:
  explicit State(const MomentumGrid& grid);
  State(const MomentumGrid& grid, std::vector<cplx> amplitudes);

  const MomentumGrid& grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }
  std::span<cplx> block(int b);
  std::span<const cplx> block(int b) const;
  cplx& at(int b, std::size_t node) { return data_[b * grid_.node_count() + node]; }
  cplx at(int b, std::size_t node) const { return data_[b * grid_.node_count() + node]; }

  State& operator+=(const State& other);
  State& operator-=(const State& other);
  State& operator*=(cplx factor);

 private:
  MomentumGrid grid_;
  std::vector<cplx> data_;
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(cplx factor, State a);

void require_same_grid(const State& a, const State& b);

/// Sum over nodes and blocks of conj(phi) psi h^3/p0.
cplx inner_product(const State& phi, const State& psi);
double norm(const State& psi);
State normalized(State psi);

/// Finite-difference d/dp_axis, central in the interior, one-sided at
/// the two boundary layers. order is 2 or 4.
State derivative(const State& psi, int axis, int order = 4);
void derivative_into(const State& psi, int axis, int order, State& out);

/// (Upsilon psi)(p) = psi(-p).
State parity(const State& psi);
/// Complex conjugation, pointwise.
State conjugate(const State& psi);

/// Sample a function of momentum on every block with the given weights.
template <class F>
State sample(const MomentumGrid& grid, F&& f, const std::vector<cplx>& block_weights = {}) {
  State s(grid);
  for (int b = 0; b < grid.blocks(); ++b) {
    const cplx w = block_weights.empty() ? cplx(1.0) : block_weights.at(b);
    if (w == cplx(0.0)) continue;
    for (std::size_t k = 0; k < grid.node_count(); ++k) s.at(b, k) = w * cplx(f(grid.momentum(k)));
  }
  return s;
}

enum class PacketSymmetry { none, even, odd };

/// Gaussian packet exp(-|p - center|^2 / (2 width^2)) exp(-i p.offset),
/// optionally (anti)symmetrized under p -> -p.
struct PacketSpec {
  Vec3 center{0.0, 0.0, 0.0};
  double width = 1.0;
  Vec3 offset{0.0, 0.0, 0.0};
  std::vector<cplx> block_weights{};
  PacketSymmetry symmetry = PacketSymmetry::none;
};

/// Unnormalized profile of the packet at an arbitrary momentum.
cplx packet_profile(const PacketSpec& spec, const Vec3& p);
/// Throws BoundaryError unless |center| + 3 width < p_max.
void check_boundary_support(const MomentumGrid& grid, const PacketSpec& spec);
/// Normalized packet; block weights default to block 0 only.
State gaussian_packet(const MomentumGrid& grid, const PacketSpec& spec);
State gaussian_packet(const MomentumGrid& grid, const Vec3& center, double width,
                      const std::vector<cplx>& block_weights = {});
/// Normalization constant c such that c * packet_profile has unit dnu norm
/// on this grid for the given block weights.
double packet_normalization(const MomentumGrid& grid, const PacketSpec& spec);

/// Trilinear interpolation of one block at an arbitrary momentum; zero
/// outside the node hull.
cplx interpolate(const State& psi, int block, const Vec3& p);

}  // namespace relqm
