#include "relqm/kgmap.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "relqm/position.hpp"

namespace relqm {

PositionGrid::PositionGrid(const MomentumGrid& momentum)
    : momentum_(momentum), n_(momentum.n()) {
  h_ = 2.0 * std::numbers::pi / (n_ * momentum.spacing());
  x_max_ = 0.5 * n_ * h_;
}

Vec3 PositionGrid::position(std::size_t node) const {
  const auto c = momentum_.ijk(node);
  return {coord(c[0]), coord(c[1]), coord(c[2])};
}

KGState::KGState(const PositionGrid& grid) : grid_(grid) {
  for (auto& f : fields_) f.assign(grid.node_count(), 0.0);
}

KGState& KGState::operator+=(const KGState& o) {
  for (int b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < fields_[b].size(); ++i) fields_[b][i] += o.fields_[b][i];
  return *this;
}

KGState& KGState::operator-=(const KGState& o) {
  for (int b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < fields_[b].size(); ++i) fields_[b][i] -= o.fields_[b][i];
  return *this;
}

KGState& KGState::operator*=(cplx c) {
  for (auto& f : fields_)
    for (auto& v : f) v *= c;
  return *this;
}

KGState operator+(KGState a, const KGState& b) { return a += b; }
KGState operator-(KGState a, const KGState& b) { return a -= b; }
KGState operator*(cplx c, KGState a) { return a *= c; }

cplx inner_product(const KGState& a, const KGState& b) {
  const double h = a.grid().spacing();
  cplx acc = 0.0;
  for (int blk = 0; blk < 2; ++blk)
    for (std::size_t i = 0; i < a.field(blk).size(); ++i) acc += std::conj(a.field(blk)[i]) * b.field(blk)[i];
  return acc * (h * h * h);
}

double norm(const KGState& chi) { return std::sqrt(std::max(0.0, inner_product(chi, chi).real())); }

namespace {

// Cached FFTW plans keyed by (n, direction). Planning is serialized; the
// plans are executed with the new-array interface, which is thread-safe.
struct PlanCache {
  std::mutex mutex;
  std::map<std::pair<int, int>, fftw_plan> plans;
  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

fftw_plan get_plan(int n, int sign) {
  auto& cache = plan_cache();
  std::lock_guard<std::mutex> lock(cache.mutex);
  const auto key = std::make_pair(n, sign);
  auto it = cache.plans.find(key);
  if (it != cache.plans.end()) return it->second;
  const std::size_t count = static_cast<std::size_t>(n) * n * n;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
  fftw_plan plan = fftw_plan_dft_3d(n, n, n, buf, buf, sign, FFTW_ESTIMATE);
  fftw_free(buf);
  cache.plans.emplace(key, plan);
  return plan;
}

// Phases e^{i pi r / d} for the centred pairing, reduced exactly.
cplx half_turn(long long r, long long d) {
  const long long m = ((r % (2 * d)) + 2 * d) % (2 * d);
  return std::polar(1.0, std::numbers::pi * static_cast<double>(m) / static_cast<double>(d));
}

struct Phases {
  std::vector<cplx> pre;   // e^{i 2 pi a k / n}, per axis index
  std::vector<cplx> post;  // e^{i 2 pi (a j + a^2) / n}, per axis index
};

Phases phases(int n) {
  // a = -n/2 + 1/2, so 2a = 1 - n is an odd integer.
  const long long two_a = 1 - n;
  Phases p;
  p.pre.resize(n);
  p.post.resize(n);
  for (int k = 0; k < n; ++k) {
    // 2 pi a k / n = pi (2a k) / n
    p.pre[k] = half_turn(two_a * k, n);
    // 2 pi (a j + a^2)/n = pi (4 a j + (2a)^2) / (2n)
    p.post[k] = half_turn(2 * two_a * k + two_a * two_a, 2 * n);
  }
  return p;
}

// Centred transform of one field; forward = momentum -> position.
void centred_transform(const cplx* in, cplx* out, int n, double hp, bool to_position) {
  const std::size_t count = static_cast<std::size_t>(n) * n * n;
  const Phases ph = phases(n);
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
  auto* data = reinterpret_cast<cplx*>(buf);
  const double c1 = hp / std::sqrt(2.0 * std::numbers::pi);
  const double c3 = c1 * c1 * c1;
  const auto nn = static_cast<std::size_t>(n);
  for (std::size_t i0 = 0; i0 < nn; ++i0)
    for (std::size_t i1 = 0; i1 < nn; ++i1)
      for (std::size_t i2 = 0; i2 < nn; ++i2) {
        const std::size_t idx = (i0 * nn + i1) * nn + i2;
        const cplx f = to_position ? ph.pre[i0] * ph.pre[i1] * ph.pre[i2]
                                   : std::conj(ph.post[i0] * ph.post[i1] * ph.post[i2]);
        data[idx] = f * in[idx];
      }
  fftw_execute_dft(get_plan(n, to_position ? FFTW_BACKWARD : FFTW_FORWARD), buf, buf);
  const double scale = to_position ? c3 : 1.0 / (c3 * static_cast<double>(count));
  for (std::size_t i0 = 0; i0 < nn; ++i0)
    for (std::size_t i1 = 0; i1 < nn; ++i1)
      for (std::size_t i2 = 0; i2 < nn; ++i2) {
        const std::size_t idx = (i0 * nn + i1) * nn + i2;
        const cplx f = to_position ? ph.post[i0] * ph.post[i1] * ph.post[i2]
                                   : std::conj(ph.pre[i0] * ph.pre[i1] * ph.pre[i2]);
        out[idx] = scale * f * data[idx];
      }
  fftw_free(buf);
}

void require_kg_grid(const MomentumGrid& g) {
  if (!(g.mass() > 0.0)) throw KgError("the Klein-Gordon map needs mu > 0");
  if (g.blocks() != 2) throw KgError("the Klein-Gordon map needs a two-block state");
}

}  // namespace

KGState fourier_to_position(const State& flat) {
  require_kg_grid(flat.grid());
  const PositionGrid pg(flat.grid());
  KGState out(pg);
  for (int b = 0; b < 2; ++b)
    centred_transform(flat.block(b).data(), out.field(b).data(), pg.n(), flat.grid().spacing(), true);
  return out;
}

State fourier_to_momentum(const KGState& chi) {
  const MomentumGrid& g = chi.grid().momentum_grid();
  State out(g);
  for (int b = 0; b < 2; ++b)
    centred_transform(chi.field(b).data(), out.block(b).data(), g.n(), g.spacing(), false);
  return out;
}

KGState kg_forward(const State& psi) {
  require_kg_grid(psi.grid());
  const auto& g = psi.grid();
  State flat = psi;
  for (int b = 0; b < 2; ++b) {
    auto blk = flat.block(b);
    for (std::size_t n = 0; n < g.node_count(); ++n) blk[n] /= std::sqrt(g.energy(n));
  }
  return fourier_to_position(flat);
}

State kg_backward(const KGState& chi) {
  State psi = fourier_to_momentum(chi);
  const auto& g = psi.grid();
  for (int b = 0; b < 2; ++b) {
    auto blk = psi.block(b);
    for (std::size_t n = 0; n < g.node_count(); ++n) blk[n] *= std::sqrt(g.energy(n));
  }
  return psi;
}

std::vector<double> kg_density(const KGState& chi) {
  std::vector<double> rho(chi.grid().node_count());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(chi.field(0)[i]) + std::norm(chi.field(1)[i]);
  return rho;
}

double integrate_density(const std::vector<double>& rho, const PositionGrid& grid) {
  const double h = grid.spacing();
  double acc = 0.0;
  for (double r : rho) acc += r;
  return acc * h * h * h;
}

KGState spectral_multiply(const KGState& chi, const std::function<cplx(int, const Vec3&)>& symbol) {
  State f = fourier_to_momentum(chi);
  const auto& g = f.grid();
  for (int b = 0; b < 2; ++b) {
    auto blk = f.block(b);
    for (std::size_t n = 0; n < g.node_count(); ++n) blk[n] *= symbol(b, g.momentum(n));
  }
  return fourier_to_position(f);
}

KGState kg_evolve(const KGState& chi, double t) {
  const double mu = chi.grid().momentum_grid().mass();
  return spectral_multiply(chi, [mu, t](int b, const Vec3& p) {
    const double e = std::sqrt(mu * mu + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    const double s = b == 0 ? 1.0 : -1.0;
    return std::polar(1.0, -s * e * t);
  });
}

namespace {

KGState multiply_position(const KGState& chi, int axis) {
  KGState out = chi;
  const auto& pg = chi.grid();
  for (int b = 0; b < 2; ++b)
    for (std::size_t n = 0; n < pg.node_count(); ++n) out.field(b)[n] *= pg.position(n)[axis];
  return out;
}

KGState block_sign(KGState chi) {
  for (auto& v : chi.field(1)) v = -v;
  return chi;
}

KGState conj_field(KGState chi) {
  for (int b = 0; b < 2; ++b)
    for (auto& v : chi.field(b)) v = std::conj(v);
  return chi;
}

KGState parity_field(const KGState& chi) {
  KGState out(chi.grid());
  const std::size_t n = chi.grid().node_count();
  for (int b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < n; ++i) out.field(b)[i] = chi.field(b)[n - 1 - i];
  return out;
}

KGState swap_field(const KGState& chi) {
  KGState out(chi.grid());
  out.field(0) = chi.field(1);
  out.field(1) = chi.field(0);
  return out;
}

}  // namespace

KgOperators kg_operators(const PositionGrid& grid, double mass, int pair) {
  if (!(mass > 0.0)) throw KgError("hatted operators need mu > 0");
  if (pair != 1 && pair != 2) throw KgError("inversion pair must be 1 or 2");
  (void)grid;
  const double mu = mass;
  auto energy = [mu](const Vec3& p) { return std::sqrt(mu * mu + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); };
  auto deriv = [](const KGState& chi, int j) {
    return spectral_multiply(chi, [j](int, const Vec3& p) { return cplx(0.0, p[j]); });
  };
  auto root = [energy](const KGState& chi) {
    return spectral_multiply(chi, [energy](int, const Vec3& p) { return cplx(energy(p)); });
  };
  KgOperators ops;
  ops.P0 = {"P0^", Linearity::linear, [energy](const KGState& chi) {
              return spectral_multiply(chi, [energy](int b, const Vec3& p) {
                return cplx(b == 0 ? energy(p) : -energy(p));
              });
            }};
  for (int j = 0; j < 3; ++j) {
    const std::string s = std::to_string(j + 1);
    ops.P[j] = {"P" + s + "^", Linearity::linear, [j](const KGState& chi) {
                  return spectral_multiply(chi, [j](int, const Vec3& p) { return cplx(p[j]); });
                }};
    ops.Q[j] = {"Q" + s + "^", Linearity::linear, [j](const KGState& chi) { return multiply_position(chi, j); }};
    const int a = (j + 2) % 3;
    const int c = (j + 1) % 3;
    // J_k = -i (x_l d_j - x_j d_l), (j, k, l) cyclic.
    ops.J[j] = {"J" + s + "^", Linearity::linear, [a, c, deriv](const KGState& chi) {
                  KGState t = multiply_position(deriv(chi, a), c) - multiply_position(deriv(chi, c), a);
                  return cplx(0.0, -1.0) * t;
                }};
    ops.K[j] = {"K" + s + "^", Linearity::linear, [j, root](const KGState& chi) {
                  KGState t = multiply_position(root(chi), j) + root(multiply_position(chi, j));
                  return block_sign(0.5 * t);
                }};
  }
  ops.S = {"S^=KY swap", Linearity::conjugate_linear,
           [](const KGState& chi) { return conj_field(parity_field(swap_field(chi))); }};
  if (pair == 1) {
    ops.T = {"T^=K", Linearity::conjugate_linear, [](const KGState& chi) { return conj_field(chi); }};
  } else {
    ops.T = {"T^=swap", Linearity::linear, [](const KGState& chi) { return swap_field(chi); }};
  }
  return ops;
}

double calibrate_fft_tolerance(const MomentumGrid& grid, double factor, double floor) {
  require_kg_grid(grid);
  const double w = grid.p_max() / 5.0;
  const State g = gaussian_packet(grid, Vec3{0.0, 0.0, 0.0}, w, {1.0, 1.0});
  const State back = kg_backward(kg_forward(g));
  return std::max(floor, factor * norm(back - g));
}

std::vector<KgEquivalence> kg_equivalence_residual(const TransformerTriplet& tr, const SampleSet& samples) {
  const auto& g = tr.grid();
  require_kg_grid(g);
  int pair = 0;
  if (tr.cls().tag == TripletTag::massive_pm_1) pair = 1;
  if (tr.cls().tag == TripletTag::massive_pm_2) pair = 2;
  if (pair == 0) throw KgError("KG equivalence is defined for massive_pm_1 and massive_pm_2");
  const PositionGrid pg(g);
  const KgOperators hat = kg_operators(pg, g.mass(), pair);
  const PositionOperator q = newton_wigner(g, tr.stencil_order());

  auto measure = [&](const std::string& name, const ParticleOperator& op, const KgOperator& h) {
    auto values = parallel_values(samples.size(), [&](std::size_t i) {
      const State& psi = samples[i].state;
      const KGState lhs = kg_forward(op(psi));
      const KGState rhs = h(kg_forward(psi));
      return norm(lhs - rhs) / norm(psi);
    });
    return KgEquivalence{name, make_stats(samples, std::move(values))};
  };
  std::vector<KgEquivalence> out;
  out.push_back(measure("P0", tr.P0(), hat.P0));
  for (int j = 0; j < 3; ++j) out.push_back(measure("P" + std::to_string(j + 1), tr.P(j), hat.P[j]));
  for (int j = 0; j < 3; ++j) out.push_back(measure("J" + std::to_string(j + 1), tr.J(j), hat.J[j]));
  for (int j = 0; j < 3; ++j) out.push_back(measure("K" + std::to_string(j + 1), tr.K(j), hat.K[j]));
  for (int j = 0; j < 3; ++j) out.push_back(measure("Q" + std::to_string(j + 1), q.Q[j], hat.Q[j]));
  out.push_back(measure("S", tr.S(), hat.S));
  out.push_back(measure("T", tr.T(), hat.T));
  return out;
}

void write_density_slice_csv(const std::vector<double>& rho, const PositionGrid& grid, const std::string& path) {
  const int n = grid.n();
  const int k = n / 2;  // x3 = +h_x/2, the node plane nearest 0
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "x1,x2,rho\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = (static_cast<std::size_t>(i) * n + j) * n + k;
      os << grid.coord(i) << ',' << grid.coord(j) << ',' << rho[idx] << '\n';
    }
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << os.str();
    if (!f) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace relqm
