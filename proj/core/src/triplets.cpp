#include "relqm/triplets.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>

namespace relqm {

bool TripletClass::massive() const {
  return tag == TripletTag::massive_plus || tag == TripletTag::massive_minus ||
         tag == TripletTag::massive_pm_1 || tag == TripletTag::massive_pm_2;
}

bool TripletClass::two_block() const {
  return tag == TripletTag::massive_pm_1 || tag == TripletTag::massive_pm_2 ||
         tag == TripletTag::massless_pm;
}

void TripletClass::validate() const {
  if (massive() && !(mass > 0.0)) throw TripletError(to_string() + " requires mu > 0");
  if (!massive() && mass != 0.0) throw TripletError(to_string() + " requires mu = 0");
  if (tag != TripletTag::massless_pm && m != 0)
    throw TripletError("m is only meaningful for massless_pm");
  if (st_pair) {
    if (tag != TripletTag::massless_pm)
      throw TripletError("an inversion pair index is only meaningful for massless_pm");
    if (m != 0)
      throw UnavailableInSource("inversion pairs for massless_pm with m != 0 are unavailable in source");
    if (*st_pair < 1 || *st_pair > 3) throw TripletError("inversion pair index must be 1, 2 or 3");
  }
}

std::string tag_name(TripletTag tag) {
  switch (tag) {
    case TripletTag::massive_plus: return "massive_plus";
    case TripletTag::massive_minus: return "massive_minus";
    case TripletTag::massive_pm_1: return "massive_pm_1";
    case TripletTag::massive_pm_2: return "massive_pm_2";
    case TripletTag::massless_plus: return "massless_plus";
    case TripletTag::massless_minus: return "massless_minus";
    case TripletTag::massless_pm: return "massless_pm";
  }
  return "unknown";
}

std::string TripletClass::to_string() const {
  std::string s = tag_name(tag);
  if (tag == TripletTag::massless_pm) {
    s += ":m=" + std::to_string(m);
    if (st_pair) s += ",pair=" + std::to_string(*st_pair);
  }
  return s;
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int v = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw TripletError("invalid integer for " + std::string(what) + ": '" + std::string(text) + "'");
  return v;
}

}  // namespace

TripletClass TripletClass::parse(std::string_view text, double mass) {
  TripletClass c;
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::pair<std::string_view, TripletTag> table[] = {
      {"massive_plus", TripletTag::massive_plus},   {"massive_minus", TripletTag::massive_minus},
      {"massive_pm_1", TripletTag::massive_pm_1},   {"massive_pm_2", TripletTag::massive_pm_2},
      {"massless_plus", TripletTag::massless_plus}, {"massless_minus", TripletTag::massless_minus},
      {"massless_pm", TripletTag::massless_pm},
  };
  bool found = false;
  for (const auto& [name, tag] : table) {
    if (head == name) {
      c.tag = tag;
      found = true;
    }
  }
  if (!found) throw TripletError("unknown triplet class '" + std::string(text) + "'");
  c.mass = c.massive() ? mass : 0.0;
  if (colon != std::string_view::npos) {
    if (c.tag != TripletTag::massless_pm)
      throw TripletError("class '" + std::string(head) + "' takes no parameters");
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw TripletError("malformed class parameter '" + std::string(item) + "'");
      const auto key = item.substr(0, eq);
      const auto val = item.substr(eq + 1);
      if (key == "m") {
        c.m = parse_int(val, "m");
      } else if (key == "pair") {
        c.st_pair = parse_int(val, "pair");
      } else {
        throw TripletError("unknown class parameter '" + std::string(key) + "'");
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  c.validate();
  return c;
}

std::string to_string(SpectrumClass c) {
  switch (c) {
    case SpectrumClass::negative: return "NEGATIVE";
    case SpectrumClass::positive: return "POSITIVE";
    case SpectrumClass::both: return "BOTH";
  }
  return "UNKNOWN";
}

SpectrumClass predicted_spectrum(const TripletClass& cls) {
  switch (cls.tag) {
    case TripletTag::massive_plus:
    case TripletTag::massless_plus: return SpectrumClass::positive;
    case TripletTag::massive_minus:
    case TripletTag::massless_minus: return SpectrumClass::negative;
    default: return SpectrumClass::both;
  }
}

TransformerTriplet::TransformerTriplet(TripletClass cls, MomentumGrid grid, int order,
                                       ParticleOperator p0, std::array<ParticleOperator, 3> p,
                                       std::array<ParticleOperator, 3> j,
                                       std::array<ParticleOperator, 3> k,
                                       std::optional<ParticleOperator> s,
                                       std::optional<ParticleOperator> t)
    : cls_(std::move(cls)), grid_(std::move(grid)), order_(order), p0_(std::move(p0)),
      p_(std::move(p)), j_(std::move(j)), k_(std::move(k)), s_(std::move(s)), t_(std::move(t)) {
  signs_.assign(grid_.blocks(), 1.0);
  if (cls_.tag == TripletTag::massive_minus || cls_.tag == TripletTag::massless_minus) signs_[0] = -1.0;
  if (cls_.two_block()) signs_[1] = -1.0;
}

const ParticleOperator& TransformerTriplet::S() const {
  if (!s_) throw UnavailableInSource("space inversion for " + cls_.to_string() + " is unavailable in source");
  return *s_;
}

const ParticleOperator& TransformerTriplet::T() const {
  if (!t_) throw UnavailableInSource("time reversal for " + cls_.to_string() + " is unavailable in source");
  return *t_;
}

std::array<double, 3> helicity_rotation_symbol(int m, const Vec3& p, double p0) {
  const double rho2 = p[0] * p[0] + p[1] * p[1];
  const double c = 0.5 * m * p0 / rho2;
  return {c * p[0], c * p[1], 0.0};
}

std::array<double, 3> helicity_boost_symbol(int m, const Vec3& p) {
  const double rho2 = p[0] * p[0] + p[1] * p[1];
  const double c = 0.5 * m / rho2;
  return {-c * p[1] * p[2], c * p[2] * p[0], 0.0};
}

namespace {

// Per-node tables shared by the generator closures.
struct Tables {
  MomentumGrid grid;
  std::vector<double> sign;                 // per block
  std::array<std::vector<double>, 3> p;     // p_j per node
  std::vector<double> p0;                   // p0 per node
  std::array<std::vector<double>, 3> jj;    // helicity rotation symbol
  std::array<std::vector<double>, 3> kk;    // helicity boost symbol
  bool helicity = false;
};

ParticleOperator block_symbol_op(std::string label, std::shared_ptr<const Tables> t,
                                 std::function<double(const Tables&, int, std::size_t)> f) {
  std::vector<cplx> table(t->grid.size());
  const std::size_t nn = t->grid.node_count();
  for (int b = 0; b < t->grid.blocks(); ++b)
    for (std::size_t k = 0; k < nn; ++k) table[b * nn + k] = f(*t, b, k);
  return multiply_table(std::move(label), std::move(table), t->grid);
}

void require_grid(const State& psi, const Tables& t) {
  if (!(psi.grid() == t.grid)) throw GridError("generator applied on foreign grid");
}

// J_k = -i (p_l d_j - p_j d_l) + sign_b jj_k, with (j, k, l) cyclic.
ParticleOperator rotation_generator(int k, std::shared_ptr<const Tables> t, int order) {
  const int j = (k + 2) % 3;
  const int l = (k + 1) % 3;
  return ParticleOperator("J" + std::to_string(k + 1), Linearity::linear,
                          [t, j, k, l, order](const State& psi) {
                            require_grid(psi, *t);
                            const State dj = derivative(psi, j, order);
                            const State dl = derivative(psi, l, order);
                            State out(psi.grid());
                            const std::size_t nn = t->grid.node_count();
                            const cplx mi(0.0, -1.0);
                            for (int b = 0; b < t->grid.blocks(); ++b) {
                              const std::size_t o = b * nn;
                              const double s = t->sign[b];
                              for (std::size_t n = 0; n < nn; ++n) {
                                cplx v = mi * (t->p[l][n] * dj.data()[o + n] - t->p[j][n] * dl.data()[o + n]);
                                if (t->helicity) v += s * t->jj[k][n] * psi.data()[o + n];
                                out.data()[o + n] = v;
                              }
                            }
                            return out;
                          });
}

// K_j = sign_b i p0 d_j + kk_j.
ParticleOperator boost_generator(int j, std::shared_ptr<const Tables> t, int order) {
  return ParticleOperator("K" + std::to_string(j + 1), Linearity::linear,
                          [t, j, order](const State& psi) {
                            require_grid(psi, *t);
                            const State dj = derivative(psi, j, order);
                            State out(psi.grid());
                            const std::size_t nn = t->grid.node_count();
                            const cplx ii(0.0, 1.0);
                            for (int b = 0; b < t->grid.blocks(); ++b) {
                              const std::size_t o = b * nn;
                              const double s = t->sign[b];
                              for (std::size_t n = 0; n < nn; ++n) {
                                cplx v = ii * (s * t->p0[n]) * dj.data()[o + n];
                                if (t->helicity) v += t->kk[j][n] * psi.data()[o + n];
                                out.data()[o + n] = v;
                              }
                            }
                            return out;
                          });
}

}  // namespace

TransformerTriplet make_triplet(const TripletClass& cls, const MomentumGrid& grid, int order) {
  cls.validate();
  if (order != 2 && order != 4) throw TripletError("stencil order must be 2 or 4");
  if (grid.blocks() != cls.blocks())
    throw TripletError(cls.to_string() + " needs a grid with " + std::to_string(cls.blocks()) + " block(s)");
  if (cls.massive()) {
    if (!(grid.mass() > 0.0)) throw TripletError(cls.to_string() + " needs a grid with mu > 0");
    if (grid.mass() != cls.mass) throw TripletError("grid mass does not match class mass");
  } else if (grid.mass() != 0.0) {
    throw TripletError(cls.to_string() + " needs a grid with mu = 0");
  }

  auto t = std::make_shared<Tables>(Tables{grid, {}, {}, {}, {}, {}, false});
  t->sign.assign(grid.blocks(), 1.0);
  if (cls.tag == TripletTag::massive_minus || cls.tag == TripletTag::massless_minus) t->sign[0] = -1.0;
  if (cls.two_block()) t->sign[1] = -1.0;
  const std::size_t nn = grid.node_count();
  for (int j = 0; j < 3; ++j) {
    t->p[j].resize(nn);
    t->jj[j].assign(nn, 0.0);
    t->kk[j].assign(nn, 0.0);
  }
  t->p0 = grid.energies();
  t->helicity = cls.tag == TripletTag::massless_pm && cls.m != 0;
  for (std::size_t n = 0; n < nn; ++n) {
    const Vec3 p = grid.momentum(n);
    for (int j = 0; j < 3; ++j) t->p[j][n] = p[j];
    if (t->helicity) {
      const auto a = helicity_rotation_symbol(cls.m, p, t->p0[n]);
      const auto c = helicity_boost_symbol(cls.m, p);
      for (int j = 0; j < 3; ++j) {
        t->jj[j][n] = a[j];
        t->kk[j][n] = c[j];
      }
    }
  }
  std::shared_ptr<const Tables> ct = t;

  ParticleOperator p0 = block_symbol_op("P0", ct, [](const Tables& tb, int b, std::size_t n) {
    return tb.sign[b] * tb.p0[n];
  });
  std::array<ParticleOperator, 3> p = {
      block_symbol_op("P1", ct, [](const Tables& tb, int, std::size_t n) { return tb.p[0][n]; }),
      block_symbol_op("P2", ct, [](const Tables& tb, int, std::size_t n) { return tb.p[1][n]; }),
      block_symbol_op("P3", ct, [](const Tables& tb, int, std::size_t n) { return tb.p[2][n]; }),
  };
  std::array<ParticleOperator, 3> jgen = {rotation_generator(0, ct, order), rotation_generator(1, ct, order),
                                          rotation_generator(2, ct, order)};
  std::array<ParticleOperator, 3> kgen = {boost_generator(0, ct, order), boost_generator(1, ct, order),
                                          boost_generator(2, ct, order)};

  std::optional<ParticleOperator> s, tr;
  const ParticleOperator K = conjugation_op();
  const ParticleOperator Y = parity_op();
  switch (cls.tag) {
    case TripletTag::massive_plus:
    case TripletTag::massive_minus:
    case TripletTag::massless_plus:
    case TripletTag::massless_minus:
      s = Y.relabeled("S=Y");
      tr = compose(K, Y).relabeled("T=KY");
      break;
    case TripletTag::massive_pm_1:
      s = compose(swap_op(), K).relabeled("S=swap K");
      tr = compose(K, Y).relabeled("T=KY");
      break;
    case TripletTag::massive_pm_2:
      s = compose(swap_op(), K).relabeled("S=swap K");
      tr = swap_op().relabeled("T=swap");
      break;
    case TripletTag::massless_pm:
      if (cls.m == 0 && cls.st_pair) {
        switch (*cls.st_pair) {
          case 1:
            tr = swap_op().relabeled("T=swap");
            s = compose(K, swap_op()).relabeled("S=K swap");
            break;
          case 2:
            tr = swap_op().relabeled("T=swap");
            s = compose(Y, block_diag_op(1.0, -1.0)).relabeled("S=Y diag(1,-1)");
            break;
          default:
            tr = compose(compose(K, Y), swap_op()).relabeled("T=KY swap");
            s = compose(block_offdiag_op(1.0, -1.0), K).relabeled("S=offdiag(1,-1) K");
            break;
        }
      }
      break;
  }
  return TransformerTriplet(cls, grid, order, std::move(p0), std::move(p), std::move(jgen),
                            std::move(kgen), std::move(s), std::move(tr));
}

State restrict_to_block(const State& psi, int block) {
  State out(psi.grid());
  const auto src = psi.block(block);
  std::copy(src.begin(), src.end(), out.block(block).begin());
  return out;
}

std::vector<double> helicity_expectation(const TransformerTriplet& tr, const State& psi) {
  if (tr.cls().massive()) throw TripletError("helicity check applies to massless triplets only");
  const auto& g = tr.grid();
  std::vector<double> out;
  for (int b = 0; b < g.blocks(); ++b) {
    const State pb = restrict_to_block(psi, b);
    const double nb = norm(pb);
    if (!(nb > 0.0)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    State acc(g);
    for (int j = 0; j < 3; ++j) {
      State q = tr.P(j)(pb);
      const auto& e = g.energies();
      for (int c = 0; c < g.blocks(); ++c) {
        auto blk = q.block(c);
        for (std::size_t n = 0; n < g.node_count(); ++n) blk[n] /= e[n];
      }
      acc += tr.J(j)(q);
    }
    out.push_back(inner_product(pb, acc).real() / (nb * nb));
  }
  return out;
}

ResidualStats mass_shell_residual(const TransformerTriplet& tr, const SampleSet& samples) {
  const double mu2 = tr.grid().mass() * tr.grid().mass();
  return defect_residual(
      [&](const State& psi) {
        State d = tr.P0()(tr.P0()(psi));
        for (int j = 0; j < 3; ++j) d -= tr.P(j)(tr.P(j)(psi));
        d -= cplx(mu2) * psi;
        return d;
      },
      samples);
}

SpectrumResult spectrum_probe(const TransformerTriplet& tr, const SampleSet& samples, double eps) {
  const auto& g = tr.grid();
  const double mu = g.mass();
  SpectrumResult res{SpectrumClass::positive, {}};
  bool any_pos = false, any_neg = false;
  for (const auto& s : samples) {
    for (int b = 0; b < g.blocks(); ++b) {
      const State pb = restrict_to_block(s.state, b);
      const double nb = norm(pb);
      if (!(nb > 1e-12)) continue;
      const double e = inner_product(pb, tr.P0()(pb)).real() / (nb * nb);
      res.probes.push_back({s.description, b + 1, e});
      if (e >= mu * (1.0 - eps) && e > 0.0) {
        any_pos = true;
      } else if (e <= -mu * (1.0 - eps) && e < 0.0) {
        any_neg = true;
      } else {
        throw std::runtime_error("probe energy " + std::to_string(e) + " lies inside the mass gap");
      }
    }
  }
  if (any_pos && any_neg) {
    res.verdict = SpectrumClass::both;
  } else if (any_neg) {
    res.verdict = SpectrumClass::negative;
  } else if (any_pos) {
    res.verdict = SpectrumClass::positive;
  } else {
    throw std::runtime_error("spectrum probe received no nonzero samples");
  }
  return res;
}

SpectrumClass spectrum_class(const TransformerTriplet& tr, const SampleSet& samples, double eps) {
  return spectrum_probe(tr, samples, eps).verdict;
}

}  // namespace relqm
