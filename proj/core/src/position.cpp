#include "relqm/position.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

namespace relqm {

namespace {

std::string idx(int j) { return std::to_string(j + 1); }

int levi_civita(int j, int k, int l) {
  if (j == k || k == l || j == l) return 0;
  return ((j + 1) % 3 == k) ? 1 : -1;
}

int third(int j, int k) { return 3 - j - k; }

// Per-block sign pattern of the correction: +Delta on block 1, -Delta on block 2.
double block_pattern(int b) { return b == 0 ? 1.0 : -1.0; }

RelationResidual aggregate(std::string name, const SampleSet& samples,
                           const std::vector<std::pair<std::string, std::function<State(const State&)>>>& parts) {
  RelationResidual r;
  r.name = std::move(name);
  std::vector<double> per_sample(samples.size(), 0.0);
  for (const auto& [label, defect] : parts) {
    const ResidualStats st = defect_residual(defect, samples);
    r.components[label] = st.max_relative_residual;
    for (std::size_t i = 0; i < samples.size(); ++i) per_sample[i] = std::max(per_sample[i], st.values[i]);
  }
  r.stats = make_stats(samples, std::move(per_sample));
  return r;
}

}  // namespace

PositionOperator newton_wigner(const MomentumGrid& grid, int order, NwForm form) {
  const std::size_t nn = grid.node_count();
  auto root = std::make_shared<std::vector<double>>(nn);
  auto inv_root = std::make_shared<std::vector<double>>(nn);
  auto corr = std::make_shared<std::array<std::vector<double>, 3>>();
  for (auto& c : *corr) c.resize(nn);
  for (std::size_t n = 0; n < nn; ++n) {
    const double e = grid.energy(n);
    (*root)[n] = std::sqrt(e);
    (*inv_root)[n] = 1.0 / std::sqrt(e);
    const Vec3 p = grid.momentum(n);
    for (int j = 0; j < 3; ++j) (*corr)[j][n] = p[j] / (2.0 * e * e);
  }
  auto make = [&](int j) {
    if (form == NwForm::factored) {
      return ParticleOperator("F" + idx(j), Linearity::linear, [grid, root, inv_root, j, order](const State& psi) {
        if (!psi.grid().same_lattice(grid)) throw GridError("position operator applied on foreign grid");
        const std::size_t n = grid.node_count();
        State flat = psi;
        for (int b = 0; b < psi.grid().blocks(); ++b) {
          auto blk = flat.block(b);
          for (std::size_t k = 0; k < n; ++k) blk[k] *= (*inv_root)[k];
        }
        State d = derivative(flat, j, order);
        const cplx ii(0.0, 1.0);
        for (int b = 0; b < psi.grid().blocks(); ++b) {
          auto blk = d.block(b);
          for (std::size_t k = 0; k < n; ++k) blk[k] *= ii * (*root)[k];
        }
        return d;
      });
    }
    return ParticleOperator("F" + idx(j), Linearity::linear, [grid, corr, j, order](const State& psi) {
      if (!psi.grid().same_lattice(grid)) throw GridError("position operator applied on foreign grid");
      const std::size_t n = grid.node_count();
      State d = derivative(psi, j, order);
      const cplx ii(0.0, 1.0);
      for (int b = 0; b < psi.grid().blocks(); ++b) {
        auto out = d.block(b);
        const auto in = psi.block(b);
        for (std::size_t k = 0; k < n; ++k) out[k] = ii * (out[k] - (*corr)[j][k] * in[k]);
      }
      return d;
    });
  };
  return PositionOperator{{make(0), make(1), make(2)}, grid.blocks(), form};
}

ParticleOperator uncorrected_position(int axis, int order) {
  return ParticleOperator("i d" + idx(axis), Linearity::linear, [axis, order](const State& psi) {
    return cplx(0.0, 1.0) * derivative(psi, axis, order);
  });
}

CovarianceResiduals covariance_residuals(const TransformerTriplet& tr, const PositionOperator& q,
                                         const SampleSet& samples) {
  using Part = std::pair<std::string, std::function<State(const State&)>>;
  CovarianceResiduals out;
  const cplx ii(0.0, 1.0);

  std::vector<Part> ccr;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      ccr.emplace_back("[Q" + idx(j) + ",P" + idx(k) + "]", [&, j, k](const State& psi) {
        State d = q.Q[j](tr.P(k)(psi)) - tr.P(k)(q.Q[j](psi));
        if (j == k) d -= ii * psi;
        return d;
      });
  out.ccr = aggregate("[Q_j,P_k] = i delta_jk", samples, ccr);

  std::vector<Part> rot;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      rot.emplace_back("[J" + idx(j) + ",Q" + idx(k) + "]", [&, j, k](const State& psi) {
        State d = tr.J(j)(q.Q[k](psi)) - q.Q[k](tr.J(j)(psi));
        if (j != k) {
          const int l = third(j, k);
          d -= cplx(0.0, levi_civita(j, k, l)) * q.Q[l](psi);
        }
        return d;
      });
  out.rotation = aggregate("[J_j,Q_k] = i eps_jkl Q_l", samples, rot);

  std::vector<Part> comm;
  for (int j = 0; j < 3; ++j)
    for (int k = j + 1; k < 3; ++k)
      comm.emplace_back("[Q" + idx(j) + ",Q" + idx(k) + "]", [&, j, k](const State& psi) {
        return q.Q[j](q.Q[k](psi)) - q.Q[k](q.Q[j](psi));
      });
  out.commutativity = aggregate("[Q_j,Q_k] = 0", samples, comm);

  out.has_inversions = tr.has_inversions();
  if (out.has_inversions) {
    std::vector<Part> trv, spv;
    for (int j = 0; j < 3; ++j) {
      trv.emplace_back("TQ" + idx(j), [&, j](const State& psi) {
        return tr.T()(q.Q[j](psi)) - q.Q[j](tr.T()(psi));
      });
      spv.emplace_back("SQ" + idx(j), [&, j](const State& psi) {
        return tr.S()(q.Q[j](psi)) + q.Q[j](tr.S()(psi));
      });
    }
    out.time_reversal = aggregate("T Q = Q T", samples, trv);
    out.space_inversion = aggregate("S Q = -Q S", samples, spv);
  }
  return out;
}

RelationResidual velocity_residual(const TransformerTriplet& tr, const PositionOperator& q,
                                   const SampleSet& samples) {
  using Part = std::pair<std::string, std::function<State(const State&)>>;
  const auto& g = tr.grid();
  std::vector<Part> parts;
  for (int j = 0; j < 3; ++j) {
    parts.emplace_back("i[P0,Q" + idx(j) + "]", [&, j](const State& psi) {
      State d = cplx(0.0, 1.0) * (tr.P0()(q.Q[j](psi)) - q.Q[j](tr.P0()(psi)));
      for (int b = 0; b < g.blocks(); ++b) {
        const double s = tr.energy_signs()[b];
        auto out = d.block(b);
        const auto in = psi.block(b);
        for (std::size_t n = 0; n < g.node_count(); ++n)
          out[n] -= s * g.momentum(n)[j] / g.energy(n) * in[n];
      }
      return d;
    });
  }
  return aggregate("i[P0,Q_j] = sign p_j/p0", samples, parts);
}

ParticleOperator kinetic_energy(const MomentumGrid& grid) {
  const double mu = grid.mass();
  return multiply_op("E_kin", grid, [&grid, mu](int, const Vec3& p) -> cplx {
    const double e = std::sqrt(mu * mu + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (mu == 0.0) return e;
    double v2 = 0.0;
    for (int j = 0; j < 3; ++j) v2 += (p[j] / e) * (p[j] / e);
    (void)grid;
    return mu / std::sqrt(1.0 - v2);
  });
}

ResidualStats kinetic_energy_residual(const MomentumGrid& grid, const SampleSet& samples) {
  const ParticleOperator ekin = kinetic_energy(grid);
  const ParticleOperator p0 = multiply_op("p0", grid, [&grid](int, const Vec3& p) -> cplx {
    return std::sqrt(grid.mass() * grid.mass() + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  });
  return identity_residual(ekin, p0, samples);
}

std::vector<CorrectionTerm> correction_basis() {
  std::vector<CorrectionTerm> out;
  const char* names[] = {"p1", "p2", "p3"};
  for (int c = 0; c < 3; ++c) {
    const std::string comp = "e" + idx(c) + "*";
    for (int a = 0; a < 3; ++a)
      out.push_back({comp + names[a] + "/|p|^2", c, [a](const Vec3& p) {
                       return p[a] / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                     }});
    for (int a = 0; a < 2; ++a)
      out.push_back({comp + names[a] + "/rho^2", c, [a](const Vec3& p) {
                       return p[a] / (p[0] * p[0] + p[1] * p[1]);
                     }});
    for (int a = 0; a < 2; ++a)
      out.push_back({comp + names[a] + "*p3/(|p| rho^2)", c, [a](const Vec3& p) {
                       const double r2 = p[0] * p[0] + p[1] * p[1];
                       return p[a] * p[2] / (std::sqrt(r2 + p[2] * p[2]) * r2);
                     }});
    for (int a = 0; a < 2; ++a)
      out.push_back({comp + names[a] + "*p3^2/(|p|^2 rho^2)", c, [a](const Vec3& p) {
                       const double r2 = p[0] * p[0] + p[1] * p[1];
                       return p[a] * p[2] * p[2] / ((r2 + p[2] * p[2]) * r2);
                     }});
  }
  return out;
}

namespace {

// Multiplication by pattern_b * symbol on every block.
State apply_symbol(const std::vector<double>& sym, const State& psi) {
  const auto& g = psi.grid();
  State out = psi;
  for (int b = 0; b < g.blocks(); ++b) {
    const double s = block_pattern(b);
    auto blk = out.block(b);
    for (std::size_t n = 0; n < g.node_count(); ++n) blk[n] *= s * sym[n];
  }
  return out;
}

ParticleOperator corrected_component(const ParticleOperator& q, std::shared_ptr<const std::vector<double>> sym,
                                     const std::string& label) {
  return ParticleOperator(label, Linearity::linear, [q, sym](const State& psi) {
    return q(psi) + apply_symbol(*sym, psi);
  });
}

// Residual state of one relation component for a given Q, and its
// derivative with respect to one basis coefficient.
struct Component {
  std::string label;
  CorrectionRelation relation;
  int j, k;
};

std::vector<Component> components_for(const std::vector<CorrectionRelation>& rels) {
  std::vector<Component> out;
  for (auto r : rels) {
    switch (r) {
      case CorrectionRelation::commutativity:
        for (int j = 0; j < 3; ++j)
          for (int k = j + 1; k < 3; ++k) out.push_back({"[Q" + idx(j) + ",Q" + idx(k) + "]", r, j, k});
        break;
      case CorrectionRelation::ccr:
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) out.push_back({"[Q" + idx(j) + ",P" + idx(k) + "]", r, j, k});
        break;
      case CorrectionRelation::rotation:
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) out.push_back({"[J" + idx(j) + ",Q" + idx(k) + "]", r, j, k});
        break;
      case CorrectionRelation::time_reversal:
        for (int k = 0; k < 3; ++k) out.push_back({"TQ" + idx(k), r, 0, k});
        break;
      case CorrectionRelation::space_inversion:
        for (int k = 0; k < 3; ++k) out.push_back({"SQ" + idx(k), r, 0, k});
        break;
    }
  }
  return out;
}

std::string relation_name(CorrectionRelation r) {
  switch (r) {
    case CorrectionRelation::commutativity: return "commutativity";
    case CorrectionRelation::ccr: return "ccr";
    case CorrectionRelation::rotation: return "rotation";
    case CorrectionRelation::time_reversal: return "time_reversal";
    case CorrectionRelation::space_inversion: return "space_inversion";
  }
  return "unknown";
}

// Residual of a component for position components qs (index 0..2).
State component_residual(const TransformerTriplet& tr, const std::array<ParticleOperator, 3>& qs,
                         const Component& c, const State& psi) {
  const cplx ii(0.0, 1.0);
  switch (c.relation) {
    case CorrectionRelation::commutativity:
      return qs[c.j](qs[c.k](psi)) - qs[c.k](qs[c.j](psi));
    case CorrectionRelation::ccr: {
      State d = qs[c.j](tr.P(c.k)(psi)) - tr.P(c.k)(qs[c.j](psi));
      if (c.j == c.k) d -= ii * psi;
      return d;
    }
    case CorrectionRelation::rotation: {
      State d = tr.J(c.j)(qs[c.k](psi)) - qs[c.k](tr.J(c.j)(psi));
      if (c.j != c.k) {
        const int l = third(c.j, c.k);
        d -= cplx(0.0, levi_civita(c.j, c.k, l)) * qs[l](psi);
      }
      return d;
    }
    case CorrectionRelation::time_reversal:
      return tr.T()(qs[c.k](psi)) - qs[c.k](tr.T()(psi));
    case CorrectionRelation::space_inversion:
      return tr.S()(qs[c.k](psi)) + qs[c.k](tr.S()(psi));
  }
  return State(psi.grid());
}

// d(residual)/d(coefficient of term with component `comp` and tabulated symbol `sym`).
State component_sensitivity(const TransformerTriplet& tr, const std::array<ParticleOperator, 3>& qs,
                            const Component& c, int comp, const std::vector<double>& sym, const State& psi) {
  State zero(psi.grid());
  auto delta = [&](int i, const State& s) { return i == comp ? apply_symbol(sym, s) : State(s.grid()); };
  switch (c.relation) {
    case CorrectionRelation::commutativity: {
      State d = zero;
      if (c.k == comp) d += qs[c.j](delta(c.k, psi)) - delta(c.k, qs[c.j](psi));
      if (c.j == comp) d += delta(c.j, qs[c.k](psi)) - qs[c.k](delta(c.j, psi));
      return d;
    }
    case CorrectionRelation::ccr:
      return zero;
    case CorrectionRelation::rotation: {
      State d = zero;
      if (c.k == comp) d += tr.J(c.j)(delta(c.k, psi)) - delta(c.k, tr.J(c.j)(psi));
      if (c.j != c.k) {
        const int l = third(c.j, c.k);
        if (l == comp) d -= cplx(0.0, levi_civita(c.j, c.k, l)) * delta(l, psi);
      }
      return d;
    }
    case CorrectionRelation::time_reversal:
      if (c.k != comp) return zero;
      return tr.T()(delta(c.k, psi)) - delta(c.k, tr.T()(psi));
    case CorrectionRelation::space_inversion:
      if (c.k != comp) return zero;
      return tr.S()(delta(c.k, psi)) + delta(c.k, tr.S()(psi));
  }
  return zero;
}

double real_inner(const State& a, const State& b) { return inner_product(a, b).real(); }

}  // namespace

CorrectionFit best_correction(const TransformerTriplet& tr, const PositionOperator& q,
                              const SampleSet& samples, const std::vector<CorrectionRelation>& relations) {
  const auto& g = tr.grid();
  const auto basis = correction_basis();
  const std::size_t nb = basis.size();
  std::vector<std::shared_ptr<const std::vector<double>>> tables;
  for (const auto& t : basis) {
    auto tab = std::make_shared<std::vector<double>>(g.node_count());
    for (std::size_t n = 0; n < g.node_count(); ++n) (*tab)[n] = t.symbol(g.momentum(n));
    tables.push_back(std::move(tab));
  }
  const auto comps = components_for(relations);

  struct Partial {
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    double e0 = 0.0;
  };
  std::vector<Partial> partial(samples.size());
  parallel_for(samples.size(), [&](std::size_t s) {
    Partial p{Eigen::MatrixXd::Zero(nb, nb), Eigen::VectorXd::Zero(nb), 0.0};
    const State& psi = samples[s].state;
    for (const auto& c : comps) {
      if (c.relation == CorrectionRelation::ccr) {
        const State r0 = component_residual(tr, q.Q, c, psi);
        p.e0 += real_inner(r0, r0);
        continue;
      }
      const State r0 = component_residual(tr, q.Q, c, psi);
      std::vector<State> a;
      a.reserve(nb);
      for (std::size_t t = 0; t < nb; ++t)
        a.push_back(component_sensitivity(tr, q.Q, c, basis[t].component, *tables[t], psi));
      for (std::size_t t = 0; t < nb; ++t) {
        p.rhs(t) += real_inner(a[t], r0);
        for (std::size_t u = t; u < nb; ++u) {
          const double v = real_inner(a[t], a[u]);
          p.gram(t, u) += v;
          if (u != t) p.gram(u, t) += v;
        }
      }
      p.e0 += real_inner(r0, r0);
    }
    partial[s] = std::move(p);
  });
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
  double e0 = 0.0;
  for (const auto& p : partial) {
    G += p.gram;
    rhs += p.rhs;
    e0 += p.e0;
  }
  // Column scaling, then a rank-revealing solve of G c = -rhs.
  Eigen::VectorXd scale(nb);
  for (std::size_t t = 0; t < nb; ++t) scale(t) = G(t, t) > 0.0 ? 1.0 / std::sqrt(G(t, t)) : 0.0;
  const Eigen::MatrixXd Gs = scale.asDiagonal() * G * scale.asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Gs);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd ys = cod.solve(-(scale.asDiagonal() * rhs));
  const Eigen::VectorXd c = scale.asDiagonal() * ys;

  CorrectionFit fit;
  fit.rank = static_cast<int>(cod.rank());
  fit.coefficients.assign(c.data(), c.data() + nb);
  fit.objective_before = e0;
  fit.objective_after = std::max(0.0, e0 + 2.0 * c.dot(rhs) + c.dot(G * c));

  // Build the corrected operator and re-measure directly.
  std::array<std::shared_ptr<std::vector<double>>, 3> sym;
  for (auto& s : sym) s = std::make_shared<std::vector<double>>(g.node_count(), 0.0);
  for (std::size_t t = 0; t < nb; ++t)
    for (std::size_t n = 0; n < g.node_count(); ++n) (*sym[basis[t].component])[n] += c(t) * (*tables[t])[n];
  std::array<ParticleOperator, 3> qc = {corrected_component(q.Q[0], sym[0], "Q1+D1"),
                                        corrected_component(q.Q[1], sym[1], "Q2+D2"),
                                        corrected_component(q.Q[2], sym[2], "Q3+D3")};
  std::vector<double> size(samples.size(), 0.0);
  for (std::size_t s = 0; s < samples.size(); ++s)
    for (int k = 0; k < 3; ++k)
      size[s] = std::max(size[s], norm(apply_symbol(*sym[k], samples[s].state)) / norm(samples[s].state));
  fit.correction_size = *std::max_element(size.begin(), size.end());
  for (const auto& comp : comps) {
    const auto st = defect_residual([&](const State& psi) { return component_residual(tr, qc, comp, psi); }, samples);
    auto& slot = fit.relation_max_after[relation_name(comp.relation)];
    slot = std::max(slot, st.max_relative_residual);
  }
  return fit;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::localizable: return "LOCALIZABLE";
    case Verdict::obstructed: return "OBSTRUCTED";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

double fitted_slope(const std::vector<double>& h, const std::vector<double>& v) {
  if (h.size() != v.size() || h.size() < 2) throw std::invalid_argument("fitted_slope needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(std::max(v[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double default_obstruction_threshold() { return 0.02; }

LocalizabilityReport localizability_experiment(int m, const LocalizabilityOptions& opt) {
  if (opt.resolutions.size() < 3) throw std::invalid_argument("localizability needs at least 3 resolutions");
  LocalizabilityReport rep;
  rep.m = m;
  rep.resolutions = opt.resolutions;
  const double thr = opt.threshold_factor > 0.0 ? opt.threshold_factor : default_obstruction_threshold();
  rep.threshold = thr * std::abs(m);
  TripletClass cls;
  cls.tag = TripletTag::massless_pm;
  cls.mass = 0.0;
  cls.m = m;
  const auto specs = catalog_specs(CatalogFamily::massless_axis_free, opt.p_max, 0.0, opt.catalog);
  for (int n : opt.resolutions) {
    const MomentumGrid g(n, opt.p_max, 0.0, 2);
    const TransformerTriplet tr = make_triplet(cls, g, opt.order);
    const PositionOperator q = newton_wigner(g, opt.order, opt.form);
    const SampleSet samples = gaussian_catalog(specs, g);
    const CovarianceResiduals cov = covariance_residuals(tr, q, samples);
    rep.spacings.push_back(g.spacing());
    rep.raw_defect.push_back(cov.rotation.stats.max_relative_residual);
    rep.commutativity_defect.push_back(cov.commutativity.stats.max_relative_residual);
    rep.ccr_defect.push_back(cov.ccr.stats.max_relative_residual);
    if (opt.correction_search) {
      const CorrectionFit fit = best_correction(
          tr, q, samples,
          {CorrectionRelation::commutativity, CorrectionRelation::ccr, CorrectionRelation::rotation});
      rep.optimized_defect.push_back(fit.relation_max_after.at("rotation"));
      rep.correction_size.push_back(fit.correction_size);
    } else {
      rep.optimized_defect.push_back(rep.raw_defect.back());
      rep.correction_size.push_back(0.0);
    }
  }
  rep.raw_slope = fitted_slope(rep.spacings, rep.raw_defect);
  rep.optimized_slope = fitted_slope(rep.spacings, rep.optimized_defect);
  const std::size_t last = rep.spacings.size() - 1;
  const std::vector<double> fine_h{rep.spacings[last - 1], rep.spacings[last]};
  rep.raw_fine_slope = fitted_slope(fine_h, {rep.raw_defect[last - 1], rep.raw_defect[last]});
  rep.optimized_fine_slope = fitted_slope(fine_h, {rep.optimized_defect[last - 1], rep.optimized_defect[last]});
  const double min_raw = *std::min_element(rep.raw_defect.begin(), rep.raw_defect.end());
  const double min_opt = *std::min_element(rep.optimized_defect.begin(), rep.optimized_defect.end());
  if (rep.raw_slope >= opt.order - opt.order_band) {
    rep.verdict = Verdict::localizable;
    rep.rationale = "rotation defect of the canonical candidate decays at stencil order";
  } else if (m != 0 && min_raw >= rep.threshold && min_opt >= rep.threshold &&
             rep.raw_fine_slope < opt.flat_slope && rep.optimized_fine_slope < opt.flat_slope) {
    rep.verdict = Verdict::obstructed;
    rep.rationale = "raw and optimized rotation defects stay above threshold at every resolution and do not "
                    "decay between the two finest grids";
  } else {
    rep.verdict = Verdict::inconclusive;
    rep.rationale = "defects neither decay at stencil order nor stay above threshold";
  }
  return rep;
}

}  // namespace relqm
