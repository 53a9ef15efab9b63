#include "relqm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "relqm/kgmap.hpp"

namespace relqm {

std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::exact: return "exact";
    case CheckKind::convergent: return "convergent";
    case CheckKind::decaying: return "decaying";
    case CheckKind::upper_bound: return "upper_bound";
    case CheckKind::lower_bound: return "lower_bound";
    case CheckKind::recorded: return "recorded";
  }
  return "unknown";
}

std::string to_string(FlowKind k) {
  switch (k) {
    case FlowKind::time: return "time";
    case FlowKind::translation: return "translation";
    case FlowKind::rotation: return "rotation";
    case FlowKind::boost: return "boost";
  }
  return "unknown";
}

bool VerificationReport::all_pass() const { return failed() == 0; }

std::size_t VerificationReport::passed() const {
  std::size_t c = 0;
  for (const auto& s : sections)
    for (const auto& ch : s.checks) c += ch.pass ? 1 : 0;
  return c;
}

std::size_t VerificationReport::failed() const {
  std::size_t c = 0;
  for (const auto& s : sections)
    for (const auto& ch : s.checks) c += ch.pass ? 0 : 1;
  return c;
}

double convergence_order(double r_coarse, double r_fine, double h_coarse, double h_fine) {
  return std::log(r_coarse / r_fine) / std::log(h_coarse / h_fine);
}

void judge(CheckResult& c, const std::vector<double>& hs, const TolerancePolicy& pol) {
  const auto& r = c.residuals;
  bool finite = !r.empty();
  for (const auto& x : r) finite = finite && std::isfinite(x.value);
  auto all_exact = [&] {
    return std::all_of(r.begin(), r.end(), [&](const ResidualAt& x) { return x.value <= pol.exact; });
  };
  c.order_estimate.reset();
  if (finite && r.size() >= 2 && r.front().value > 0.0 && r.back().value > 0.0)
    c.order_estimate = convergence_order(r.front().value, r.back().value, hs.front(), hs.back());
  if (!finite) {
    c.pass = c.kind == CheckKind::recorded;
    return;
  }
  switch (c.kind) {
    case CheckKind::exact:
      c.pass = all_exact();
      break;
    case CheckKind::convergent:
      if (all_exact()) {
        c.pass = true;
        c.order_estimate.reset();
      } else {
        c.pass = c.order_estimate && std::abs(*c.order_estimate - pol.stencil_order) <= pol.order_band;
      }
      break;
    case CheckKind::decaying:
      if (all_exact()) {
        c.pass = true;
        c.order_estimate.reset();
      } else {
        c.pass = c.order_estimate && *c.order_estimate >= pol.min_decay_order;
      }
      break;
    case CheckKind::upper_bound:
      c.pass = true;
      for (std::size_t i = 0; i < r.size(); ++i) c.pass = c.pass && r[i].value <= c.bounds.at(i);
      break;
    case CheckKind::lower_bound:
      c.pass = true;
      for (std::size_t i = 0; i < r.size(); ++i) c.pass = c.pass && r[i].value >= c.bounds.at(i);
      if (c.order_estimate) c.pass = c.pass && *c.order_estimate < pol.flat_slope;
      break;
    case CheckKind::recorded:
      c.pass = true;
      break;
  }
}

ReportSection assemble_section(const std::string& name, const std::vector<int>& ns, const std::vector<double>& hs,
                               const std::vector<std::vector<Measurement>>& per, const TolerancePolicy& pol) {
  ReportSection sec;
  sec.name = name;
  if (per.empty()) return sec;
  const auto& first = per.front();
  for (std::size_t i = 0; i < first.size(); ++i) {
    CheckResult c;
    c.name = first[i].name;
    c.anchor = first[i].anchor;
    c.kind = first[i].kind;
    std::string note;
    for (std::size_t r = 0; r < per.size(); ++r) {
      const Measurement& m = per[r].at(i);
      if (m.name != c.name) throw std::logic_error("measurement order differs across resolutions: " + m.name);
      c.residuals.push_back({ns.at(r), m.value});
      c.bounds.push_back(m.bound);
      if (!m.note.empty()) {
        if (!note.empty()) note += "; ";
        note += "n=" + std::to_string(ns.at(r)) + ": " + m.note;
      }
    }
    c.note = note;
    judge(c, hs, pol);
    sec.checks.push_back(std::move(c));
  }
  return sec;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int eps3(int j, int k, int l) {
  if (j == k || k == l || j == l) return 0;
  return ((j + 1) % 3 == k) ? 1 : -1;
}

int third(int j, int k) { return 3 - j - k; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Max over samples and over the listed defects.
double max_defect(const SampleSet& samples, const std::vector<std::function<State(const State&)>>& defects) {
  double worst = 0.0;
  for (const auto& d : defects) worst = std::max(worst, defect_residual(d, samples).max_relative_residual);
  return worst;
}

using Defect = std::function<State(const State&)>;

// [A_j, B_k] - sum over l of c(j,k,l) C_l for all index pairs in `pairs`.
template <class FA, class FB, class FC>
std::vector<Defect> structure_defects(FA a, FB b, FC rhs, bool skip_diagonal, bool upper_only) {
  std::vector<Defect> out;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      if (skip_diagonal && j == k) continue;
      if (upper_only && k <= j) continue;
      out.push_back([=](const State& psi) {
        State d = a(j)(b(k)(psi)) - b(k)(a(j)(psi));
        d -= rhs(j, k, psi);
        return d;
      });
    }
  return out;
}

Measurement meas(std::string name, std::string anchor, CheckKind kind, double value, double bound = 0.0,
                 std::string note = {}) {
  return Measurement{std::move(name), std::move(anchor), kind, value, bound, std::move(note)};
}

}  // namespace

std::vector<Measurement> lie_algebra_suite(const TransformerTriplet& tr, const SampleSet& samples) {
  const cplx ii(0.0, 1.0);
  auto J = [&](int j) -> const ParticleOperator& { return tr.J(j); };
  auto K = [&](int j) -> const ParticleOperator& { return tr.K(j); };
  auto P = [&](int j) -> const ParticleOperator& { return tr.P(j); };
  auto P0 = [&](int) -> const ParticleOperator& { return tr.P0(); };
  auto eps_rhs = [&](auto op, double sign) {
    return [=, &tr](int j, int k, const State& psi) {
      (void)tr;
      const int l = third(j, k);
      if (j == k) return State(psi.grid());
      return cplx(0.0, sign * eps3(j, k, l)) * op(l)(psi);
    };
  };
  auto zero_rhs = [](int, int, const State& psi) { return State(psi.grid()); };
  std::vector<Measurement> out;
  out.push_back(meas("lie:[J_j,J_k]", "[J_j,J_k] = i eps_jkl J_l", CheckKind::convergent,
                     max_defect(samples, structure_defects(J, J, eps_rhs(J, 1.0), true, true))));
  out.push_back(meas("lie:[J_j,P_k]", "[J_j,P_k] = i eps_jkl P_l", CheckKind::convergent,
                     max_defect(samples, structure_defects(J, P, eps_rhs(P, 1.0), false, false))));
  out.push_back(meas("lie:[J_j,K_k]", "[J_j,K_k] = i eps_jkl K_l", CheckKind::convergent,
                     max_defect(samples, structure_defects(J, K, eps_rhs(K, 1.0), false, false))));
  out.push_back(meas("lie:[K_j,K_k]", "[K_j,K_k] = -i eps_jkl J_l", CheckKind::convergent,
                     max_defect(samples, structure_defects(K, K, eps_rhs(J, -1.0), true, true))));
  out.push_back(meas("lie:[K_j,P_k]", "[K_j,P_k] = i delta_jk P0", CheckKind::convergent,
                     max_defect(samples, structure_defects(K, P,
                                                           [&](int j, int k, const State& psi) {
                                                             if (j != k) return State(psi.grid());
                                                             return ii * tr.P0()(psi);
                                                           },
                                                           false, false))));
  std::vector<Defect> kp0, jp0, pp0;
  for (int j = 0; j < 3; ++j) {
    kp0.push_back([&, j](const State& psi) {
      return K(j)(P0(0)(psi)) - P0(0)(K(j)(psi)) - ii * P(j)(psi);
    });
    jp0.push_back([&, j](const State& psi) { return J(j)(P0(0)(psi)) - P0(0)(J(j)(psi)); });
    pp0.push_back([&, j](const State& psi) { return P(j)(P0(0)(psi)) - P0(0)(P(j)(psi)); });
  }
  out.push_back(meas("lie:[K_j,P0]", "[K_j,P0] = i P_j", CheckKind::convergent, max_defect(samples, kp0)));
  out.push_back(meas("lie:[J_j,P0]", "[J_j,P0] = 0", CheckKind::convergent, max_defect(samples, jp0)));
  out.push_back(meas("lie:[P_j,P_k]", "[P_j,P_k] = 0", CheckKind::exact,
                     max_defect(samples, structure_defects(P, P, zero_rhs, true, true))));
  out.push_back(meas("lie:[P_j,P0]", "[P_j,P0] = 0", CheckKind::exact, max_defect(samples, pp0)));
  return out;
}

namespace {

// min over sigma in {+1,-1} of max over samples and components of
// ||X G_j psi - sigma G_j X psi||.
std::pair<double, int> conjugation_sign(const ParticleOperator& x, const std::vector<const ParticleOperator*>& gens,
                                        const SampleSet& samples) {
  double best = std::numeric_limits<double>::infinity();
  int best_sign = 0;
  for (int sigma : {+1, -1}) {
    std::vector<Defect> d;
    for (const auto* g : gens)
      d.push_back([&, g, sigma](const State& psi) { return x((*g)(psi)) - cplx(sigma) * (*g)(x(psi)); });
    const double v = max_defect(samples, d);
    if (v < best) {
      best = v;
      best_sign = sigma;
    }
  }
  return {best, best_sign};
}

double norm_defect(const ParticleOperator& x, const SampleSet& samples) {
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(norm(x(s.state)) - norm(s.state)));
  return worst;
}

std::pair<double, int> square_sign(const ParticleOperator& x, const SampleSet& samples) {
  double best = std::numeric_limits<double>::infinity();
  int best_sign = 0;
  for (int sigma : {+1, -1}) {
    double worst = 0.0;
    for (const auto& s : samples)
      worst = std::max(worst, norm(x(x(s.state)) - cplx(sigma) * s.state) / norm(s.state));
    if (worst < best) {
      best = worst;
      best_sign = sigma;
    }
  }
  return {best, best_sign};
}

}  // namespace

std::vector<Measurement> inversion_suite(const TransformerTriplet& tr, const SampleSet& samples,
                                         const TolerancePolicy& pol) {
  std::vector<Measurement> out;
  if (!tr.has_inversions()) return out;
  const auto& g = tr.grid();
  struct Inv {
    const char* name;
    const ParticleOperator* op;
    std::array<int, 4> physical;  // P0, P, J, K
  };
  const Inv invs[] = {{"S", &tr.S(), {+1, -1, +1, -1}}, {"T", &tr.T(), {+1, -1, -1, +1}}};
  bool flips_energy = false;
  for (const auto& inv : invs) {
    const std::string n = inv.name;
    const ParticleOperator& x = *inv.op;
    out.push_back(meas("inversion:" + n + " norm", n + " preserves the norm", CheckKind::exact, norm_defect(x, samples)));
    const double lin = linearity_violation(x, g, 11, 2);
    out.push_back(meas("inversion:" + n + " linearity", n + " is " + (x.is_linear() ? "linear" : "conjugate-linear"),
                       CheckKind::exact, lin, 0.0, x.is_linear() ? "unitary" : "anti-unitary"));
    const auto sq = square_sign(x, samples);
    out.push_back(meas("inversion:" + n + "^2", n + "^2 = +-1", CheckKind::exact, sq.first, 0.0,
                       n + "^2 = " + (sq.second > 0 ? "+1" : "-1")));
    const std::vector<const ParticleOperator*> p0 = {&tr.P0()};
    const std::vector<const ParticleOperator*> p = {&tr.P(0), &tr.P(1), &tr.P(2)};
    const std::vector<const ParticleOperator*> j = {&tr.J(0), &tr.J(1), &tr.J(2)};
    const std::vector<const ParticleOperator*> k = {&tr.K(0), &tr.K(1), &tr.K(2)};
    const std::pair<const char*, const std::vector<const ParticleOperator*>*> gens[] = {
        {"P0", &p0}, {"P", &p}, {"J", &j}, {"K", &k}};
    for (int gi = 0; gi < 4; ++gi) {
      const auto res = conjugation_sign(x, *gens[gi].second, samples);
      const std::string gname = gens[gi].first;
      std::string note = "measured sign " + std::string(res.second > 0 ? "+1" : "-1") + ", physical pattern " +
                         std::string(inv.physical[gi] > 0 ? "+1" : "-1");
      out.push_back(meas("inversion:" + n + " " + gname + " " + n + "^-1",
                         n + " " + gname + " " + n + "^-1 = sign " + gname + " (sign recorded)", CheckKind::exact,
                         res.first, 0.0, note));
      if (gi == 0 && res.second < 0) flips_energy = true;
    }
  }
  const bool pm = predicted_spectrum(tr.cls()) == SpectrumClass::both;
  const bool t_unitary = tr.T().is_linear();
  const bool s_anti = !tr.S().is_linear();
  out.push_back(meas("inversion:energy sign exchange", "spectrum is two-sided iff an inversion maps P0 to -P0",
                     CheckKind::exact, (flips_energy == pm) ? 0.0 : 1.0, 0.0,
                     std::string("flips P0: ") + (flips_energy ? "yes" : "no") + ", two-sided class: " +
                         (pm ? "yes" : "no")));
  out.push_back(meas("inversion:unitarity criterion", "spectrum is two-sided iff T is unitary or S is anti-unitary",
                     CheckKind::exact, ((t_unitary || s_anti) == pm) ? 0.0 : 1.0, 0.0,
                     std::string("T unitary: ") + (t_unitary ? "yes" : "no") + ", S anti-unitary: " +
                         (s_anti ? "yes" : "no") + ", two-sided class: " + (pm ? "yes" : "no")));
  (void)pol;
  return out;
}

std::vector<Measurement> exact_suite(const TransformerTriplet& tr, const SampleSet& samples) {
  std::vector<Measurement> out;
  out.push_back(meas("exact:mass shell", "P0^2 - P^2 = mu^2", CheckKind::exact,
                     mass_shell_residual(tr, samples).max_relative_residual));
  std::vector<Defect> pp;
  for (int j = 0; j < 3; ++j)
    for (int k = j + 1; k < 3; ++k)
      pp.push_back([&, j, k](const State& psi) { return tr.P(j)(tr.P(k)(psi)) - tr.P(k)(tr.P(j)(psi)); });
  out.push_back(meas("exact:[P_j,P_k]", "[P_j,P_k] = 0", CheckKind::exact, max_defect(samples, pp)));
  out.push_back(meas("exact:parity involution", "Y^2 = 1", CheckKind::exact,
                     max_defect(samples, {[](const State& psi) { return parity(parity(psi)) - psi; }})));
  out.push_back(meas("exact:conjugation involution", "K^2 = 1", CheckKind::exact,
                     max_defect(samples, {[](const State& psi) { return conjugate(conjugate(psi)) - psi; }})));
  double pn = 0.0;
  for (const auto& s : samples) pn = std::max(pn, std::abs(norm(parity(s.state)) - norm(s.state)));
  out.push_back(meas("exact:parity isometry", "||Y psi|| = ||psi||", CheckKind::exact, pn));
  if (tr.has_inversions()) {
    out.push_back(meas("exact:S norm", "||S psi|| = ||psi||", CheckKind::exact, norm_defect(tr.S(), samples)));
    out.push_back(meas("exact:T norm", "||T psi|| = ||psi||", CheckKind::exact, norm_defect(tr.T(), samples)));
  }
  out.push_back(meas("exact:E_kin = p0", "E_kin = mu (1 - v^2)^(-1/2) = p0", CheckKind::exact,
                     kinetic_energy_residual(tr.grid(), samples).max_relative_residual));
  if (tr.cls().two_block()) {
    const ParticleOperator w = swap_op();
    out.push_back(meas("exact:swap P0 = -P0 swap", "W P0 = -P0 W", CheckKind::exact,
                       max_defect(samples, {[&](const State& psi) { return w(tr.P0()(psi)) + tr.P0()(w(psi)); }})));
  }
  return out;
}

std::vector<Measurement> spectrum_suite(const TransformerTriplet& tr, const SampleSet& samples,
                                        const TolerancePolicy& pol) {
  const SpectrumResult r = spectrum_probe(tr, samples, pol.spectrum_eps);
  const SpectrumClass want = predicted_spectrum(tr.cls());
  double emin = std::numeric_limits<double>::infinity(), emax = -emin;
  for (const auto& p : r.probes) {
    emin = std::min(emin, p.energy);
    emax = std::max(emax, p.energy);
  }
  return {meas("spectrum:class", "sign of P0 spectrum: positive, negative or both", CheckKind::exact,
               r.verdict == want ? 0.0 : 1.0, 0.0,
               "measured " + to_string(r.verdict) + ", predicted " + to_string(want) + ", probe <P0> in [" +
                   fmt(emin) + ", " + fmt(emax) + "]")};
}

std::vector<Measurement> helicity_suite(const TransformerTriplet& tr, const SampleSet& samples,
                                        const TolerancePolicy& pol) {
  std::vector<Measurement> out;
  if (tr.cls().massive()) return out;
  const auto& g = tr.grid();
  const double h = g.spacing();
  const double bound = pol.helicity_factor * std::pow(h, pol.stencil_order);
  const double target = 0.5 * std::abs(tr.cls().m);
  for (int b = 0; b < g.blocks(); ++b) {
    double worst = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : samples) {
      const auto lam = helicity_expectation(tr, s.state);
      if (std::isnan(lam[b])) continue;
      worst = std::max(worst, std::abs(std::abs(lam[b]) - target));
      lo = std::min(lo, lam[b]);
      hi = std::max(hi, lam[b]);
    }
    out.push_back(meas("helicity:block " + std::to_string(b + 1), "|J.P/p0| = |m|/2 per block",
                       CheckKind::upper_bound, worst, bound,
                       "measured helicity in [" + fmt(lo) + ", " + fmt(hi) + "]"));
  }
  return out;
}

std::vector<Measurement> covariance_suite(const TransformerTriplet& tr, const PositionOperator& q,
                                          const SampleSet& samples, bool expect_obstructed, double threshold) {
  std::vector<Measurement> out;
  const CovarianceResiduals cov = covariance_residuals(tr, q, samples);
  out.push_back(meas("covariance:[Q_j,P_k]", "[Q_j,P_k] = i delta_jk", CheckKind::convergent,
                     cov.ccr.stats.max_relative_residual));
  const bool obstructed = expect_obstructed && tr.cls().tag == TripletTag::massless_pm && tr.cls().m != 0;
  out.push_back(meas("covariance:[J_j,Q_k]", "[J_j,Q_k] = i eps_jkl Q_l",
                     obstructed ? CheckKind::lower_bound : CheckKind::convergent,
                     cov.rotation.stats.max_relative_residual, obstructed ? threshold * std::abs(tr.cls().m) : 0.0,
                     obstructed ? "expected non-decaying for m != 0" : ""));
  out.push_back(meas("covariance:[Q_j,Q_k]", "[Q_j,Q_k] = 0", CheckKind::convergent,
                     cov.commutativity.stats.max_relative_residual));
  if (cov.has_inversions) {
    out.push_back(meas("covariance:T Q = Q T", "T Q = Q T", CheckKind::convergent,
                       cov.time_reversal.stats.max_relative_residual));
    out.push_back(meas("covariance:S Q = -Q S", "S Q = -Q S", CheckKind::convergent,
                       cov.space_inversion.stats.max_relative_residual));
  }
  double adj = 0.0, raw = 0.0;
  for (int j = 0; j < 3; ++j) {
    adj = std::max(adj, adjoint_residual(q.Q[j], samples).max_relative_residual);
    raw = std::max(raw, adjoint_residual(uncorrected_position(j, tr.stencil_order()), samples).max_relative_residual);
  }
  out.push_back(meas("covariance:Q symmetric", "<phi, Q psi> = <Q phi, psi> under dnu", CheckKind::convergent, adj));
  out.push_back(meas("covariance:i d symmetric (uncorrected)", "i d_j alone is not symmetric under dnu",
                     CheckKind::recorded, raw));
  out.push_back(meas("covariance:velocity", "i[P0,Q_j] = sign p_j/p0", CheckKind::convergent,
                     velocity_residual(tr, q, samples).stats.max_relative_residual));
  return out;
}

std::vector<Measurement> kg_suite(const TransformerTriplet& tr, const SampleSet& samples, const TolerancePolicy& pol) {
  std::vector<Measurement> out;
  const auto& g = tr.grid();
  const double fft_tol = calibrate_fft_tolerance(g, pol.fft_factor, pol.fft_floor);
  double rt = 0.0, iso = 0.0, neg = 0.0, integ = 0.0, cons = 0.0;
  for (const auto& s : samples) {
    const KGState chi = kg_forward(s.state);
    rt = std::max(rt, norm(kg_backward(chi) - s.state) / norm(s.state));
    iso = std::max(iso, std::abs(norm(chi) - norm(s.state)));
    const auto rho = kg_density(chi);
    for (double r : rho) neg = std::max(neg, -r);
    const double i0 = integrate_density(rho, chi.grid());
    integ = std::max(integ, std::abs(i0 - norm(s.state) * norm(s.state)));
    for (double t : {0.25, 0.5, 1.0}) {
      const auto rt_rho = kg_density(kg_evolve(chi, t));
      cons = std::max(cons, std::abs(integrate_density(rt_rho, chi.grid()) - i0));
    }
  }
  out.push_back(meas("kg:round trip", "Z^-1 Z = 1", CheckKind::exact, rt));
  out.push_back(meas("kg:isometry", "||Z psi|| = ||psi||", CheckKind::exact, iso));
  out.push_back(meas("kg:density nonnegative", "rho = |psi1|^2 + |psi2|^2 >= 0", CheckKind::exact, neg));
  out.push_back(meas("kg:density integral", "integral of rho = ||psi||^2", CheckKind::exact, integ));
  out.push_back(meas("kg:density conservation", "integral of rho constant under exp(-i P0^ t)", CheckKind::exact, cons));
  const auto eq = kg_equivalence_residual(tr, samples);
  auto pick = [&](const std::string& prefix) {
    double v = 0.0;
    for (const auto& e : eq)
      if (e.generator.rfind(prefix, 0) == 0 && (prefix != "P" || e.generator != "P0"))
        v = std::max(v, e.stats.max_relative_residual);
    return v;
  };
  const std::string tol_note = "calibrated FFT tolerance " + fmt(fft_tol);
  out.push_back(meas("kg:Z P0 Z^-1", "Z P0 Z^-1 = P0^", CheckKind::upper_bound, pick("P0"), fft_tol, tol_note));
  out.push_back(meas("kg:Z P Z^-1", "Z P_j Z^-1 = P_j^", CheckKind::upper_bound, pick("P"), fft_tol, tol_note));
  out.push_back(meas("kg:Z S Z^-1", "Z S Z^-1 = S^ (printed assignment)", CheckKind::upper_bound, pick("S"), fft_tol,
                     tol_note));
  out.push_back(meas("kg:Z T Z^-1", "Z T Z^-1 = T^ (printed assignment)", CheckKind::upper_bound, pick("T"), fft_tol,
                     tol_note));
  out.push_back(meas("kg:Z J Z^-1", "Z J_j Z^-1 = J_j^", CheckKind::decaying, pick("J")));
  out.push_back(meas("kg:Z K Z^-1", "Z K_j Z^-1 = K_j^", CheckKind::decaying, pick("K")));
  out.push_back(meas("kg:Z Q Z^-1", "Z Q_j Z^-1 = x_j", CheckKind::decaying, pick("Q")));
  return out;
}

namespace {

double generator_bound(const TransformerTriplet& tr, FlowKind kind) {
  const auto& g = tr.grid();
  const double pmax = std::sqrt(3.0) * g.p_max();
  const double e_max = std::sqrt(g.mass() * g.mass() + pmax * pmax);
  const double d_max = 1.372 / g.spacing();
  double helicity = 0.0;
  if (tr.cls().tag == TripletTag::massless_pm && tr.cls().m != 0) {
    const double rho_min = g.spacing() / std::sqrt(2.0);
    helicity = 0.5 * std::abs(tr.cls().m) * e_max / rho_min;
  }
  switch (kind) {
    case FlowKind::time: return e_max;
    case FlowKind::translation: return g.p_max();
    case FlowKind::rotation: return 2.0 * pmax * d_max + helicity;
    case FlowKind::boost: return e_max * d_max + helicity;
  }
  return 1.0;
}

const ParticleOperator& flow_generator(const TransformerTriplet& tr, FlowKind kind, int axis) {
  switch (kind) {
    case FlowKind::time: return tr.P0();
    case FlowKind::translation: return tr.P(axis);
    case FlowKind::rotation: return tr.J(axis);
    case FlowKind::boost: return tr.K(axis);
  }
  return tr.P0();
}

}  // namespace

FlowResult group_flow(const TransformerTriplet& tr, const PacketSpec& packet, FlowKind kind, int axis,
                      double param) {
  const auto& g = tr.grid();
  PacketSpec spec = packet;
  if (spec.block_weights.empty()) {
    spec.block_weights.assign(g.blocks(), 1.0 / std::sqrt(static_cast<double>(g.blocks())));
  }
  const State psi0 = gaussian_packet(g, spec);
  const double c = packet_normalization(g, spec);
  const ParticleOperator& gen = flow_generator(tr, kind, axis);
  FlowResult res{kind, axis, param, 0};
  const bool derivative_bearing = kind == FlowKind::rotation || kind == FlowKind::boost;
  const double z = derivative_bearing ? 0.05 : 0.01;
  res.steps = std::max(1, static_cast<int>(std::ceil(std::abs(param) * generator_bound(tr, kind) / z)));
  const double dt = param / res.steps;
  const cplx ii(0.0, 1.0);
  auto rhs = [&](const State& s) { return ii * gen(s); };
  State psi = psi0;
  const double n0 = norm(psi0);
  for (int step = 0; step < res.steps; ++step) {
    const State k1 = rhs(psi);
    const State k2 = rhs(psi + cplx(0.5 * dt) * k1);
    const State k3 = rhs(psi + cplx(0.5 * dt) * k2);
    const State k4 = rhs(psi + cplx(dt) * k3);
    psi += cplx(dt / 6.0) * (k1 + cplx(2.0) * k2 + cplx(2.0) * k3 + k4);
    const double nn = norm(psi);
    if (!std::isfinite(nn) || std::abs(nn - n0) > 1e-3 * n0) {
      res.unstable = true;
      break;
    }
  }
  res.norm_drift = std::abs(norm(psi) - n0) / n0;
  if (res.unstable) {
    res.vs_reference = res.vs_analytic = res.interpolation_error = kNaN;
    return res;
  }
  const auto& signs = tr.energy_signs();
  if (kind == FlowKind::time || kind == FlowKind::translation) {
    State exact(g);
    for (int b = 0; b < g.blocks(); ++b)
      for (std::size_t n = 0; n < g.node_count(); ++n) {
        const double phase = kind == FlowKind::time ? signs[b] * g.energy(n) * param : g.momentum(n)[axis] * param;
        exact.at(b, n) = std::polar(1.0, phase) * psi0.at(b, n);
      }
    res.vs_reference = norm(psi - exact) / n0;
    res.vs_analytic = res.vs_reference;
    res.interpolation_error = 0.0;
    return res;
  }
  const bool helicity = tr.cls().tag == TripletTag::massless_pm && tr.cls().m != 0;
  if (helicity && axis != 2) {
    res.point_comparison = false;
    res.vs_reference = res.vs_analytic = res.interpolation_error = kNaN;
    return res;
  }
  State interp(g), analytic(g);
  for (int b = 0; b < g.blocks(); ++b)
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const Vec3 p = g.momentum(n);
      Vec3 t = p;
      if (kind == FlowKind::rotation) {
        const int j = (axis + 2) % 3;
        const int l = (axis + 1) % 3;
        t[l] = p[l] * std::cos(param) - p[j] * std::sin(param);
        t[j] = p[l] * std::sin(param) + p[j] * std::cos(param);
      } else {
        t[axis] = p[axis] * std::cosh(param) - signs[b] * g.energy(n) * std::sinh(param);
      }
      interp.at(b, n) = interpolate(psi0, b, t);
      analytic.at(b, n) = c * spec.block_weights[b] * packet_profile(spec, t);
    }
  res.vs_reference = norm(psi - interp) / n0;
  res.interpolation_error = norm(interp - analytic) / n0;
  res.vs_analytic = norm(psi - analytic) / n0;
  return res;
}

std::vector<Measurement> group_action_suite(const TransformerTriplet& tr, const PacketSpec& packet,
                                            const TolerancePolicy& pol, double angle, double shift, double rapidity,
                                            double time) {
  std::vector<Measurement> out;
  struct Item {
    FlowKind kind;
    int axis;
    double param;
  };
  const Item items[] = {{FlowKind::time, 0, time},         {FlowKind::translation, 0, shift},
                        {FlowKind::rotation, 2, angle},    {FlowKind::rotation, 0, angle},
                        {FlowKind::boost, 0, rapidity},    {FlowKind::boost, 2, rapidity}};
  for (const auto& it : items) {
    const FlowResult r = group_flow(tr, packet, it.kind, it.axis, it.param);
    const std::string base = "group:" + to_string(it.kind) + (it.kind == FlowKind::time ? "" : " " + std::to_string(it.axis + 1));
    const std::string note = r.unstable ? "unstable integration" :
                             "steps " + std::to_string(r.steps) + ", vs analytic " + fmt(r.vs_analytic) +
                                 ", interpolation error " + fmt(r.interpolation_error);
    const double bad = std::numeric_limits<double>::infinity();
    if (it.kind == FlowKind::time || it.kind == FlowKind::translation) {
      out.push_back(meas(base, it.kind == FlowKind::time ? "exp(i P0 t) = exact phase" : "exp(i P_j a) = exact phase",
                         CheckKind::upper_bound, r.unstable ? bad : r.vs_reference, pol.group_translation, note));
      continue;
    }
    const std::string anchor = it.kind == FlowKind::rotation ? "exp(i J_j theta) acts as a rotation of p"
                                                              : "exp(i K_j u) acts as a boost of p";
    if (r.point_comparison) {
      out.push_back(meas(base + " point action", anchor, CheckKind::upper_bound, r.unstable ? bad : r.vs_reference,
                         pol.group_interp_factor * r.interpolation_error + 1e-8, note));
    } else {
      out.push_back(meas(base + " point action", anchor, CheckKind::recorded, kNaN, 0.0,
                         "no point action for this generator (helicity terms)"));
    }
    // The norm bound is stated for boosts; rotations record their drift.
    const CheckKind norm_kind = it.kind == FlowKind::boost ? CheckKind::upper_bound : CheckKind::recorded;
    out.push_back(meas(base + " norm", "the flow is unitary", r.unstable ? CheckKind::upper_bound : norm_kind,
                       r.unstable ? bad : r.norm_drift, pol.group_norm, note));
  }
  return out;
}

Trajectory ehrenfest_evolution(const TransformerTriplet& tr, const State& psi, const std::vector<double>& times,
                               NwForm form) {
  const auto& g = tr.grid();
  const PositionOperator q = newton_wigner(g, tr.stencil_order(), form);
  const ParticleOperator ekin = kinetic_energy(g);
  const auto& signs = tr.energy_signs();
  Trajectory tj;
  auto evolve = [&](const State& s, double t) {
    State out = s;
    for (int b = 0; b < g.blocks(); ++b)
      for (std::size_t n = 0; n < g.node_count(); ++n) out.at(b, n) *= std::polar(1.0, -signs[b] * g.energy(n) * t);
    return out;
  };
  auto expect = [](const State& s, const ParticleOperator& op) { return inner_product(s, op(s)).real(); };
  for (double t : times) {
    const State st = evolve(psi, t);
    TrajectoryPoint pt{};
    pt.t = t;
    const double n2 = inner_product(st, st).real();
    for (int j = 0; j < 3; ++j) {
      pt.q[j] = expect(st, q.Q[j]) / n2;
      pt.p[j] = expect(st, tr.P(j)) / n2;
    }
    pt.p0 = expect(st, tr.P0()) / n2;
    pt.e_kin = expect(st, ekin) / n2;
    pt.norm = std::sqrt(n2);
    tj.points.push_back(pt);
  }
  // Per-block slopes by least squares over the trajectory.
  for (int b = 0; b < g.blocks(); ++b) {
    const State sb = restrict_to_block(psi, b);
    const double w = inner_product(sb, sb).real();
    tj.block_weight.push_back(w);
    std::array<double, 3> slope{kNaN, kNaN, kNaN}, vel{kNaN, kNaN, kNaN};
    if (w > 1e-14) {
      for (int j = 0; j < 3; ++j) {
        double st = 0, sq = 0, stt = 0, stq = 0;
        for (double t : times) {
          const State s = evolve(sb, t);
          const double qv = expect(s, q.Q[j]) / w;
          st += t;
          sq += qv;
          stt += t * t;
          stq += t * qv;
        }
        const double m = static_cast<double>(times.size());
        slope[j] = (m * stq - st * sq) / (m * stt - st * st);
        double v = 0.0;
        for (std::size_t n = 0; n < g.node_count(); ++n)
          v += std::norm(sb.at(b, n)) * g.weight(n) * signs[b] * g.momentum(n)[j] / g.energy(n);
        vel[j] = v / w;
      }
    }
    tj.block_slope.push_back(slope);
    tj.block_velocity.push_back(vel);
  }
  return tj;
}

std::vector<Measurement> ehrenfest_suite(const TransformerTriplet& tr, const PacketSpec& packet,
                                         const TolerancePolicy& pol) {
  const auto& g = tr.grid();
  PacketSpec spec = packet;
  if (spec.block_weights.empty())
    spec.block_weights.assign(g.blocks(), 1.0 / std::sqrt(static_cast<double>(g.blocks())));
  const State psi = gaussian_packet(g, spec);
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(0.1 * i);
  const Trajectory tj = ehrenfest_evolution(tr, psi, times);
  std::vector<Measurement> out;
  for (int b = 0; b < g.blocks(); ++b) {
    if (!(tj.block_weight[b] > 1e-14)) continue;
    double vmax = 0.0, dev = 0.0;
    for (int j = 0; j < 3; ++j) {
      vmax = std::max(vmax, std::abs(tj.block_velocity[b][j]));
      dev = std::max(dev, std::abs(tj.block_slope[b][j] - tj.block_velocity[b][j]));
    }
    out.push_back(meas("ehrenfest:velocity block " + std::to_string(b + 1), "d<Q_j>/dt = sign <p_j/p0>",
                       CheckKind::upper_bound, dev / vmax, pol.ehrenfest_relative,
                       "slope " + fmt(tj.block_slope[b][0]) + " vs <v1> " + fmt(tj.block_velocity[b][0])));
  }
  double dp = 0.0, dn = 0.0, de = 0.0, low = 0.0;
  double mean_e = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    for (int b = 0; b < g.blocks(); ++b) mean_e += std::norm(psi.at(b, n)) * g.weight(n) * g.energy(n);
  mean_e /= inner_product(psi, psi).real();
  for (const auto& pt : tj.points) {
    for (int j = 0; j < 3; ++j) dp = std::max(dp, std::abs(pt.p[j] - tj.points.front().p[j]));
    dn = std::max(dn, std::abs(pt.norm - tj.points.front().norm));
    de = std::max(de, std::abs(pt.e_kin - mean_e));
    low = std::max(low, g.mass() - pt.e_kin);
  }
  out.push_back(meas("ehrenfest:momentum constant", "<P>(t) constant", CheckKind::exact, dp));
  out.push_back(meas("ehrenfest:norm constant", "||psi_t|| constant", CheckKind::exact, dn));
  out.push_back(meas("ehrenfest:E_kin = <p0>", "<E_kin> = <p0>", CheckKind::exact, de));
  out.push_back(meas("ehrenfest:E_kin >= mu", "<E_kin> >= mu", CheckKind::exact, std::max(0.0, low)));
  if (tr.cls().two_block() && std::abs(std::abs(spec.block_weights[0]) - std::abs(spec.block_weights[1])) < 1e-15) {
    double p0 = 0.0;
    for (const auto& pt : tj.points) p0 = std::max(p0, std::abs(pt.p0));
    out.push_back(meas("ehrenfest:<P0> = 0 (equal blocks)", "<P0> = 0 for an equal-block packet", CheckKind::exact,
                       p0, 0.0, "<E_kin> = " + fmt(tj.points.front().e_kin)));
  }
  return out;
}

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s = {"exact", "lie", "inversion", "spectrum", "helicity",
                                             "covariance", "group", "ehrenfest", "kg"};
  return s;
}

namespace {

PacketSpec default_packet(const MomentumGrid& g, bool for_flow) {
  const double scale = g.p_max() / 6.0;
  PacketSpec s;
  if (g.mass() > 0.0) {
    s.center = for_flow ? Vec3{0.5 * scale, 0.3 * scale, -0.2 * scale} : Vec3{1.0 * scale, 0.0, 0.0};
    s.width = (for_flow ? 1.2 : 1.0) * scale;
  } else {
    s.center = for_flow ? Vec3{2.0 * scale, 1.8 * scale, 0.3 * scale} : Vec3{3.0 * scale, 0.0, 0.0};
    s.width = 0.8 * scale;
  }
  return s;
}

}  // namespace

VerificationReport verify_class(const TripletClass& cls_in, const VerifyOptions& opt) {
  TripletClass cls = cls_in;
  if (cls.massive()) cls.mass = opt.mass;
  cls.validate();
  for (const auto& s : opt.suites)
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      throw std::invalid_argument("unknown suite '" + s + "'");
  if (opt.resolutions.empty()) throw std::invalid_argument("at least one resolution is required");
  VerificationReport rep;
  rep.triplet_class = cls.to_string();
  rep.resolutions = opt.resolutions;
  rep.p_max = opt.p_max;
  rep.mass = cls.massive() ? opt.mass : 0.0;
  rep.stencil_order = opt.order;
  rep.seed = opt.catalog.seed;
  rep.policy = opt.policy;
  rep.policy.stencil_order = opt.order;
  const double thr = opt.obstruction_factor > 0.0 ? opt.obstruction_factor : default_obstruction_threshold();
  const bool helicity_terms = cls.tag == TripletTag::massless_pm && cls.m != 0;
  const CatalogFamily family = cls.massive() ? CatalogFamily::massive
                                             : (helicity_terms ? CatalogFamily::massless_axis_free : CatalogFamily::massless);
  const auto specs = catalog_specs(family, opt.p_max, rep.mass, opt.catalog);

  std::vector<double> hs;
  std::map<std::string, std::vector<std::vector<Measurement>>> per;
  std::map<std::string, std::string> unavailable;
  for (int n : opt.resolutions) {
    const MomentumGrid g(n, opt.p_max, rep.mass, cls.blocks());
    hs.push_back(g.spacing());
    const TransformerTriplet tr = make_triplet(cls, g, opt.order);
    const SampleSet samples = gaussian_catalog(specs, g);
    auto want = [&](const char* s) { return opt.suites.count(s) > 0; };
    if (want("exact")) per["exact"].push_back(exact_suite(tr, samples));
    if (want("lie")) per["lie"].push_back(lie_algebra_suite(tr, samples));
    if (want("inversion")) {
      if (tr.has_inversions()) {
        per["inversion"].push_back(inversion_suite(tr, samples, rep.policy));
      } else {
        unavailable["inversion"] = "inversions for " + cls.to_string() + " are unavailable in source";
      }
    }
    if (want("spectrum")) per["spectrum"].push_back(spectrum_suite(tr, samples, rep.policy));
    if (want("helicity")) {
      if (cls.massive()) {
        unavailable["helicity"] = "helicity is checked for massless classes only";
      } else {
        per["helicity"].push_back(helicity_suite(tr, samples, rep.policy));
      }
    }
    if (want("covariance")) {
      const PositionOperator q = newton_wigner(g, opt.order, opt.form);
      per["covariance"].push_back(covariance_suite(tr, q, samples, opt.expect_obstructed, thr));
    }
    if (want("group")) per["group"].push_back(group_action_suite(tr, default_packet(g, true), rep.policy));
    if (want("ehrenfest")) per["ehrenfest"].push_back(ehrenfest_suite(tr, default_packet(g, false), rep.policy));
    if (want("kg")) {
      if (cls.tag == TripletTag::massive_pm_1 || cls.tag == TripletTag::massive_pm_2) {
        per["kg"].push_back(kg_suite(tr, samples, rep.policy));
      } else {
        unavailable["kg"] = "the Klein-Gordon map applies to massive_pm_1 and massive_pm_2";
      }
    }
  }
  for (const auto& name : known_suites()) {
    if (!opt.suites.count(name)) continue;
    if (unavailable.count(name)) {
      ReportSection sec;
      sec.name = name;
      sec.available = false;
      sec.note = unavailable[name];
      rep.sections.push_back(sec);
      continue;
    }
    rep.sections.push_back(assemble_section(name, opt.resolutions, hs, per[name], rep.policy));
  }
  return rep;
}

}  // namespace relqm
