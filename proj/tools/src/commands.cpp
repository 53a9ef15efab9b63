#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <locale>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "relqm/kgmap.hpp"
#include "relqm_cli/cli.hpp"

namespace relqm::cli {

using nlohmann::json;

namespace {

void emit(const RunConfig& config, const json& report, std::ostream& log) {
  const std::string text = report.dump(2) + "\n";
  if (config.out.empty()) {
    log << text;
  } else {
    write_atomic(config.out, text);
  }
}

double obstruction_factor(const RunConfig& c) {
  const auto it = c.tolerances.find("obstruction_threshold");
  return it == c.tolerances.end() ? 0.0 : it->second;
}

template <class F>
auto usage_guard(F&& f) {
  try {
    return f();
  } catch (const GridError& e) {
    throw UsageError(e.what());
  } catch (const BoundaryError& e) {
    throw UsageError(e.what());
  } catch (const TripletError& e) {
    throw UsageError(e.what());
  } catch (const KgError& e) {
    throw UsageError(e.what());
  } catch (const UnavailableInSource& e) {
    throw UsageError(e.what());
  }
}

void print_summary(const json& report, std::ostream& log) {
  for (const auto& c : report.at("checks")) {
    log << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>();
    if (!c.at("order_estimate").is_null()) log << "  order " << std::setprecision(3) << c.at("order_estimate").get<double>();
    log << '\n';
  }
  const auto& s = report.at("summary");
  log << s.at("passed").get<std::size_t>() << " passed, " << s.at("failed").get<std::size_t>() << " failed\n";
}

}  // namespace

int cmd_verify(const RunConfig& c, std::ostream& log) {
  VerifyOptions opt;
  opt.resolutions = c.resolutions;
  opt.p_max = c.p_max;
  opt.mass = c.mu;
  opt.suites = std::set<std::string>(c.suites.begin(), c.suites.end());
  opt.catalog.seed = c.seed;
  opt.policy = policy_from(c);
  opt.expect_obstructed = c.expect_obstructed;
  opt.obstruction_factor = obstruction_factor(c);
  opt.form = form_from(c);
  const TripletClass cls = resolve_class(c);
  const VerificationReport rep = usage_guard([&] { return verify_class(cls, opt); });
  const json j = verification_to_json(c, rep);
  emit(c, j, log);
  if (!c.out.empty()) print_summary(j, log);
  return rep.all_pass() ? kExitPass : kExitCheckFailed;
}

int cmd_localizability(const RunConfig& c, std::ostream& log) {
  LocalizabilityOptions opt;
  opt.resolutions = c.resolutions;
  opt.p_max = c.p_max;
  opt.form = form_from(c);
  opt.catalog.seed = c.seed;
  opt.threshold_factor = obstruction_factor(c);
  const TolerancePolicy pol = policy_from(c);
  opt.order_band = pol.order_band;
  opt.flat_slope = pol.flat_slope;
  std::vector<LocalizabilityReport> reports;
  std::vector<ReportSection> sections;
  ReportSection verdicts;
  verdicts.name = "localizability";
  for (std::size_t i = 0; i < c.m.size(); ++i) {
    const int m = c.m[i];
    const LocalizabilityReport r = usage_guard([&] { return localizability_experiment(m, opt); });
    reports.push_back(r);
    const Verdict expected = m == 0 ? Verdict::localizable : Verdict::obstructed;
    const std::string tag = "localizability:m=" + std::to_string(m);
    const std::string note = "verdict " + to_string(r.verdict) + ", expected " + to_string(expected) + "; " +
                             r.rationale;
    CheckResult raw;
    raw.name = tag + " rotation defect";
    raw.anchor = "[J_j,Q_k] = i eps_jkl Q_l for block Newton-Wigner Q";
    raw.kind = m == 0 ? CheckKind::convergent : CheckKind::lower_bound;
    CheckResult opt_c = raw;
    opt_c.name = tag + " rotation defect after correction search";
    opt_c.anchor = "no correction Q + Delta(p) restores [J_j,Q_k] = i eps_jkl Q_l";
    opt_c.kind = m == 0 ? CheckKind::recorded : CheckKind::lower_bound;
    for (std::size_t k = 0; k < r.resolutions.size(); ++k) {
      raw.residuals.push_back({r.resolutions[k], r.raw_defect[k]});
      opt_c.residuals.push_back({r.resolutions[k], r.optimized_defect[k]});
      raw.bounds.push_back(m == 0 ? 0.0 : r.threshold);
      opt_c.bounds.push_back(m == 0 ? 0.0 : r.threshold);
    }
    raw.order_estimate = m == 0 ? r.raw_slope : r.raw_fine_slope;
    opt_c.order_estimate = m == 0 ? r.optimized_slope : r.optimized_fine_slope;
    raw.pass = r.verdict == expected;
    opt_c.pass = m == 0 || r.verdict == expected;
    raw.note = note;
    opt_c.note = "slope over the ladder " + std::to_string(r.optimized_slope) + ", between the finest grids " +
                 std::to_string(r.optimized_fine_slope);
    verdicts.checks.push_back(raw);
    verdicts.checks.push_back(opt_c);
    log << "m=" << m << ": " << to_string(r.verdict) << '\n';
  }
  sections.push_back(verdicts);
  // m = 0 with explicit inversion pairs: the S/T relations of the position.
  if (std::find(c.m.begin(), c.m.end(), 0) != c.m.end()) {
    for (int pair : c.pair) {
      VerifyOptions vo;
      vo.resolutions = c.resolutions;
      vo.p_max = c.p_max;
      vo.suites = {"covariance"};
      vo.catalog.seed = c.seed;
      vo.policy = pol;
      vo.form = opt.form;
      TripletClass cls = TripletClass::parse("massless_pm:m=0,pair=" + std::to_string(pair));
      const VerificationReport vr = usage_guard([&] { return verify_class(cls, vo); });
      // The position relations the inversion pair has to respect.
      static const std::set<std::string> keep = {"covariance:[Q_j,P_k]", "covariance:[J_j,Q_k]",
                                                 "covariance:[Q_j,Q_k]", "covariance:T Q = Q T",
                                                 "covariance:S Q = -Q S"};
      for (auto s : vr.sections) {
        s.name = "covariance:pair=" + std::to_string(pair);
        std::erase_if(s.checks, [](const CheckResult& ch) { return !keep.count(ch.name); });
        sections.push_back(s);
      }
    }
  }
  const json j = localizability_to_json(c, reports, sections);
  emit(c, j, log);
  return j.at("summary").at("all_pass").get<bool>() ? kExitPass : kExitCheckFailed;
}

int cmd_evolve(const RunConfig& c, std::ostream& log) {
  const TripletClass cls = resolve_class(c);
  const MomentumGrid g = usage_guard([&] { return MomentumGrid(c.resolutions.front(), c.p_max, cls.mass, cls.blocks()); });
  PacketSpec spec;
  spec.center = c.evolve.center;
  spec.width = c.evolve.width;
  spec.block_weights.assign(g.blocks(), 1.0 / std::sqrt(static_cast<double>(g.blocks())));
  usage_guard([&] {
    check_boundary_support(g, spec);
    return 0;
  });
  const TransformerTriplet tr = make_triplet(cls, g, 4);
  const State psi = gaussian_packet(g, spec);
  std::vector<double> times;
  for (int i = 0; i <= c.evolve.steps; ++i) times.push_back(c.evolve.t_max * i / c.evolve.steps);
  const Trajectory tj = ehrenfest_evolution(tr, psi, times, form_from(c));
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "t,Q1,Q2,Q3,P1,P2,P3,P0,E_kin,norm\n";
  for (const auto& p : tj.points) {
    os << p.t << ',' << p.q[0] << ',' << p.q[1] << ',' << p.q[2] << ',' << p.p[0] << ',' << p.p[1] << ','
       << p.p[2] << ',' << p.p0 << ',' << p.e_kin << ',' << p.norm << '\n';
  }
  if (c.out.empty()) {
    log << os.str();
  } else {
    write_atomic(c.out, os.str());
  }
  if (c.evolve.kg) {
    std::filesystem::create_directories(c.evolve.kg_dir);
    const KGState chi = kg_forward(psi);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto rho = kg_density(kg_evolve(chi, times[i]));
      std::ostringstream name;
      name << "rho_" << std::setw(4) << std::setfill('0') << i << ".csv";
      write_density_slice_csv(rho, chi.grid(), (std::filesystem::path(c.evolve.kg_dir) / name.str()).string());
    }
  }
  return kExitPass;
}

int dispatch(RunConfig c, std::ostream& log) {
  validate(c);
  if (c.command == "verify") return cmd_verify(c, log);
  if (c.command == "localizability") return cmd_localizability(c, log);
  return cmd_evolve(c, log);
}

namespace {

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid ") + what + " '" + item + "'");
    }
    if (pos != item.size()) throw UsageError(std::string("invalid ") + what + " '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    is.imbue(std::locale::classic());
    double v = 0.0;
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("invalid ") + what + " '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Poincare triplet construction and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  struct Raw {
    std::string cls, m, pair, n, suites, center = "1,0,0", expect, from_report, form = "factored";
    std::vector<std::string> tol;
    double pmax = 6.0, mu = 1.0, width = 1.0, t_max = 2.0;
    int steps = 50;
    std::uint64_t seed = 20240607;
    std::string out, kg_dir;
    bool kg = false;
  } raw;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--class", raw.cls, "Triplet class tag");
    sub->add_option("--m", raw.m, "Helicity parameter (comma list for localizability)");
    sub->add_option("--pair", raw.pair, "Inversion pair for massless_pm m=0 (1, 2, 3)");
    sub->add_option("--n", raw.n, "Grid sizes, comma separated");
    sub->add_option("--pmax", raw.pmax, "Momentum box half-width");
    sub->add_option("--mu", raw.mu, "Mass of massive classes");
    sub->add_option("--seed", raw.seed, "Catalog seed");
    sub->add_option("--out", raw.out, "Output file (stdout if omitted)");
    sub->add_option("--tol", raw.tol, "Tolerance override name=value (repeatable)");
    sub->add_option("--nw-form", raw.form, "Newton-Wigner discretization: factored or direct");
  };
  CLI::App* verify = app.add_subcommand("verify", "Run verification suites across a grid ladder");
  common(verify);
  verify->add_option("--suites", raw.suites, "Comma separated suites");
  verify->add_option("--expect", raw.expect, "Expected outcome: obstructed");
  verify->add_option("--from-report", raw.from_report, "Re-run the config embedded in a report");
  CLI::App* loc = app.add_subcommand("localizability", "Rotation covariance of the position operator");
  common(loc);
  CLI::App* evolve = app.add_subcommand("evolve", "Packet trajectory under exp(-i P0 t)");
  common(evolve);
  evolve->add_option("--center", raw.center, "Packet centre p1,p2,p3");
  evolve->add_option("--width", raw.width, "Packet width");
  evolve->add_option("--t-max", raw.t_max, "Final time");
  evolve->add_option("--steps", raw.steps, "Number of time steps");
  evolve->add_flag("--kg", raw.kg, "Also write position-space density slices");
  evolve->add_option("--kg-dir", raw.kg_dir, "Directory for density slices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForVersion& e) {
    out << tool_version() << '\n';
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    RunConfig c;
    if (!raw.from_report.empty()) {
      const json rep = read_report(raw.from_report);
      c = config_from_json(rep.at("config"));
      c.out = raw.out;
    } else {
      c.command = app.get_subcommands().front()->get_name();
      c.triplet_class = raw.cls;
      if (!raw.m.empty()) c.m = parse_int_list(raw.m, "--m");
      if (!raw.pair.empty()) c.pair = parse_int_list(raw.pair, "--pair");
      if (!raw.n.empty()) c.resolutions = parse_int_list(raw.n, "--n");
      c.p_max = raw.pmax;
      c.mu = raw.mu;
      c.suites = split(raw.suites);
      c.seed = raw.seed;
      c.out = raw.out;
      c.nw_form = raw.form;
      if (!raw.expect.empty()) {
        if (raw.expect != "obstructed") throw UsageError("--expect accepts 'obstructed'");
        c.expect_obstructed = true;
      }
      for (const auto& t : raw.tol) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw UsageError("--tol expects name=value");
        const auto v = parse_double_list(t.substr(eq + 1), "--tol value");
        if (v.size() != 1) throw UsageError("--tol expects a single value");
        c.tolerances[t.substr(0, eq)] = v[0];
      }
      const auto center = parse_double_list(raw.center, "--center");
      if (center.size() != 3) throw UsageError("--center needs three components");
      c.evolve.center = {center[0], center[1], center[2]};
      c.evolve.width = raw.width;
      c.evolve.t_max = raw.t_max;
      c.evolve.steps = raw.steps;
      c.evolve.kg = raw.kg;
      c.evolve.kg_dir = raw.kg_dir;
    }
    return dispatch(c, raw.out.empty() ? out : err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace relqm::cli
