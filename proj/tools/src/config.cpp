#include <algorithm>
#include <set>

#include "relqm_cli/cli.hpp"

namespace relqm::cli {

using nlohmann::json;

std::string tool_version() { return RELQM_VERSION; }

namespace {

const std::set<std::string> kCommands = {"verify", "localizability", "evolve"};

bool is_massless_pm(const std::string& tag) { return tag == "massless_pm"; }

void set_policy_field(TolerancePolicy& p, const std::string& name, double v) {
  static const std::map<std::string, double TolerancePolicy::*> fields = {
      {"exact", &TolerancePolicy::exact},
      {"order_band", &TolerancePolicy::order_band},
      {"min_decay_order", &TolerancePolicy::min_decay_order},
      {"flat_slope", &TolerancePolicy::flat_slope},
      {"helicity_factor", &TolerancePolicy::helicity_factor},
      {"spectrum_eps", &TolerancePolicy::spectrum_eps},
      {"fft_factor", &TolerancePolicy::fft_factor},
      {"fft_floor", &TolerancePolicy::fft_floor},
      {"ehrenfest_relative", &TolerancePolicy::ehrenfest_relative},
      {"group_translation", &TolerancePolicy::group_translation},
      {"group_norm", &TolerancePolicy::group_norm},
      {"group_interp_factor", &TolerancePolicy::group_interp_factor},
  };
  const auto it = fields.find(name);
  if (it == fields.end()) throw UsageError("unknown tolerance '" + name + "'");
  p.*(it->second) = v;
}

}  // namespace

TolerancePolicy policy_from(const RunConfig& c) {
  TolerancePolicy p;
  for (const auto& [k, v] : c.tolerances) {
    if (k == "obstruction_threshold") continue;
    set_policy_field(p, k, v);
  }
  return p;
}

NwForm form_from(const RunConfig& c) {
  if (c.nw_form == "factored") return NwForm::factored;
  if (c.nw_form == "direct") return NwForm::direct;
  throw UsageError("unknown position form '" + c.nw_form + "' (factored, direct)");
}

TripletClass resolve_class(const RunConfig& c, std::size_t mi, std::size_t pi) {
  std::string tag = c.triplet_class;
  if (is_massless_pm(tag)) {
    tag += ":m=" + std::to_string(c.m.at(mi));
    if (pi < c.pair.size()) tag += ",pair=" + std::to_string(c.pair[pi]);
  }
  try {
    return TripletClass::parse(tag, c.mu);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const UnavailableInSource& e) {
    throw UsageError(e.what());
  }
}

void validate(RunConfig& c) {
  if (!kCommands.count(c.command)) throw UsageError("unknown command '" + c.command + "'");
  if (c.command == "localizability") {
    if (c.triplet_class.empty()) c.triplet_class = "massless_pm";
    if (c.triplet_class != "massless_pm") throw UsageError("localizability runs on massless_pm only");
    if (c.resolutions.empty()) c.resolutions = {16, 24, 32};
    if (c.resolutions.size() < 3) throw UsageError("localizability needs at least three resolutions");
  }
  if (c.triplet_class.empty()) throw UsageError("--class is required");
  if (c.resolutions.empty()) c.resolutions = c.command == "evolve" ? std::vector<int>{32} : std::vector<int>{16, 32};
  if (c.command == "evolve" && c.resolutions.size() != 1) throw UsageError("evolve takes a single --n");
  if (c.command == "verify" && c.suites.empty())
    c.suites = {"exact", "lie", "inversion", "spectrum", "covariance"};
  for (const auto& s : c.suites)
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      throw UsageError("unknown suite '" + s + "'");
  if (is_massless_pm(c.triplet_class)) {
    if (c.m.empty()) throw UsageError("--m is required for massless_pm");
    if (c.command != "localizability" && c.m.size() != 1) throw UsageError("--m takes a single value here");
    if (c.command != "localizability" && c.pair.size() > 1) throw UsageError("--pair takes a single value here");
  } else {
    if (!c.m.empty()) throw UsageError("--m applies to massless_pm only");
    if (!c.pair.empty()) throw UsageError("--pair applies to massless_pm only");
  }
  if (c.command == "localizability" && !c.pair.empty() &&
      std::find(c.m.begin(), c.m.end(), 0) == c.m.end())
    throw UsageError("--pair applies to m = 0 only");
  for (int n : c.resolutions)
    if (n < 8 || n % 2 != 0) throw UsageError("grid size " + std::to_string(n) + " must be even and >= 8");
  if (!(c.p_max > 0.0)) throw UsageError("--pmax must be positive");
  if (!(c.mu > 0.0)) throw UsageError("--mu must be positive");
  if (c.evolve.steps < 1) throw UsageError("--steps must be >= 1");
  if (!(c.evolve.width > 0.0)) throw UsageError("--width must be positive");
  if (!(c.evolve.t_max >= 0.0)) throw UsageError("--t-max must be >= 0");
  if (c.evolve.kg) {
    if (c.command != "evolve") throw UsageError("--kg applies to evolve");
    if (c.triplet_class != "massive_pm_1" && c.triplet_class != "massive_pm_2")
      throw UsageError("--kg needs massive_pm_1 or massive_pm_2");
    if (c.evolve.kg_dir.empty()) throw UsageError("--kg needs --kg-dir");
  }
  for (const auto& [k, v] : c.tolerances) {
    if (k == "obstruction_threshold") {
      if (!(v > 0.0)) throw UsageError("obstruction_threshold must be positive");
      continue;
    }
    TolerancePolicy p;
    set_policy_field(p, k, v);
  }
  form_from(c);
  const std::size_t pairs = std::max<std::size_t>(1, c.pair.size());
  for (std::size_t i = 0; i < std::max<std::size_t>(1, c.m.size()); ++i)
    for (std::size_t p = 0; p < pairs; ++p) {
      if (c.command == "localizability" && c.m.at(i) != 0 && p > 0) continue;
      RunConfig tmp = c;
      if (c.command == "localizability" && c.m.at(i) != 0) tmp.pair.clear();
      const TripletClass cls = resolve_class(tmp, i, p);
      (void)cls;
    }
}

json config_to_json(const RunConfig& c) {
  json t = json::object();
  for (const auto& [k, v] : c.tolerances) t[k] = v;
  return json{
      {"command", c.command},
      {"class", c.triplet_class},
      {"m", c.m},
      {"pair", c.pair},
      {"n", c.resolutions},
      {"p_max", c.p_max},
      {"mu", c.mu},
      {"suites", c.suites},
      {"tolerances", t},
      {"seed", c.seed},
      {"expect_obstructed", c.expect_obstructed},
      {"nw_form", c.nw_form},
      {"out", c.out},
      {"evolve",
       {{"center", {c.evolve.center[0], c.evolve.center[1], c.evolve.center[2]}},
        {"width", c.evolve.width},
        {"t_max", c.evolve.t_max},
        {"steps", c.evolve.steps},
        {"kg", c.evolve.kg},
        {"kg_dir", c.evolve.kg_dir}}},
  };
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw UsageError("unknown field '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"command", "class", "m", "pair", "n", "p_max", "mu", "suites", "tolerances", "seed",
                  "expect_obstructed", "nw_form", "out", "evolve"},
                 "config");
  RunConfig c;
  read(j, "command", c.command);
  read(j, "class", c.triplet_class);
  read(j, "m", c.m);
  read(j, "pair", c.pair);
  read(j, "n", c.resolutions);
  read(j, "p_max", c.p_max);
  read(j, "mu", c.mu);
  read(j, "suites", c.suites);
  read(j, "tolerances", c.tolerances);
  read(j, "seed", c.seed);
  read(j, "expect_obstructed", c.expect_obstructed);
  read(j, "nw_form", c.nw_form);
  read(j, "out", c.out);
  if (j.contains("evolve")) {
    const json& e = j.at("evolve");
    reject_unknown(e, {"center", "width", "t_max", "steps", "kg", "kg_dir"}, "config.evolve");
    std::vector<double> center{c.evolve.center[0], c.evolve.center[1], c.evolve.center[2]};
    read(e, "center", center);
    if (center.size() != 3) throw UsageError("evolve.center needs three components");
    c.evolve.center = {center[0], center[1], center[2]};
    read(e, "width", c.evolve.width);
    read(e, "t_max", c.evolve.t_max);
    read(e, "steps", c.evolve.steps);
    read(e, "kg", c.evolve.kg);
    read(e, "kg_dir", c.evolve.kg_dir);
  }
  return c;
}

}  // namespace relqm::cli
