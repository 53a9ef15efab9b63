#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "relqm_cli/cli.hpp"

namespace relqm::cli {

using nlohmann::json;

namespace {

// NaN and infinities have no JSON form; they serialize as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary(const std::vector<json>& checks) {
  std::size_t passed = 0;
  for (const auto& c : checks) passed += c.at("pass").get<bool>() ? 1 : 0;
  return json{{"passed", passed}, {"failed", checks.size() - passed}, {"all_pass", passed == checks.size()}};
}

json envelope(const RunConfig& config) {
  return json{{"schema", kReportSchema},
              {"tool_version", tool_version()},
              {"seed", config.seed},
              {"config", config_to_json(config)}};
}

json sections_json(const std::vector<ReportSection>& sections, std::vector<json>& checks) {
  json out = json::array();
  for (const auto& s : sections) {
    out.push_back({{"name", s.name}, {"available", s.available}, {"note", s.note}, {"checks", s.checks.size()}});
    for (const auto& c : s.checks) checks.push_back(check_to_json(c, s.name));
  }
  return out;
}

}  // namespace

json check_to_json(const CheckResult& c, const std::string& section) {
  json res = json::array();
  for (std::size_t i = 0; i < c.residuals.size(); ++i) {
    json r{{"n", c.residuals[i].n}, {"value", number(c.residuals[i].value)}};
    if (c.kind == CheckKind::upper_bound || c.kind == CheckKind::lower_bound) r["bound"] = number(c.bounds.at(i));
    res.push_back(r);
  }
  return json{{"section", section},
              {"name", c.name},
              {"paper_anchor", c.anchor},
              {"kind", to_string(c.kind)},
              {"residuals", res},
              {"order_estimate", c.order_estimate ? number(*c.order_estimate) : json(nullptr)},
              {"pass", c.pass},
              {"note", c.note}};
}

json verification_to_json(const RunConfig& config, const VerificationReport& report) {
  json j = envelope(config);
  j["triplet_class"] = report.triplet_class;
  std::vector<json> checks;
  j["sections"] = sections_json(report.sections, checks);
  j["checks"] = checks;
  j["summary"] = summary(checks);
  return j;
}

json localizability_to_json(const RunConfig& config, const std::vector<LocalizabilityReport>& reports,
                            const std::vector<ReportSection>& sections) {
  json j = envelope(config);
  j["triplet_class"] = "massless_pm";
  json exps = json::array();
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
  };
  for (const auto& r : reports) {
    exps.push_back({{"m", r.m},
                    {"n", r.resolutions},
                    {"spacing", arr(r.spacings)},
                    {"raw_defect", arr(r.raw_defect)},
                    {"optimized_defect", arr(r.optimized_defect)},
                    {"commutativity_defect", arr(r.commutativity_defect)},
                    {"ccr_defect", arr(r.ccr_defect)},
                    {"correction_size", arr(r.correction_size)},
                    {"raw_slope", number(r.raw_slope)},
                    {"optimized_slope", number(r.optimized_slope)},
                    {"raw_fine_slope", number(r.raw_fine_slope)},
                    {"optimized_fine_slope", number(r.optimized_fine_slope)},
                    {"threshold", number(r.threshold)},
                    {"verdict", to_string(r.verdict)},
                    {"rationale", r.rationale}});
  }
  j["localizability"] = exps;
  std::vector<json> checks;
  j["sections"] = sections_json(sections, checks);
  j["checks"] = checks;
  j["summary"] = summary(checks);
  return j;
}

json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open report '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("report '" + path + "' is not valid JSON: " + e.what());
  }
  static const std::set<std::string> allowed = {"schema", "tool_version", "seed", "config", "triplet_class",
                                                "sections", "checks", "summary", "localizability", "trajectory"};
  if (!j.is_object()) throw UsageError("report must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw UsageError("unknown field '" + k + "' in report");
  if (!j.contains("schema") || j.at("schema") != kReportSchema)
    throw UsageError(std::string("unsupported report schema; expected ") + kReportSchema);
  if (!j.contains("config")) throw UsageError("report has no embedded config");
  config_from_json(j.at("config"));
  if (j.contains("checks")) {
    static const std::set<std::string> check_keys = {"section", "name", "paper_anchor", "kind", "residuals",
                                                     "order_estimate", "pass", "note"};
    for (const auto& c : j.at("checks")) {
      if (!c.is_object()) throw UsageError("check entries must be objects");
      for (const auto& [k, v] : c.items())
        if (!check_keys.count(k)) throw UsageError("unknown field '" + k + "' in check");
    }
  }
  return j;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace relqm::cli
