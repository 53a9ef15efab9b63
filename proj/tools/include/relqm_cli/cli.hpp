#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relqm/grid.hpp"
#include "relqm/position.hpp"
#include "relqm/triplets.hpp"
#include "relqm/verify.hpp"

namespace relqm::cli {

inline constexpr const char* kReportSchema = "relqm.report/1";

/// Exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

std::string tool_version();

/// Invalid flags, invalid class/grid combinations, boundary violations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvolveConfig {
  Vec3 center{1.0, 0.0, 0.0};
  double width = 1.0;
  double t_max = 2.0;
  int steps = 50;
  bool kg = false;
  std::string kg_dir;
};

/// Everything a command needs; echoed verbatim into its report.
struct RunConfig {
  std::string command;
  std::string triplet_class;
  std::vector<int> m;
  std::vector<int> pair;
  std::vector<int> resolutions;
  double p_max = 6.0;
  double mu = 1.0;
  std::vector<std::string> suites;
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 20240607;
  bool expect_obstructed = false;
  std::string nw_form = "factored";
  std::string out;
  EvolveConfig evolve;
};

/// Fills command defaults and checks the configuration against the class
/// constraints. Throws UsageError.
void validate(RunConfig& config);

/// The concrete class of a validated config; m and pair by index.
TripletClass resolve_class(const RunConfig& config, std::size_t m_index = 0, std::size_t pair_index = 0);
TolerancePolicy policy_from(const RunConfig& config);
NwForm form_from(const RunConfig& config);

nlohmann::json config_to_json(const RunConfig& config);
/// Strict: unknown or mistyped fields throw UsageError.
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json check_to_json(const CheckResult& check, const std::string& section);
nlohmann::json verification_to_json(const RunConfig& config, const VerificationReport& report);
nlohmann::json localizability_to_json(const RunConfig& config, const std::vector<LocalizabilityReport>& reports,
                                      const std::vector<ReportSection>& sections);
/// Parses a report and validates its top-level layout and schema version.
nlohmann::json read_report(const std::string& path);

/// temp file + rename.
void write_atomic(const std::string& path, const std::string& content);

int cmd_verify(const RunConfig& config, std::ostream& log);
int cmd_localizability(const RunConfig& config, std::ostream& log);
int cmd_evolve(const RunConfig& config, std::ostream& log);
int dispatch(RunConfig config, std::ostream& log);

/// Full command-line entry point; returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace relqm::cli
