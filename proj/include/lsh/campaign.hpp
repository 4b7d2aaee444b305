#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsh/checks.hpp"
#include "lsh/field.hpp"
#include "lsh/integrate.hpp"
#include "lsh/measure.hpp"

namespace lsh {

/// Config problem with a location such as `checks[2].params.c (line 31)`.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A measure declaration: a built-in family or a combination of earlier
/// declarations. Only the fields relevant to `kind` are meaningful.
struct MeasureDecl {
  std::string name;
  std::string kind = "builtin";  ///< builtin | mix | product | convolve | perturb
  std::string family;            ///< builtin only
  std::size_t dim = 1;
  double sigma = 1.0;
  std::vector<double> mean;
  double c = 1.0;
  double a = 1.0;
  double alpha = 1.0;
  double radius = 1.0;
  std::vector<std::string> refs;
  double t = 0.5;
  double amplitude = 0.0;
  double frequency = 1.0;

  bool operator==(const MeasureDecl&) const = default;
};

struct FieldDecl {
  std::string name;
  std::string expr;

  bool operator==(const FieldDecl&) const = default;
};

struct CheckDecl {
  std::string name;
  std::string kind;
  std::string measure;              ///< empty for kinds without a measure
  std::vector<std::string> fields;
  bool expect_failure = false;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json quadrature = nlohmann::ordered_json::object();  ///< per-check overrides

  bool operator==(const CheckDecl&) const = default;
};

struct CampaignConfig {
  std::string name = "campaign";
  std::uint64_t seed = 1;
  std::string output_dir;
  QuadratureSpec quadrature;
  std::vector<MeasureDecl> measures;
  std::vector<FieldDecl> fields;
  std::vector<CheckDecl> checks;

  bool operator==(const CampaignConfig&) const = default;
};

/// Parses and validates a YAML config (grammar in docs/config.md).
CampaignConfig parse_config(const std::string& yaml_text);
CampaignConfig load_config(const std::string& path);
/// YAML text that parse_config maps back to an equal config.
std::string serialize_config(const CampaignConfig& config);
nlohmann::ordered_json to_json(const CampaignConfig& config);

/// Builds every declared measure and field (in declaration order).
std::map<std::string, Density> build_measures(const std::vector<MeasureDecl>& decls);
std::map<std::string, ScalarField> build_fields(const std::vector<FieldDecl>& decls);
Density build_measure(const MeasureDecl& decl, const std::map<std::string, Density>& built = {});

/// Parameter names accepted by a check kind (alphabetized).
std::vector<std::string> check_param_names(const std::string& kind);
bool check_needs_measure(const std::string& kind);
bool check_needs_fields(const std::string& kind);

/// Runs one declared check; one report per field (one in total for
/// best_constant and regularity). Errors become reports carrying `error`.
std::vector<CheckReport> run_check(const CheckDecl& decl, const std::map<std::string, Density>& measures,
                                   const std::map<std::string, ScalarField>& fields, const QuadratureSpec& base);

struct RunOptions {
  std::string output_dir;  ///< overrides the config and LSHLAB_OUTPUT_DIR
  int jobs = 1;
  bool write_files = true;
};

struct RunSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t expected_failures = 0;
  std::size_t unexpected = 0;
  std::size_t inconclusive = 0;
  std::size_t errors = 0;
};

struct RunResult {
  std::vector<CheckReport> reports;
  RunSummary summary;
  std::string output_dir;
  nlohmann::ordered_json report;
  int exit_code = 0;  ///< 0 iff every conclusive check matched its expectation and nothing errored
};

RunResult run_campaign(const CampaignConfig& config, const RunOptions& options = {});
/// Output directory: options, then the config, then LSHLAB_OUTPUT_DIR, then lshlab-out/<name>.
std::string resolve_output_dir(const CampaignConfig& config, const RunOptions& options);

/// Aligned text table of the reports.
std::string summary_text(const CampaignConfig& config, const RunResult& result);
/// CSV with columns check_id, r, alpha, q_of_r, deficit for one shc check.
std::string alpha_csv(const std::vector<CheckReport>& reports);

}  // namespace lsh
