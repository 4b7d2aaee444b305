// lshlab: run check campaigns and ad hoc checks from the command line.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lsh/campaign.hpp"
#include "lsh/checks.hpp"
#include "lsh/expr.hpp"
#include "lsh/measure.hpp"

using namespace lsh;

namespace {

struct MeasureFlags {
  std::string family = "gaussian";
  std::size_t dim = 1;
  std::vector<std::string> options;  // key=value, e.g. sigma=0.5
};

void add_measure_flags(CLI::App* cmd, MeasureFlags& m) {
  cmd->add_option("--measure", m.family, "built-in family: gaussian, gen_exponential, poly_tail, uniform_ball")
      ->capture_default_str();
  cmd->add_option("--dim", m.dim, "dimension")->capture_default_str()->check(CLI::Range(1, static_cast<int>(kMaxDim)));
  cmd->add_option("--measure-opt", m.options, "family parameter key=value (sigma, c, a, alpha, radius)");
}

std::pair<std::string, std::string> split_kv(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

// The ad hoc commands go through the same config parser as campaigns, so
// they get identical validation and diagnostics.
std::string measure_yaml(const MeasureFlags& m) {
  std::string y = fmt::format("measures:\n  - name: mu\n    family: {}\n", m.family);
  if (m.family != "poly_tail") y += fmt::format("    dim: {}\n", m.dim);
  for (const auto& o : m.options) {
    const auto [k, v] = split_kv(o);
    y += fmt::format("    {}: {}\n", k, v);
  }
  return y;
}

Density build_single_measure(const MeasureFlags& m) {
  const CampaignConfig c = parse_config(measure_yaml(m));
  return build_measures(c.measures).at("mu");
}

std::string fields_yaml(const std::vector<std::string>& exprs) {
  std::string y = "fields:\n";
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    std::string quoted;
    for (const char ch : exprs[i]) quoted += ch == '"' ? std::string("\\\"") : std::string(1, ch);
    y += fmt::format("  - name: f{}\n    expr: \"{}\"\n", i + 1, quoted);
  }
  return y;
}

std::string short_number(double v) {
  std::string s = fmt::format("{:.6f}", v);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

int cmd_run(const std::string& path, const std::string& output_dir, int jobs) {
  const CampaignConfig cfg = load_config(path);
  RunOptions o;
  o.output_dir = output_dir;
  o.jobs = jobs;
  const RunResult r = run_campaign(cfg, o);
  std::cout << summary_text(cfg, r);
  std::cout << "wrote " << r.output_dir << "/report.json\n";
  return r.exit_code;
}

int cmd_check(const std::string& kind, const MeasureFlags& m, const std::vector<std::string>& fields,
              const std::vector<std::string>& params, bool expect_fail, bool json) {
  std::string y = "name: adhoc\n";
  if (check_needs_measure(kind)) y += measure_yaml(m);
  if (check_needs_fields(kind)) y += fields_yaml(fields);
  y += fmt::format("checks:\n  - name: {}\n    kind: {}\n", kind, kind);
  if (check_needs_measure(kind)) y += "    measure: mu\n";
  if (check_needs_fields(kind)) {
    y += "    fields: [";
    for (std::size_t i = 0; i < fields.size(); ++i) y += fmt::format("{}f{}", i ? ", " : "", i + 1);
    y += "]\n";
  }
  if (expect_fail) y += "    expect: fail\n";
  if (!params.empty()) {
    y += "    params:\n";
    for (const auto& p : params) {
      const auto [k, v] = split_kv(p);
      y += fmt::format("      {}: {}\n", k, v);
    }
  }
  const CampaignConfig cfg = parse_config(y);
  RunOptions o;
  o.write_files = false;
  const RunResult r = run_campaign(cfg, o);
  if (json) {
    std::cout << r.report["reports"].dump(2) << "\n";
  } else {
    std::cout << summary_text(cfg, r);
  }
  return r.exit_code;
}

int cmd_constants(const MeasureFlags& m, double p, const std::vector<double>& a_list, const std::vector<double>& s_list) {
  const Density mu = build_single_measure(m);
  const bool single = a_list.size() == 1 && s_list.size() == 1;
  int status = 0;
  for (const double a : a_list) {
    for (const double s : s_list) {
      const RegularityEstimate e = estimate_regularity(mu, p, a, s);
      std::string value;
      if (e.finite) {
        value = short_number(e.value);
      } else {
        value = fmt::format("inf ({}; witness x = {})", e.failure, fmt::join(e.x_star.to_vector(), ", "));
        status = 1;
      }
      if (single) {
        std::cout << value << "\n";
      } else {
        std::cout << fmt::format("p={} a={} s={}  C={}\n", short_number(p), short_number(a), short_number(s), value);
      }
    }
  }
  return status;
}

int cmd_best_c(const MeasureFlags& m, const std::string& mode, std::vector<std::string> fields, double c_min,
               double c_max, double resolution) {
  const Density mu = build_single_measure(m);
  if (fields.empty()) {
    for (const char* l : {"0.4", "0.8", "1.2"}) {
      std::string e = "log_linear(";
      for (std::size_t i = 0; i < mu.dim(); ++i) e += fmt::format("{}{}", i ? ", " : "", i == 0 ? l : "0");
      fields.push_back(e + ")");
    }
  }
  std::vector<ScalarField> battery;
  for (const auto& f : fields) battery.push_back(parse_field(f));
  const BestConstantResult r =
      best_constant(battery, mu, parse_best_constant_mode(mode), c_min, c_max, QuadratureSpec{}, resolution);
  std::cout << fmt::format("{:.3f}", r.c) << "\n";
  if (r.lower_bound_only) std::cerr << "note: no c in range passed; this is only a lower bound\n";
  if (r.vacuous) std::cerr << "note: c_min already passes\n";
  return 0;
}

int cmd_list() {
  std::cout << "checks:\n";
  for (const auto& k : check_kinds()) {
    std::string params;
    for (const auto& p : check_param_names(k)) params += (params.empty() ? "" : ", ") + p;
    std::cout << fmt::format("  {:<27} {}\n", k, params);
  }
  std::cout << "fields:\n";
  for (const auto& b : field_builders()) std::cout << fmt::format("  {:<46} {}\n", b.signature, b.summary);
  std::cout << "measures:\n";
  for (const char* f : {"gaussian", "gen_exponential", "poly_tail", "uniform_ball"}) std::cout << "  " << f << "\n";
  std::cout << "measure combinators:\n";
  for (const char* f : {"convolve", "mix", "perturb", "product"}) std::cout << "  " << f << "\n";
  std::cout << "quadrature schemes:\n";
  for (const char* s : {"adaptive_1d", "automatic", "gauss_hermite", "monte_carlo", "tensor_trapezoid"}) {
    std::cout << "  " << s << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lshlab: numerical checks of log-Sobolev and hypercontractivity inequalities on the LSH cone"};
  app.require_subcommand(1);
  int status = 0;

  std::string config_path, output_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run a campaign config");
  run->add_option("config", config_path, "YAML campaign file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "output directory (default: config, then $LSHLAB_OUTPUT_DIR)");
  run->add_option("--jobs,-j", jobs, "concurrent checks")->capture_default_str()->check(CLI::PositiveNumber);

  std::string kind;
  MeasureFlags check_measure;
  std::vector<std::string> check_fields, check_params;
  bool expect_fail = false, as_json = false;
  auto* check = app.add_subcommand("check", "run one check ad hoc");
  check->add_option("kind", kind, "check kind (see `lshlab list`)")->required();
  add_measure_flags(check, check_measure);
  check->add_option("--field", check_fields, "field expression, repeatable");
  check->add_option("--param", check_params, "check parameter key=value, repeatable");
  check->add_flag("--expect-fail", expect_fail, "the check is expected to fail");
  check->add_flag("--json", as_json, "print the full reports as JSON");

  MeasureFlags const_measure;
  double p = 0.0;
  std::vector<double> a_list{2.0}, s_list{0.0};
  auto* constants = app.add_subcommand("constants", "regularity constants C^p(a, s) of a measure");
  add_measure_flags(constants, const_measure);
  constants->add_option("--p", p, "weight exponent")->capture_default_str();
  constants->add_option("--a", a_list, "dilation factor(s)")->capture_default_str();
  constants->add_option("--s", s_list, "shift radius(es)")->capture_default_str();

  MeasureFlags bc_measure;
  std::string mode = "slsi";
  std::vector<std::string> bc_fields;
  double c_min = 0.25, c_max = 4.0, resolution = 1e-4;
  auto* best = app.add_subcommand("best-c", "smallest c at which a battery passes");
  add_measure_flags(best, bc_measure);
  best->add_option("--mode", mode, "slsi or shc")->capture_default_str()->check(CLI::IsMember({"slsi", "shc"}));
  best->add_option("--field", bc_fields, "battery member (default: log_linear 0.4, 0.8, 1.2)");
  best->add_option("--c-min", c_min)->capture_default_str();
  best->add_option("--c-max", c_max)->capture_default_str();
  best->add_option("--resolution", resolution)->capture_default_str();

  auto* list = app.add_subcommand("list", "list check kinds, field builders, measures and schemes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) status = cmd_run(config_path, output_dir, jobs);
    if (check->parsed()) {
      if (check_needs_fields(kind) && check_fields.empty()) throw CLI::ValidationError("--field", "at least one is required");
      status = cmd_check(kind, check_measure, check_fields, check_params, expect_fail, as_json);
    }
    if (constants->parsed()) status = cmd_constants(const_measure, p, a_list, s_list);
    if (best->parsed()) status = cmd_best_c(bc_measure, mode, bc_fields, c_min, c_max, resolution);
    if (list->parsed()) status = cmd_list();
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "lshlab: " << e.what() << "\n";
    return 2;
  }
  return status;
}
