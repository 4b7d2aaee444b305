#include "lsh/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "lsh/error.hpp"
#include "lsh/expr.hpp"
#include "lsh/random.hpp"

namespace lsh {

namespace {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// YAML reading with located diagnostics

std::string where(const std::string& path, const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return path;
  return fmt::format("{} (line {})", path, m.line + 1);
}

[[noreturn]] void bad(const std::string& path, const YAML::Node& node, const std::string& what) {
  throw ConfigError(fmt::format("{}: {}", where(path, node), what));
}

void require_map(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) bad(path, n, "expected a mapping");
}

void allow_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& keys) {
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    if (!keys.count(k)) {
      std::string list;
      for (const auto& a : keys) list += (list.empty() ? "" : ", ") + a;
      bad(path + "." + k, kv.first, fmt::format("unknown key '{}' (allowed: {})", k, list));
    }
  }
}

std::string get_string(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) bad(path, n, "expected a string");
  return n.as<std::string>();
}

double get_double(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) bad(path, n, "expected a number");
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    bad(path, n, fmt::format("expected a number, got '{}'", n.Scalar()));
  }
}

std::uint64_t get_uint(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) bad(path, n, "expected a non-negative integer");
  try {
    return n.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    bad(path, n, fmt::format("expected a non-negative integer, got '{}'", n.Scalar()));
  }
}

std::vector<std::string> get_string_list(const YAML::Node& n, const std::string& path) {
  std::vector<std::string> out;
  if (n.IsScalar()) {
    out.push_back(n.as<std::string>());
    return out;
  }
  if (!n.IsSequence()) bad(path, n, "expected a list of names");
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(get_string(n[i], fmt::format("{}[{}]", path, i)));
  return out;
}

bool looks_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

// Typed scalars: bool, integer, real, else string. Quoted scalars stay strings.
ojson to_ojson(const YAML::Node& n, const std::string& path) {
  if (n.IsNull()) return nullptr;
  if (n.IsSequence()) {
    ojson a = ojson::array();
    for (std::size_t i = 0; i < n.size(); ++i) a.push_back(to_ojson(n[i], fmt::format("{}[{}]", path, i)));
    return a;
  }
  if (n.IsMap()) {
    ojson o = ojson::object();
    for (const auto& kv : n) {
      const std::string k = kv.first.as<std::string>();
      o[k] = to_ojson(kv.second, path + "." + k);
    }
    return o;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;
  if (s == "true") return true;
  if (s == "false") return false;
  if (looks_integer(s)) {
    try {
      return std::stoll(s);
    } catch (const std::out_of_range&) {
      bad(path, n, "integer out of range");
    }
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
  return s;
}

// ---------------------------------------------------------------------------
// Measures

std::set<std::string> family_keys(const std::string& family) {
  if (family == "gaussian") return {"name", "family", "dim", "sigma", "mean"};
  if (family == "gen_exponential") return {"name", "family", "dim", "c", "a"};
  if (family == "poly_tail") return {"name", "family", "alpha"};
  if (family == "uniform_ball") return {"name", "family", "dim", "radius"};
  return {};
}

MeasureDecl parse_measure(const YAML::Node& n, const std::string& path, const std::set<std::string>& known) {
  require_map(n, path);
  MeasureDecl d;
  if (!n["name"]) bad(path, n, "missing 'name'");
  d.name = get_string(n["name"], path + ".name");
  if (known.count(d.name)) bad(path + ".name", n["name"], fmt::format("duplicate measure '{}'", d.name));

  int forms = 0;
  for (const char* k : {"family", "mix", "product", "convolve", "perturb"}) forms += n[k] ? 1 : 0;
  if (forms != 1) bad(path, n, "exactly one of family, mix, product, convolve, perturb is required");

  auto refs = [&](const char* key, std::size_t count) {
    const std::string p = path + "." + key;
    d.refs = get_string_list(n[key], p);
    if (d.refs.size() != count) bad(p, n[key], fmt::format("expected {} measure name(s)", count));
    for (std::size_t i = 0; i < d.refs.size(); ++i) {
      if (!known.count(d.refs[i])) {
        bad(p, n[key], fmt::format("undeclared measure '{}' (declare it earlier in 'measures')", d.refs[i]));
      }
    }
  };

  if (n["family"]) {
    d.kind = "builtin";
    d.family = get_string(n["family"], path + ".family");
    const auto keys = family_keys(d.family);
    if (keys.empty()) {
      bad(path + ".family", n["family"],
          fmt::format("unknown family '{}' (gaussian, gen_exponential, poly_tail, uniform_ball)", d.family));
    }
    allow_keys(n, path, keys);
    if (n["dim"]) {
      const std::uint64_t dim = get_uint(n["dim"], path + ".dim");
      if (dim < 1 || dim > kMaxDim) bad(path + ".dim", n["dim"], fmt::format("dim must be in [1, {}]", kMaxDim));
      d.dim = static_cast<std::size_t>(dim);
    }
    if (n["sigma"]) d.sigma = get_double(n["sigma"], path + ".sigma");
    if (n["mean"]) {
      if (!n["mean"].IsSequence()) bad(path + ".mean", n["mean"], "expected a list of numbers");
      for (std::size_t i = 0; i < n["mean"].size(); ++i) d.mean.push_back(get_double(n["mean"][i], fmt::format("{}.mean[{}]", path, i)));
      if (d.mean.size() != d.dim) bad(path + ".mean", n["mean"], fmt::format("mean has {} entries but dim is {}", d.mean.size(), d.dim));
    }
    if (n["c"]) d.c = get_double(n["c"], path + ".c");
    if (n["a"]) d.a = get_double(n["a"], path + ".a");
    if (n["alpha"]) d.alpha = get_double(n["alpha"], path + ".alpha");
    if (n["radius"]) d.radius = get_double(n["radius"], path + ".radius");
  } else if (n["mix"]) {
    d.kind = "mix";
    allow_keys(n, path, {"name", "mix", "t"});
    refs("mix", 2);
    if (n["t"]) d.t = get_double(n["t"], path + ".t");
    if (!(d.t >= 0.0 && d.t <= 1.0)) bad(path + ".t", n["t"], "t must be in [0, 1]");
  } else if (n["product"]) {
    d.kind = "product";
    allow_keys(n, path, {"name", "product"});
    refs("product", 2);
  } else if (n["convolve"]) {
    d.kind = "convolve";
    allow_keys(n, path, {"name", "convolve"});
    refs("convolve", 2);
  } else {
    d.kind = "perturb";
    allow_keys(n, path, {"name", "perturb", "amplitude", "frequency"});
    refs("perturb", 1);
    if (n["amplitude"]) d.amplitude = get_double(n["amplitude"], path + ".amplitude");
    if (n["frequency"]) d.frequency = get_double(n["frequency"], path + ".frequency");
    if (!(std::abs(d.amplitude) < 1.0)) bad(path + ".amplitude", n["amplitude"], "|amplitude| must be < 1");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Checks

bool no_measure_kind(const std::string& kind) {
  return kind == "spherical_monotonicity" || kind == "radial_euler_bound" || kind == "lsh_test";
}

const std::set<std::string> kQuadratureKeys = {"scheme", "nodes_per_axis", "truncation_radius", "mc_samples", "seed",
                                               "target_rel_tol"};

QuadratureSpec parse_quadrature(const YAML::Node& n, const std::string& path) {
  require_map(n, path);
  allow_keys(n, path, kQuadratureKeys);
  try {
    return quadrature_spec_from_json(to_ojson(n, path));
  } catch (const std::exception& e) {
    bad(path, n, e.what());
  }
}

CheckDecl parse_check(const YAML::Node& n, const std::string& path, const std::set<std::string>& measures,
                      const std::set<std::string>& fields, const std::set<std::string>& names) {
  require_map(n, path);
  allow_keys(n, path, {"name", "kind", "measure", "fields", "expect", "params", "quadrature"});
  CheckDecl d;
  if (!n["kind"]) bad(path, n, "missing 'kind'");
  d.kind = get_string(n["kind"], path + ".kind");
  const auto kinds = check_kinds();
  if (std::find(kinds.begin(), kinds.end(), d.kind) == kinds.end()) {
    std::string list;
    for (const auto& k : kinds) list += (list.empty() ? "" : ", ") + k;
    bad(path + ".kind", n["kind"], fmt::format("unknown check kind '{}' (one of {})", d.kind, list));
  }
  d.name = n["name"] ? get_string(n["name"], path + ".name") : d.kind;
  if (names.count(d.name)) bad(path + ".name", n["name"] ? n["name"] : n, fmt::format("duplicate check name '{}'", d.name));

  if (check_needs_measure(d.kind)) {
    if (!n["measure"]) bad(path, n, fmt::format("check kind '{}' needs a 'measure'", d.kind));
    d.measure = get_string(n["measure"], path + ".measure");
    if (!measures.count(d.measure)) bad(path + ".measure", n["measure"], fmt::format("undeclared measure '{}'", d.measure));
  } else if (n["measure"]) {
    bad(path + ".measure", n["measure"], fmt::format("check kind '{}' takes no measure", d.kind));
  }

  if (check_needs_fields(d.kind)) {
    if (!n["fields"]) bad(path, n, fmt::format("check kind '{}' needs 'fields'", d.kind));
    d.fields = get_string_list(n["fields"], path + ".fields");
    if (d.fields.empty()) bad(path + ".fields", n["fields"], "at least one field is required");
    for (std::size_t i = 0; i < d.fields.size(); ++i) {
      if (!fields.count(d.fields[i])) {
        bad(fmt::format("{}.fields[{}]", path, i), n["fields"], fmt::format("undeclared field '{}'", d.fields[i]));
      }
    }
  } else if (n["fields"]) {
    bad(path + ".fields", n["fields"], fmt::format("check kind '{}' takes no fields", d.kind));
  }

  if (n["expect"]) {
    const std::string e = get_string(n["expect"], path + ".expect");
    if (e != "pass" && e != "fail") bad(path + ".expect", n["expect"], "expect must be 'pass' or 'fail'");
    d.expect_failure = e == "fail";
  }

  if (n["params"]) {
    const YAML::Node p = n["params"];
    require_map(p, path + ".params");
    const auto names_ok = check_param_names(d.kind);
    for (const auto& kv : p) {
      const std::string k = kv.first.as<std::string>();
      if (std::find(names_ok.begin(), names_ok.end(), k) == names_ok.end()) {
        std::string list;
        for (const auto& a : names_ok) list += (list.empty() ? "" : ", ") + a;
        bad(path + ".params." + k, kv.first, fmt::format("unknown parameter '{}' for {} (allowed: {})", k, d.kind, list));
      }
      d.params[k] = to_ojson(kv.second, path + ".params." + k);
    }
  }
  if (n["quadrature"]) {
    const YAML::Node q = n["quadrature"];
    parse_quadrature(q, path + ".quadrature");
    d.quadrature = to_ojson(q, path + ".quadrature");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Serialization

std::string yaml_number(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  std::string s = fmt::format("{:.17g}", v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string yaml_string(const std::string& s) {
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string yaml_value(const ojson& j) {
  switch (j.type()) {
    case ojson::value_t::null: return "null";
    case ojson::value_t::boolean: return j.get<bool>() ? "true" : "false";
    case ojson::value_t::number_integer: return std::to_string(j.get<std::int64_t>());
    case ojson::value_t::number_unsigned: return std::to_string(j.get<std::uint64_t>());
    case ojson::value_t::number_float: return yaml_number(j.get<double>());
    case ojson::value_t::string: return yaml_string(j.get<std::string>());
    case ojson::value_t::array: {
      std::string s = "[";
      for (std::size_t i = 0; i < j.size(); ++i) s += (i ? ", " : "") + yaml_value(j[i]);
      return s + "]";
    }
    case ojson::value_t::object: {
      std::string s = "{";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        s += (first ? "" : ", ") + yaml_string(k) + ": " + yaml_value(v);
        first = false;
      }
      return s + "}";
    }
    default: return "null";
  }
}

ojson measure_decl_json(const MeasureDecl& d) {
  ojson j;
  j["name"] = d.name;
  if (d.kind == "builtin") {
    j["family"] = d.family;
    if (d.family != "poly_tail") j["dim"] = d.dim;
    if (d.family == "gaussian") {
      j["sigma"] = d.sigma;
      if (!d.mean.empty()) j["mean"] = d.mean;
    } else if (d.family == "gen_exponential") {
      j["c"] = d.c;
      j["a"] = d.a;
    } else if (d.family == "poly_tail") {
      j["alpha"] = d.alpha;
    } else if (d.family == "uniform_ball") {
      j["radius"] = d.radius;
    }
  } else if (d.kind == "mix") {
    j["mix"] = d.refs;
    j["t"] = d.t;
  } else if (d.kind == "perturb") {
    j["perturb"] = d.refs.empty() ? "" : d.refs[0];
    j["amplitude"] = d.amplitude;
    j["frequency"] = d.frequency;
  } else {
    j[d.kind] = d.refs;
  }
  return j;
}

ojson check_decl_json(const CheckDecl& d) {
  ojson j;
  j["name"] = d.name;
  j["kind"] = d.kind;
  if (!d.measure.empty()) j["measure"] = d.measure;
  if (!d.fields.empty()) j["fields"] = d.fields;
  j["expect"] = d.expect_failure ? "fail" : "pass";
  if (!d.params.empty()) j["params"] = d.params;
  if (!d.quadrature.empty()) j["quadrature"] = d.quadrature;
  return j;
}

// ---------------------------------------------------------------------------
// Running

double param(const ojson& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  const ojson& v = p.at(key);
  if (!v.is_number()) throw std::invalid_argument(fmt::format("parameter '{}' must be a number", key));
  return v.get<double>();
}

std::vector<double> param_list(const ojson& p, const char* key, std::vector<double> fallback) {
  if (!p.contains(key)) return fallback;
  const ojson& v = p.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw std::invalid_argument(fmt::format("parameter '{}' must be a list of numbers", key));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw std::invalid_argument(fmt::format("parameter '{}' must be a list of numbers", key));
    out.push_back(x.get<double>());
  }
  return out;
}

int param_int(const ojson& p, const char* key, int fallback) {
  const double v = param(p, key, fallback);
  if (v != std::floor(v)) throw std::invalid_argument(fmt::format("parameter '{}' must be an integer", key));
  return static_cast<int>(v);
}

CheckOptions check_options(const ojson& p) {
  CheckOptions o;
  o.rel_tol = param(p, "rel_tol", o.rel_tol);
  o.noise_factor = param(p, "noise_factor", o.noise_factor);
  if (p.contains("override_preconditions")) o.override_preconditions = p.at("override_preconditions").get<bool>();
  return o;
}

QuadratureSpec effective_spec(const CheckDecl& decl, const QuadratureSpec& base) {
  if (decl.quadrature.empty()) return base;
  ojson j = to_json(base);
  for (const auto& [k, v] : decl.quadrature.items()) j[k] = v;
  return quadrature_spec_from_json(j);
}

CheckReport error_report(const CheckDecl& decl, const std::string& what) {
  CheckReport r;
  r.check_id = decl.kind;
  r.outcome = Outcome::failed;
  r.error = what;
  return r;
}

// One unit of work: a (check, field) pair, or the whole check for kinds
// that take the battery at once.
struct Job {
  std::size_t check;
  std::size_t field;  // index into decl.fields; ignored when whole
  bool whole;
};

CheckReport run_one(const CheckDecl& decl, const std::string& field_name, const std::map<std::string, Density>& measures,
                    const std::map<std::string, ScalarField>& fields, const QuadratureSpec& spec) {
  const ojson& p = decl.params;
  const CheckOptions opt = check_options(p);
  const std::string& kind = decl.kind;
  const Density* mu = decl.measure.empty() ? nullptr : &measures.at(decl.measure);

  if (kind == "regularity") {
    RegularityGrid grid;
    grid.radius = param(p, "grid_radius", 0.0);
    grid.nodes_per_axis = param_int(p, "grid_nodes", 0);
    return check_regularity(*mu, param(p, "p", 0.0), param_list(p, "a_list", {1.1, 1.5, 2.0}),
                            param_list(p, "s_list", {0.0}), grid);
  }
  if (kind == "best_constant") {
    std::vector<ScalarField> battery;
    for (const auto& name : decl.fields) battery.push_back(fields.at(name));
    const BestConstantMode mode = parse_best_constant_mode(p.value("mode", std::string("slsi")));
    const double c_min = param(p, "c_min", 0.25);
    const double c_max = param(p, "c_max", 4.0);
    const double resolution = param(p, "resolution", 1e-4);
    const auto r_grid = param_list(p, "r_grid", default_r_grid());
    const BestConstantResult res = best_constant(battery, *mu, mode, c_min, c_max, spec, resolution, r_grid);
    CheckReport r;
    r.check_id = "best_constant";
    r.spec = spec;
    r.inputs["measure"] = mu->describe();
    r.inputs["mode"] = to_string(mode);
    r.inputs["c_min"] = c_min;
    r.inputs["c_max"] = c_max;
    r.inputs["resolution"] = resolution;
    r.inputs["r_grid"] = r_grid;
    ojson fs = ojson::array();
    for (const auto& f : battery) fs.push_back(f.describe());
    r.inputs["battery"] = fs;
    r.quantities["c"] = res.c;
    r.quantities["lower_bound_only"] = res.lower_bound_only;
    r.quantities["vacuous"] = res.vacuous;
    r.quantities["iterations"] = res.iterations;
    r.tolerance = resolution;
    if (p.contains("expect_c")) {
      const double want = param(p, "expect_c", 1.0);
      const double tol = param(p, "c_tolerance", 1e-3);
      r.quantities["expect_c"] = want;
      r.quantities["c_error"] = res.c - want;
      r.tolerance = tol;
      r.outcome = std::abs(res.c - want) <= tol ? Outcome::passed : Outcome::failed;
    } else {
      r.outcome = res.lower_bound_only ? Outcome::failed : Outcome::passed;
    }
    if (res.lower_bound_only) r.notes.push_back("no c in range passed; c is only a lower bound");
    if (res.vacuous) r.notes.push_back("c_min already passes; the search is vacuous");
    return r;
  }

  const ScalarField& f = fields.at(field_name);
  if (kind == "slsi") return check_slsi(f, *mu, param(p, "c", 1.0), spec, opt);
  if (kind == "shc") return check_shc(f, *mu, param(p, "c", 1.0), param_list(p, "r_grid", default_r_grid()), spec, opt);
  if (kind == "general_shc") {
    return check_general_shc(f, *mu, param(p, "c", 1.0), param(p, "p", 1.0), param(p, "q", 2.0), spec, opt);
  }
  if (kind == "dilation_bound") return check_dilation_bound(f, *mu, param(p, "p", 2.0), param(p, "r", 0.8), spec, opt);
  if (kind == "dilated_convolution_bound") {
    const Mollifier phi(f.dim(), param_int(p, "k", 4), param(p, "base_radius", 1.0));
    return check_dilated_convolution_bound(f, *mu, param(p, "p", 2.0), phi, param(p, "r", 0.8), spec, opt);
  }
  if (kind == "density_approximation") {
    DensityApproxOptions d;
    if (p.contains("k_list")) {
      d.k_list.clear();
      for (const double k : param_list(p, "k_list", {})) {
        if (k < 1.0 || k != std::floor(k)) throw std::invalid_argument("k_list entries must be positive integers");
        d.k_list.push_back(static_cast<int>(k));
      }
    }
    d.r_list = param_list(p, "r_list", d.r_list);
    d.target = param(p, "target", d.target);
    d.base_radius = param(p, "base_radius", d.base_radius);
    d.noise_factor = param(p, "noise_factor", d.noise_factor);
    return check_density_approximation(f, *mu, param(p, "p", 2.0), d, spec, opt);
  }
  if (kind == "spherical_monotonicity" || kind == "radial_euler_bound") {
    const auto probes = default_probes(f.dim(), static_cast<std::size_t>(param_int(p, "probes", 64)),
                                       static_cast<std::uint64_t>(param_int(p, "probe_seed", 7)),
                                       param(p, "probe_scale", 1.0));
    const auto grid = param_list(p, "r_grid", default_monotonicity_grid());
    const double tol = param(p, "tolerance", 1e-7);
    return kind == "spherical_monotonicity" ? check_spherical_monotonicity(f, probes, grid, tol)
                                            : check_radial_euler_bound(f, probes, grid, tol);
  }
  if (kind == "lsh_test") {
    LshTestOptions o;
    o.tolerance = param(p, "tolerance", o.tolerance);
    return check_lsh(f, o);
  }
  throw std::invalid_argument(fmt::format("unknown check kind '{}'", kind));
}

CheckReport run_job(const CheckDecl& decl, const std::string& field_name, const std::map<std::string, Density>& measures,
                    const std::map<std::string, ScalarField>& fields, const QuadratureSpec& base) {
  CheckReport r;
  try {
    r = run_one(decl, field_name, measures, fields, effective_spec(decl, base));
  } catch (const std::exception& e) {
    r = error_report(decl, e.what());
  }
  r.name = decl.name;
  r.expect_failure = decl.expect_failure;
  r.inputs["declared_measure"] = decl.measure;
  r.inputs["declared_field"] = field_name;
  r.inputs["params"] = decl.params;
  return r;
}

std::string report_label(const CheckReport& r) {
  const std::string field = r.inputs.value("declared_field", std::string());
  return field.empty() ? r.name : r.name + "/" + field;
}

std::string headline(const CheckReport& r) {
  static const char* keys[] = {"deficit", "min_deficit", "c", "slack_ratio", "relative_error_at_kmax_rmax",
                               "worst_relative_violation", "worst_relative_drop", "worst_violation"};
  for (const char* k : keys) {
    if (r.quantities.contains(k) && r.quantities.at(k).is_number()) {
      return fmt::format("{}={:.6g}", k, r.quantities.at(k).get<double>());
    }
  }
  return "";
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> check_param_names(const std::string& kind) {
  std::vector<std::string> names;
  if (kind == "slsi") names = {"c"};
  else if (kind == "shc") names = {"c", "r_grid"};
  else if (kind == "general_shc") names = {"c", "p", "q"};
  else if (kind == "dilation_bound") names = {"p", "r"};
  else if (kind == "dilated_convolution_bound") names = {"base_radius", "k", "p", "r"};
  else if (kind == "density_approximation") names = {"base_radius", "k_list", "p", "r_list", "target"};
  else if (kind == "spherical_monotonicity" || kind == "radial_euler_bound")
    names = {"probe_scale", "probe_seed", "probes", "r_grid", "tolerance"};
  else if (kind == "lsh_test") names = {"tolerance"};
  else if (kind == "regularity") return {"a_list", "grid_nodes", "grid_radius", "p", "s_list"};
  else if (kind == "best_constant") return {"c_max", "c_min", "c_tolerance", "expect_c", "mode", "r_grid", "resolution"};
  else return {};
  if (kind != "spherical_monotonicity" && kind != "radial_euler_bound" && kind != "lsh_test") {
    names.insert(names.end(), {"noise_factor", "override_preconditions", "rel_tol"});
  }
  std::sort(names.begin(), names.end());
  return names;
}

bool check_needs_measure(const std::string& kind) { return !no_measure_kind(kind); }
bool check_needs_fields(const std::string& kind) { return kind != "regularity"; }

CampaignConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("line {}, column {}: {}", e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  CampaignConfig cfg;
  if (root.IsNull()) return cfg;
  require_map(root, "config");
  allow_keys(root, "config", {"name", "seed", "output_dir", "quadrature", "measures", "fields", "checks"});
  if (root["name"]) cfg.name = get_string(root["name"], "name");
  if (root["seed"]) cfg.seed = get_uint(root["seed"], "seed");
  if (root["output_dir"]) cfg.output_dir = get_string(root["output_dir"], "output_dir");
  if (root["quadrature"]) cfg.quadrature = parse_quadrature(root["quadrature"], "quadrature");

  std::set<std::string> measure_names;
  if (const YAML::Node ms = root["measures"]) {
    if (!ms.IsSequence()) bad("measures", ms, "expected a list");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      cfg.measures.push_back(parse_measure(ms[i], fmt::format("measures[{}]", i), measure_names));
      measure_names.insert(cfg.measures.back().name);
    }
  }

  std::set<std::string> field_names;
  std::map<std::string, ScalarField> built;
  if (const YAML::Node fs = root["fields"]) {
    if (!fs.IsSequence()) bad("fields", fs, "expected a list");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string path = fmt::format("fields[{}]", i);
      const YAML::Node n = fs[i];
      require_map(n, path);
      allow_keys(n, path, {"name", "expr"});
      if (!n["name"] || !n["expr"]) bad(path, n, "fields need 'name' and 'expr'");
      FieldDecl d{get_string(n["name"], path + ".name"), get_string(n["expr"], path + ".expr")};
      if (field_names.count(d.name)) bad(path + ".name", n["name"], fmt::format("duplicate field '{}'", d.name));
      try {
        built.emplace(d.name, parse_field(d.expr, built));
      } catch (const std::exception& e) {
        bad(path + ".expr", n["expr"], e.what());
      }
      field_names.insert(d.name);
      cfg.fields.push_back(std::move(d));
    }
  }

  std::set<std::string> check_names;
  if (const YAML::Node cs = root["checks"]) {
    if (!cs.IsSequence() && !cs.IsNull()) bad("checks", cs, "expected a list");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      cfg.checks.push_back(parse_check(cs[i], fmt::format("checks[{}]", i), measure_names, field_names, check_names));
      check_names.insert(cfg.checks.back().name);
    }
  }
  return cfg;
}

CampaignConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string serialize_config(const CampaignConfig& cfg) {
  std::string s;
  s += "name: " + yaml_string(cfg.name) + "\n";
  s += "seed: " + std::to_string(cfg.seed) + "\n";
  if (!cfg.output_dir.empty()) s += "output_dir: " + yaml_string(cfg.output_dir) + "\n";
  s += "quadrature: " + yaml_value(to_json(cfg.quadrature)) + "\n";
  s += "measures:\n";
  for (const auto& m : cfg.measures) {
    const ojson j = measure_decl_json(m);
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      s += (first ? "  - " : "    ") + k + ": " + yaml_value(v) + "\n";
      first = false;
    }
  }
  s += "fields:\n";
  for (const auto& f : cfg.fields) s += "  - name: " + yaml_string(f.name) + "\n    expr: " + yaml_string(f.expr) + "\n";
  s += "checks:\n";
  for (const auto& c : cfg.checks) {
    const ojson j = check_decl_json(c);
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      s += (first ? "  - " : "    ") + k + ": " + yaml_value(v) + "\n";
      first = false;
    }
  }
  return s;
}

nlohmann::ordered_json to_json(const CampaignConfig& cfg) {
  ojson j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
  j["quadrature"] = to_json(cfg.quadrature);
  j["measures"] = ojson::array();
  for (const auto& m : cfg.measures) j["measures"].push_back(measure_decl_json(m));
  j["fields"] = ojson::array();
  for (const auto& f : cfg.fields) j["fields"].push_back({{"name", f.name}, {"expr", f.expr}});
  j["checks"] = ojson::array();
  for (const auto& c : cfg.checks) j["checks"].push_back(check_decl_json(c));
  return j;
}

Density build_measure(const MeasureDecl& d, const std::map<std::string, Density>& built) {
  auto ref = [&](std::size_t i) -> const Density& {
    if (i >= d.refs.size()) throw ConfigError(fmt::format("measure '{}' is missing a reference", d.name));
    const auto it = built.find(d.refs[i]);
    if (it == built.end()) throw ConfigError(fmt::format("measure '{}' references undeclared '{}'", d.name, d.refs[i]));
    return it->second;
  };
  if (d.kind == "builtin") {
    FamilyParams fp;
    fp.sigma = d.sigma;
    if (!d.mean.empty()) fp.mean = Point(std::span<const double>(d.mean));
    fp.c = d.c;
    fp.a = d.a;
    fp.alpha = d.alpha;
    fp.radius = d.radius;
    return make_builtin(parse_family(d.family), fp, d.family == "poly_tail" ? 1 : d.dim);
  }
  if (d.kind == "mix") return mix(ref(0), ref(1), d.t);
  if (d.kind == "product") return product(ref(0), ref(1));
  if (d.kind == "convolve") return convolve_measures(ref(0), ref(1));
  if (d.kind == "perturb") return perturb(ref(0), d.amplitude, d.frequency);
  throw ConfigError(fmt::format("measure '{}': unknown kind '{}'", d.name, d.kind));
}

std::map<std::string, Density> build_measures(const std::vector<MeasureDecl>& decls) {
  std::map<std::string, Density> out;
  for (const auto& d : decls) {
    try {
      out.emplace(d.name, build_measure(d, out));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("measure '{}': {}", d.name, e.what()));
    }
  }
  return out;
}

std::map<std::string, ScalarField> build_fields(const std::vector<FieldDecl>& decls) {
  std::map<std::string, ScalarField> out;
  for (const auto& d : decls) {
    try {
      out.emplace(d.name, parse_field(d.expr, out));
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("field '{}': {}", d.name, e.what()));
    }
  }
  return out;
}

std::vector<CheckReport> run_check(const CheckDecl& decl, const std::map<std::string, Density>& measures,
                                   const std::map<std::string, ScalarField>& fields, const QuadratureSpec& base) {
  std::vector<CheckReport> out;
  if (decl.kind == "best_constant" || decl.kind == "regularity") {
    out.push_back(run_job(decl, "", measures, fields, base));
  } else {
    for (const auto& f : decl.fields) out.push_back(run_job(decl, f, measures, fields, base));
  }
  return out;
}

std::string resolve_output_dir(const CampaignConfig& config, const RunOptions& options) {
  if (!options.output_dir.empty()) return options.output_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("LSHLAB_OUTPUT_DIR"); env && *env) {
    return (std::filesystem::path(env) / config.name).string();
  }
  return (std::filesystem::path("lshlab-out") / config.name).string();
}

RunResult run_campaign(const CampaignConfig& config, const RunOptions& options) {
  RunResult res;
  const auto measures = build_measures(config.measures);
  const auto fields = build_fields(config.fields);

  QuadratureSpec base = config.quadrature;
  base.seed = mix_seed(config.seed, base.seed);

  std::vector<Job> jobs;
  std::vector<std::size_t> first_slot;
  for (std::size_t c = 0; c < config.checks.size(); ++c) {
    const CheckDecl& d = config.checks[c];
    first_slot.push_back(jobs.size());
    if (d.kind == "best_constant" || d.kind == "regularity") {
      jobs.push_back({c, 0, true});
    } else {
      for (std::size_t f = 0; f < d.fields.size(); ++f) jobs.push_back({c, f, false});
    }
  }

  std::vector<CheckReport> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const CheckDecl& d = config.checks[job.check];
      slots[i] = run_job(d, job.whole ? "" : d.fields[job.field], measures, fields, base);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), 1,
                                                      std::max<std::size_t>(jobs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  res.reports = std::move(slots);

  RunSummary& s = res.summary;
  for (const auto& r : res.reports) {
    ++s.total;
    if (!r.error.empty()) {
      ++s.errors;
    } else if (r.outcome == Outcome::inconclusive) {
      ++s.inconclusive;
    } else if (r.passed()) {
      ++s.passed;
    } else {
      ++s.failed;
      if (r.expect_failure) ++s.expected_failures;
    }
    if (r.error.empty() && r.outcome != Outcome::inconclusive && !r.as_expected()) ++s.unexpected;
  }
  res.exit_code = (s.unexpected == 0 && s.errors == 0) ? 0 : 1;

  ojson& j = res.report;
  j["tool"] = {{"name", "lshlab"}, {"version", "0.1.0"}};
  j["generated_at"] = utc_now();
  j["campaign"] = config.name;
  j["seed"] = config.seed;
  j["quadrature"] = to_json(base);
  j["config"] = to_json(config);
  j["summary"] = {{"total", s.total},           {"passed", s.passed},
                  {"failed", s.failed},         {"expected_failures", s.expected_failures},
                  {"unexpected", s.unexpected}, {"inconclusive", s.inconclusive},
                  {"errors", s.errors},         {"exit_code", res.exit_code}};
  j["reports"] = ojson::array();
  for (const auto& r : res.reports) j["reports"].push_back(to_json(r));

  if (options.write_files) {
    res.output_dir = resolve_output_dir(config, options);
    const std::filesystem::path dir(res.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "report.json", j.dump(2) + "\n");
    write_file(dir / "summary.txt", summary_text(config, res));
    for (std::size_t c = 0; c < config.checks.size(); ++c) {
      if (config.checks[c].kind != "shc") continue;
      const std::size_t end = c + 1 < first_slot.size() ? first_slot[c + 1] : res.reports.size();
      const std::vector<CheckReport> part(res.reports.begin() + static_cast<std::ptrdiff_t>(first_slot[c]),
                                          res.reports.begin() + static_cast<std::ptrdiff_t>(end));
      write_file(dir / (config.checks[c].name + ".csv"), alpha_csv(part));
    }
  }
  return res;
}

std::string summary_text(const CampaignConfig& config, const RunResult& result) {
  struct Row {
    std::string label, kind, outcome, expected, verdict, headline;
  };
  std::vector<Row> rows;
  rows.push_back({"check", "kind", "outcome", "expected", "verdict", "headline"});
  for (const auto& r : result.reports) {
    std::string verdict;
    if (!r.error.empty()) verdict = "ERROR";
    else if (r.outcome == Outcome::inconclusive) verdict = "inconclusive";
    else verdict = r.as_expected() ? "ok" : "UNEXPECTED";
    rows.push_back({report_label(r), r.check_id, to_string(r.outcome), r.expect_failure ? "fail" : "pass", verdict,
                    r.error.empty() ? headline(r) : r.error});
  }
  std::size_t w[5] = {0, 0, 0, 0, 0};
  for (const auto& row : rows) {
    w[0] = std::max(w[0], row.label.size());
    w[1] = std::max(w[1], row.kind.size());
    w[2] = std::max(w[2], row.outcome.size());
    w[3] = std::max(w[3], row.expected.size());
    w[4] = std::max(w[4], row.verdict.size());
  }
  std::string s = fmt::format("campaign {} (seed {})\n\n", config.name, config.seed);
  for (const auto& row : rows) {
    s += fmt::format("{:<{}}  {:<{}}  {:<{}}  {:<{}}  {:<{}}  {}", row.label, w[0], row.kind, w[1], row.outcome, w[2],
                     row.expected, w[3], row.verdict, w[4], row.headline);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    s += "\n";
  }
  const RunSummary& m = result.summary;
  s += fmt::format("\ntotal {}  passed {}  failed {} (expected {})  inconclusive {}  errors {}  unexpected {}\n", m.total,
                   m.passed, m.failed, m.expected_failures, m.inconclusive, m.errors, m.unexpected);
  s += fmt::format("exit status {}\n", result.exit_code);
  return s;
}

std::string alpha_csv(const std::vector<CheckReport>& reports) {
  std::string s = "check_id,r,alpha,q_of_r,deficit\n";
  for (const auto& r : reports) {
    const std::string id = report_label(r);
    for (const auto& row : r.alpha_rows) {
      s += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", id, row.r, row.alpha, row.q, row.deficit);
    }
  }
  return s;
}

}  // namespace lsh
