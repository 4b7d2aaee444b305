#include "lsh/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "lsh/error.hpp"

namespace lsh {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

ojson point_json(const Point& x) { return x.to_vector(); }

ojson field_json(const ScalarField& f) {
  ojson j;
  j["describe"] = f.describe();
  j["dim"] = f.dim();
  j["certificate"] = to_string(f.certificate());
  return j;
}

ojson measure_json(const Density& mu) {
  ojson j;
  j["describe"] = mu.describe();
  j["dim"] = mu.dim();
  j["rotation_invariant"] = mu.rotation_invariant();
  return j;
}

CheckReport start(const std::string& id, const QuadratureSpec& spec) {
  CheckReport r;
  r.check_id = id;
  r.spec = spec;
  return r;
}

void inconclusive(CheckReport& r, const std::string& why) {
  r.outcome = Outcome::inconclusive;
  r.notes.push_back(why);
}

bool certified(const ScalarField& f) { return f.certificate() != Certificate::unverified; }

// Quadrature-noise-aware inequality: lhs <= rhs.
struct Slack {
  double tol;
  double deficit;
  bool holds() const { return deficit >= -tol; }
};

Slack compare(double lhs, double rhs, double err, double scale, const CheckOptions& opt) {
  return {opt.rel_tol * scale + opt.noise_factor * err, rhs - lhs};
}

double conjugate(double p) { return p == 1.0 ? kInf : p / (p - 1.0); }

Estimate lp_of_difference(const std::function<double(const Point&)>& a, const std::function<double(const Point&)>& b,
                          const NodeSet& nodes, double p) {
  const Estimate i = integrate([&](const Point& x) { return std::pow(std::abs(a(x) - b(x)), p); }, nodes);
  const double v = std::max(i.value, 0.0);
  const double e = std::pow(v, 1.0 / p);
  return {e, std::pow(v + i.error, 1.0 / p) - e};
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::passed: return "passed";
    case Outcome::failed: return "failed";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

ojson to_json(const CheckReport& r) {
  ojson j;
  j["check_id"] = r.check_id;
  j["name"] = r.name;
  j["inputs"] = r.inputs;
  j["quantities"] = r.quantities;
  j["tolerance"] = r.tolerance;
  j["outcome"] = to_string(r.outcome);
  j["passed"] = r.passed();
  j["expected"] = r.expect_failure ? "fail" : "pass";
  j["as_expected"] = r.as_expected();
  if (!r.error.empty()) j["error"] = r.error;
  j["spec"] = to_json(r.spec);
  j["notes"] = r.notes;
  if (!r.alpha_rows.empty()) {
    ojson rows = ojson::array();
    for (const auto& row : r.alpha_rows) rows.push_back({{"r", row.r}, {"alpha", row.alpha}, {"q_of_r", row.q}, {"deficit", row.deficit}});
    j["alpha_rows"] = rows;
  }
  return j;
}

std::vector<std::string> check_kinds() {
  return {"best_constant",  "density_approximation", "dilated_convolution_bound", "dilation_bound",
          "general_shc",    "lsh_test",              "radial_euler_bound",        "regularity",
          "shc",            "slsi",                  "spherical_monotonicity"};
}

// ---------------------------------------------------------------------------

CheckReport check_slsi(const ScalarField& g, const Density& mu, double c, const QuadratureSpec& spec,
                       const CheckOptions& opt) {
  CheckReport rep = start("slsi", spec);
  rep.inputs["field"] = field_json(g);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["c"] = c;
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  try {
    const NodeSet nodes = build_nodes(mu, spec);
    const Estimate norm = lp_norm(g, nodes, 1.0);
    const FunctionalValue ent = entropy(g, nodes);
    const FunctionalValue ee = euler_energy(g, nodes);
    const double lhs = ent.value;
    const double rhs = 0.5 * c * ee.value;
    const Slack s = compare(lhs, rhs, ent.error + 0.5 * c * ee.error, std::max({std::abs(lhs), std::abs(rhs), norm.value}), opt);
    rep.tolerance = s.tol;
    rep.quantities["lhs_entropy"] = lhs;
    rep.quantities["rhs_half_c_euler_energy"] = rhs;
    rep.quantities["euler_energy"] = ee.value;
    rep.quantities["deficit"] = s.deficit;
    rep.quantities["norm_l1"] = norm.value;
    rep.quantities["quadrature_error"] = ent.error + 0.5 * c * ee.error;
    rep.quantities["floored_nodes"] = ent.floored;
    if (norm.value == 0.0) {
      inconclusive(rep, "|g|_1 = 0");
      return rep;
    }
    rep.outcome = s.holds() ? Outcome::passed : Outcome::failed;
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("functional diverged: ") + e.what());
    return rep;
  }
  if (!opt.override_preconditions) {
    if (!certified(g)) inconclusive(rep, "field carries no log-subharmonic certificate");
    else if (!mu.rotation_invariant()) inconclusive(rep, "measure is not rotation-invariant");
  }
  return rep;
}

CheckReport check_shc(const ScalarField& f, const Density& mu, double c, const std::vector<double>& r_grid,
                      const QuadratureSpec& spec, const CheckOptions& opt) {
  CheckReport rep = start("shc", spec);
  HCParams hp;
  hp.c = c;
  hp.r_grid = r_grid;
  hp.validate();
  rep.inputs["field"] = field_json(f);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["c"] = c;
  rep.inputs["r_grid"] = r_grid;
  rep.notes.push_back(
      "checked on explicit smooth test functions only; closures of L^q intersected with the log-subharmonic cone are "
      "not represented");
  NodeSet nodes;
  Estimate norm;
  try {
    nodes = build_nodes(mu, spec);
    norm = lp_norm(f, nodes, 1.0);
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("|f|_1 diverged: ") + e.what());
    return rep;
  }
  rep.quantities["norm_l1"] = norm.value;
  if (!(norm.value > 0.0)) {
    inconclusive(rep, "|f|_1 = 0");
    return rep;
  }
  bool ok = true;
  double min_deficit = kInf;
  double max_l1_excess = -kInf;
  double max_tol = 0.0;
  std::size_t skipped = 0;
  struct Sample {
    double r, a, err;
  };
  std::vector<Sample> samples;
  for (double r : r_grid) {
    FunctionalValue a;
    Estimate l1;
    try {
      a = alpha(f, nodes, c, r);
      l1 = lp_norm(dilate(f, r), nodes, 1.0);
    } catch (const QuadratureError& e) {
      ++skipped;
      rep.notes.push_back(fmt::format("r = {} skipped: {}", r, e.what()));
      continue;
    }
    const Slack s1 = compare(a.value, norm.value, a.error + norm.error, norm.value, opt);
    const Slack s2 = compare(l1.value, norm.value, l1.error + norm.error, norm.value, opt);
    ok = ok && s1.holds() && s2.holds();
    min_deficit = std::min(min_deficit, s1.deficit);
    max_l1_excess = std::max(max_l1_excess, l1.value - norm.value);
    max_tol = std::max({max_tol, s1.tol, s2.tol});
    rep.alpha_rows.push_back({r, a.value, q_of_r(c, r), s1.deficit});
    samples.push_back({r, a.value, a.error});
  }
  double worst = 0.0;
  double worst_ratio = 0.0;
  bool monotone = true;
  ojson witness = nullptr;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double drop = samples[i - 1].a - samples[i].a;
    const double tol = opt.rel_tol * samples[i].a + opt.noise_factor * (samples[i - 1].err + samples[i].err);
    if (drop > tol) monotone = false;
    if (drop > worst) {
      worst = drop;
      worst_ratio = tol > 0.0 ? drop / tol : kInf;
      witness = {samples[i - 1].r, samples[i].r};
    }
  }
  rep.tolerance = max_tol;
  rep.quantities["min_deficit"] = samples.empty() ? 0.0 : min_deficit;
  rep.quantities["max_l1_excess"] = samples.empty() ? 0.0 : max_l1_excess;
  rep.quantities["alpha_monotone"] = monotone;
  rep.quantities["worst_monotonicity_drop"] = worst;
  rep.quantities["monotonicity_drop_over_tolerance"] = worst_ratio;
  rep.quantities["monotonicity_witness_r"] = witness;
  rep.quantities["skipped_r"] = skipped;
  if (f.has_gradient() || f.smooth()) {
    try {
      rep.quantities["bracket_at_1"] = hc_bracket(f, nodes, c, 1.0).value;
    } catch (const std::exception& e) {
      rep.notes.push_back(std::string("bracket at r = 1 unavailable: ") + e.what());
    }
  }
  if (samples.empty()) {
    inconclusive(rep, "every grid point was skipped");
    return rep;
  }
  rep.outcome = ok && monotone ? Outcome::passed : Outcome::failed;
  if (!certified(f) && !opt.override_preconditions) inconclusive(rep, "field carries no log-subharmonic certificate");
  return rep;
}

CheckReport check_general_shc(const ScalarField& f, const Density& mu, double c, double p, double q,
                              const QuadratureSpec& spec, const CheckOptions& opt) {
  CheckReport rep = start("general_shc", spec);
  const double r0 = contraction_time(c, p, q);
  rep.inputs["field"] = field_json(f);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["c"] = c;
  rep.inputs["p"] = p;
  rep.inputs["q"] = q;
  rep.quantities["contraction_time"] = r0;
  try {
    const NodeSet nodes = build_nodes(mu, spec);
    const Estimate rhs = lp_norm(f, nodes, p);
    rep.quantities["norm_p"] = rhs.value;
    bool ok = true;
    double min_deficit = kInf;
    ojson rows = ojson::array();
    for (double r : {0.8 * r0, 0.9 * r0, r0}) {
      const Estimate lhs = lp_norm(dilate(f, r), nodes, q);
      const Slack s = compare(lhs.value, rhs.value, lhs.error + rhs.error, rhs.value, opt);
      ok = ok && s.holds();
      min_deficit = std::min(min_deficit, s.deficit);
      rep.tolerance = std::max(rep.tolerance, s.tol);
      rows.push_back({{"r", r}, {"norm_q_of_f_r", lhs.value}, {"deficit", s.deficit}});
    }
    rep.quantities["rows"] = rows;
    rep.quantities["min_deficit"] = min_deficit;
    rep.outcome = ok ? Outcome::passed : Outcome::failed;
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("norm diverged: ") + e.what());
    return rep;
  }
  rep.notes.push_back(
      "checked on explicit smooth test functions only; closures of L^q intersected with the log-subharmonic cone are "
      "not represented");
  if (!certified(f) && !opt.override_preconditions) inconclusive(rep, "field carries no log-subharmonic certificate");
  return rep;
}

CheckReport check_dilation_bound(const ScalarField& f, const Density& mu, double p, double r,
                                 const QuadratureSpec& spec, const CheckOptions& opt, const RegularityGrid& grid) {
  CheckReport rep = start("dilation_bound", spec);
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("r must lie in (0, 1]");
  rep.inputs["field"] = field_json(f);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["p"] = p;
  rep.inputs["r"] = r;
  RegularityEstimate c;
  try {
    c = estimate_regularity(mu, 0.0, 1.0 / r, 0.0, grid);
  } catch (const std::invalid_argument& e) {
    inconclusive(rep, std::string("regularity constant unavailable: ") + e.what());
    return rep;
  }
  rep.quantities["regularity"] = to_json(c);
  if (!c.finite) {
    inconclusive(rep, "C(1/r, 0) is not finite: " + c.failure);
    return rep;
  }
  try {
    const NodeSet nodes = build_nodes(mu, spec);
    const Estimate fn = lp_norm(f, nodes, p);
    const Estimate lhs = lp_norm(dilate(f, r), nodes, p);
    const double n = static_cast<double>(mu.dim());
    const double factor = std::pow(r, -n / p) * std::pow(c.value, 1.0 / p);
    const double rhs = factor * fn.value;
    const Slack s = compare(lhs.value, rhs, lhs.error + factor * fn.error, rhs, opt);
    rep.tolerance = s.tol;
    rep.quantities["lhs"] = lhs.value;
    rep.quantities["rhs"] = rhs;
    rep.quantities["operator_bound"] = factor;
    rep.quantities["norm_p"] = fn.value;
    rep.quantities["deficit"] = s.deficit;
    rep.outcome = s.holds() ? Outcome::passed : Outcome::failed;
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("norm diverged: ") + e.what());
  }
  return rep;
}

CheckReport check_dilated_convolution_bound(const ScalarField& f, const Density& mu, double p, const Mollifier& phi,
                                            double r, const QuadratureSpec& spec, const CheckOptions& opt,
                                            const RegularityGrid& grid) {
  CheckReport rep = start("dilated_convolution_bound", spec);
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must lie in [1, inf)");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r must lie in (0, 1)");
  if (phi.dim() != f.dim()) throw std::invalid_argument("mollifier and field dimensions differ");
  const double pc = conjugate(p);
  const double s = phi.support_radius();
  rep.inputs["field"] = field_json(f);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["mollifier"] = phi.describe();
  rep.inputs["p"] = p;
  rep.inputs["r"] = r;
  rep.quantities["conjugate_exponent"] = std::isinf(pc) ? ojson("inf") : ojson(pc);
  const double vol = phi.support_volume();
  const double phi_norm = phi.lp_norm(pc);
  const Mollifier half(phi.dim(), 2 * phi.scale_index(), phi.base_radius());
  const double scaling1 = vol * std::pow(phi_norm, p);
  const double scaling2 = half.support_volume() * std::pow(half.lp_norm(pc), p);
  const double scaling_diff = std::abs(scaling1 - scaling2) / std::abs(scaling1);
  rep.quantities["support_volume"] = vol;
  rep.quantities["mollifier_norm_conjugate"] = phi_norm;
  rep.quantities["scaling_quantity"] = scaling1;
  rep.quantities["scaling_quantity_half_support"] = scaling2;
  rep.quantities["scaling_relative_difference"] = scaling_diff;
  RegularityEstimate c;
  try {
    c = estimate_regularity(mu, 0.0, 1.0 / r, s / r, grid);
  } catch (const std::invalid_argument& e) {
    inconclusive(rep, std::string("regularity constant unavailable: ") + e.what());
    return rep;
  }
  rep.quantities["regularity"] = to_json(c);
  if (!c.finite) {
    inconclusive(rep, "C(1/r, s/r) is not finite: " + c.failure);
    return rep;
  }
  try {
    const NodeSet nodes = build_nodes(mu, spec);
    const Estimate fn = lp_norm(f, nodes, p);
    const Estimate lhs = lp_norm(dilated_convolve(f, phi, r), nodes, p);
    const double n = static_cast<double>(mu.dim());
    const double factor = std::pow(r, -n / p) * std::pow(c.value * vol, 1.0 / p) * phi_norm;
    const double rhs = factor * fn.value;
    const Slack sl = compare(lhs.value, rhs, lhs.error + factor * fn.error, rhs, opt);
    rep.tolerance = sl.tol;
    rep.quantities["lhs"] = lhs.value;
    rep.quantities["rhs"] = rhs;
    rep.quantities["operator_bound"] = factor;
    rep.quantities["norm_p"] = fn.value;
    rep.quantities["deficit"] = sl.deficit;
    rep.quantities["slack_ratio"] = rhs > 0.0 ? lhs.value / rhs : 0.0;
    const bool scaling_ok = scaling_diff <= 1e-8;
    if (!scaling_ok) rep.notes.push_back("mollifier scaling quantity varies across scales");
    rep.outcome = sl.holds() && scaling_ok ? Outcome::passed : Outcome::failed;
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("norm diverged: ") + e.what());
  }
  return rep;
}

CheckReport check_density_approximation(const ScalarField& f, const Density& mu, double p,
                                        const DensityApproxOptions& dopt, const QuadratureSpec& spec,
                                        const CheckOptions& opt) {
  CheckReport rep = start("density_approximation", spec);
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  if (dopt.k_list.empty() || dopt.r_list.empty()) throw std::invalid_argument("k_list and r_list must be non-empty");
  std::vector<int> ks = dopt.k_list;
  std::vector<double> rs = dopt.r_list;
  std::sort(ks.begin(), ks.end());
  std::sort(rs.begin(), rs.end());
  for (double r : rs) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("r_list entries must lie in (0, 1)");
  }
  rep.inputs["field"] = field_json(f);
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["p"] = p;
  rep.inputs["k_list"] = ks;
  rep.inputs["r_list"] = rs;
  rep.inputs["target"] = dopt.target;
  rep.inputs["base_radius"] = dopt.base_radius;
  const std::size_t n = f.dim();
  const double r_max = rs.back();
  try {
    const NodeSet nodes = build_nodes(mu, spec);
    const Estimate fn = lp_norm(f, nodes, p);
    rep.quantities["norm_p"] = fn.value;
    auto fv = [&](const Point& x) { return f.value(x); };
    std::vector<std::vector<Estimate>> e(ks.size(), std::vector<Estimate>(rs.size()));
    std::vector<Estimate> moll(ks.size());
    std::vector<Estimate> dil(rs.size());
    ojson cells = ojson::array();
    ojson energy = ojson::array();
    bool all_finite = true;
    const ScalarField f_rmax = dilate(f, r_max);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const Mollifier phi(n, ks[i], dopt.base_radius);
      for (std::size_t j = 0; j < rs.size(); ++j) {
        const ScalarField g = dilated_convolve(f, phi, rs[j]);
        e[i][j] = lp_of_difference([&](const Point& x) { return g.value(x); }, fv, nodes, p);
        cells.push_back({{"k", ks[i]}, {"r", rs[j]}, {"error", e[i][j].value}, {"quadrature_error", e[i][j].error}});
        if (j + 1 == rs.size()) {
          moll[i] = lp_of_difference([&](const Point& x) { return g.value(x); },
                                     [&](const Point& x) { return f_rmax.value(x); }, nodes, p);
          double en = kInf;
          try {
            const Estimate ie = integrate(
                [&](const Point& x) { return std::pow(std::abs(g.value(x) * g.log_euler(x)), p); }, nodes);
            en = std::pow(std::max(ie.value, 0.0), 1.0 / p);
          } catch (const std::exception& ex) {
            rep.notes.push_back(fmt::format("Euler norm at k = {}: {}", ks[i], ex.what()));
          }
          all_finite = all_finite && std::isfinite(en);
          energy.push_back({{"k", ks[i]}, {"euler_norm_p", std::isfinite(en) ? ojson(en) : ojson("inf")}});
        }
      }
    }
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const ScalarField fr = dilate(f, rs[j]);
      dil[j] = lp_of_difference([&](const Point& x) { return fr.value(x); }, fv, nodes, p);
    }
    const double slack_abs = 1e-12 * fn.value;
    auto non_increasing = [&](const std::vector<Estimate>& v) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i].value - v[i - 1].value > dopt.noise_factor * (v[i].error + v[i - 1].error) + slack_abs) return false;
      }
      return true;
    };
    std::vector<Estimate> along_k(ks.size());
    std::vector<Estimate> along_r(rs.size());
    for (std::size_t i = 0; i < ks.size(); ++i) along_k[i] = e[i].back();
    // decreasing as r increases to 1
    for (std::size_t j = 0; j < rs.size(); ++j) along_r[j] = e.back()[j];
    const Estimate best = e.back().back();
    const bool target_ok = best.value <= dopt.target * fn.value + dopt.noise_factor * best.error;
    const bool moll_ok = non_increasing(moll);
    const bool r_ok = non_increasing(along_r);
    const bool dil_ok = non_increasing(dil);
    rep.tolerance = dopt.target * fn.value;
    rep.quantities["cells"] = cells;
    rep.quantities["error_at_kmax_rmax"] = best.value;
    rep.quantities["relative_error_at_kmax_rmax"] = fn.value > 0.0 ? best.value / fn.value : 0.0;
    ojson mj = ojson::array();
    for (std::size_t i = 0; i < ks.size(); ++i) mj.push_back({{"k", ks[i]}, {"mollification_error", moll[i].value}});
    ojson dj = ojson::array();
    for (std::size_t j = 0; j < rs.size(); ++j) dj.push_back({{"r", rs[j]}, {"dilation_error", dil[j].value}});
    rep.quantities["mollification_split"] = mj;
    rep.quantities["dilation_split"] = dj;
    rep.quantities["euler_norms"] = energy;
    rep.quantities["target_met"] = target_ok;
    rep.quantities["mollification_split_decreasing_in_k"] = moll_ok;
    rep.quantities["error_decreasing_in_r"] = r_ok;
    rep.quantities["dilation_split_decreasing_in_r"] = dil_ok;
    const bool k_ok = non_increasing(along_k);
    rep.quantities["error_decreasing_in_k"] = k_ok;
    rep.quantities["approximants_in_euler_domain"] = all_finite;
    if (!k_ok && moll_ok) {
      rep.notes.push_back(
          "e(k, r_max) rises with k while |(f*phi_k)_r - f_r| falls: the mollification and dilation errors partly "
          "cancel; a larger base_radius makes the mollification error dominate");
    }
    rep.outcome = target_ok && k_ok && r_ok && all_finite ? Outcome::passed : Outcome::failed;
  } catch (const QuadratureError& e) {
    inconclusive(rep, std::string("quadrature failed: ") + e.what());
    return rep;
  }
  if (!certified(f) && !opt.override_preconditions) inconclusive(rep, "field carries no log-subharmonic certificate");
  return rep;
}

std::vector<double> default_monotonicity_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

CheckReport check_spherical_monotonicity(const ScalarField& f, const std::vector<Point>& probes,
                                         const std::vector<double>& r_grid, double tolerance) {
  CheckReport rep = start("spherical_monotonicity", {});
  std::vector<double> rs = r_grid;
  std::sort(rs.begin(), rs.end());
  rep.inputs["field"] = field_json(f);
  rep.inputs["probes"] = probes.size();
  rep.inputs["r_grid"] = rs;
  rep.tolerance = tolerance;
  const ScalarField avg = spherical_average(f);
  double worst = 0.0;
  ojson witness = nullptr;
  std::size_t tested = 0;
  for (const Point& x : probes) {
    double prev = avg.value(x * rs.front());
    for (std::size_t i = 1; i < rs.size(); ++i) {
      const double cur = avg.value(x * rs[i]);
      const double drop = (prev - cur) / std::max(1.0, std::abs(prev));
      ++tested;
      if (drop > worst) {
        worst = drop;
        witness = {{"x", point_json(x)}, {"r_lo", rs[i - 1]}, {"r_hi", rs[i]}};
      }
      prev = cur;
    }
  }
  rep.quantities["tested_pairs"] = tested;
  rep.quantities["worst_relative_drop"] = worst;
  rep.quantities["witness"] = witness;
  rep.outcome = worst <= tolerance ? Outcome::passed : Outcome::failed;
  return rep;
}

CheckReport check_radial_euler_bound(const ScalarField& k, const std::vector<Point>& probes,
                                     const std::vector<double>& r_grid, double tolerance) {
  CheckReport rep = start("radial_euler_bound", {});
  rep.inputs["field"] = field_json(k);
  rep.inputs["probes"] = probes.size();
  rep.inputs["r_grid"] = r_grid;
  rep.tolerance = tolerance;
  const double n = static_cast<double>(k.dim());
  double worst = 0.0;
  double worst_asym = 0.0;
  ojson witness = nullptr;
  std::size_t tested = 0;
  for (const Point& x : probes) {
    Point axis(k.dim());
    axis[0] = norm(x);
    worst_asym = std::max(worst_asym, std::abs(k.value(x) - k.value(axis)) / std::max(1.0, std::abs(k.value(x))));
    const double ex = euler(k, x);
    for (double r : r_grid) {
      if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("r_grid entries must lie in (0, 1]");
      const double lhs = euler(k, x * r);
      const double rhs = std::pow(r, 2.0 - n) * ex;
      const double v = (lhs - rhs) / std::max(1.0, std::abs(rhs));
      ++tested;
      if (v > worst) {
        worst = v;
        witness = {{"x", point_json(x)}, {"r", r}, {"lhs", lhs}, {"rhs", rhs}};
      }
    }
  }
  rep.quantities["tested"] = tested;
  rep.quantities["worst_relative_violation"] = worst;
  rep.quantities["witness"] = witness;
  rep.quantities["rotation_asymmetry"] = worst_asym;
  rep.outcome = worst <= tolerance ? Outcome::passed : Outcome::failed;
  if (worst_asym > 1e-9) inconclusive(rep, "field is not rotation-invariant at the probes");
  return rep;
}

CheckReport check_lsh(const ScalarField& f, const LshTestOptions& options) {
  CheckReport rep = start("lsh_test", {});
  rep.inputs["field"] = field_json(f);
  rep.tolerance = options.tolerance;
  const LshTestReport r = is_lsh(f, options);
  rep.quantities = to_json(r);
  rep.outcome = r.passed ? Outcome::passed : Outcome::failed;
  return rep;
}

CheckReport check_regularity(const Density& mu, double p, const std::vector<double>& a_list,
                             const std::vector<double>& s_list, const RegularityGrid& grid) {
  CheckReport rep = start("regularity", {});
  rep.inputs["measure"] = measure_json(mu);
  rep.inputs["p"] = p;
  rep.inputs["a_list"] = a_list;
  rep.inputs["s_list"] = s_list;
  try {
    const RegularityConstants c = type_report(mu, p, a_list, s_list, 0.25, 16, grid);
    rep.quantities = to_json(c);
    rep.outcome = c.type_p ? Outcome::passed : Outcome::failed;
  } catch (const std::invalid_argument& e) {
    inconclusive(rep, e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::string to_string(BestConstantMode m) { return m == BestConstantMode::slsi ? "slsi" : "shc"; }

BestConstantMode parse_best_constant_mode(const std::string& s) {
  if (s == "slsi") return BestConstantMode::slsi;
  if (s == "shc") return BestConstantMode::shc;
  throw std::invalid_argument(fmt::format("unknown best-constant mode '{}' (slsi | shc)", s));
}

BestConstantResult best_constant(const std::vector<ScalarField>& battery, const Density& mu, BestConstantMode mode,
                                 double c_min, double c_max, const QuadratureSpec& spec, double resolution,
                                 const std::vector<double>& r_grid) {
  if (battery.empty()) throw std::invalid_argument("best_constant needs a non-empty battery");
  if (!(c_min > 0.0 && c_min < c_max)) throw std::invalid_argument("need 0 < c_min < c_max");
  auto passes = [&](double c) {
    for (const auto& f : battery) {
      const CheckReport r = mode == BestConstantMode::slsi ? check_slsi(f, mu, c, spec) : check_shc(f, mu, c, r_grid, spec);
      if (!r.passed()) return false;
    }
    return true;
  };
  BestConstantResult out;
  if (passes(c_min)) {
    out.c = c_min;
    out.vacuous = true;
    return out;
  }
  if (!passes(c_max)) {
    out.c = c_max;
    out.lower_bound_only = true;
    return out;
  }
  double lo = c_min;
  double hi = c_max;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? hi : lo) = mid;
    ++out.iterations;
  }
  out.c = hi;
  return out;
}

}  // namespace lsh
