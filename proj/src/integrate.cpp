#include "lsh/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "lsh/error.hpp"
#include "lsh/parallel.hpp"
#include "lsh/random.hpp"
#include "lsh/rules.hpp"

namespace lsh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogFloor = std::log(1e-300);
constexpr std::size_t kMcChunk = 4096;
constexpr std::size_t kMcBatches = 16;

double lse(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void normalize(std::vector<double>& log_w) {
  const double total = lse(log_w);
  if (!std::isfinite(total)) throw QuadratureError("quadrature rule has no mass inside the truncation region");
  for (double& w : log_w) {
    if (w != kNegInf) w -= total;
  }
}

int default_nodes(Scheme s, std::size_t n) {
  switch (s) {
    case Scheme::gauss_hermite: return n == 1 ? 96 : (n == 2 ? 48 : 24);
    case Scheme::tensor_trapezoid: return n == 1 ? 401 : (n == 2 ? 161 : 61);
    case Scheme::adaptive_1d: return 64;
    default: return 0;
  }
}

// Tensor product of per-axis (node, log weight) lists.
void tensor(std::size_t n, const std::vector<double>& nodes1, const std::vector<double>& logw1,
            const std::function<void(const Point&, double)>& emit, const std::function<Point(const Point&)>& map) {
  const std::size_t m = nodes1.size();
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= m;
  Point t(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double lw = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t i = rem % m;
      rem /= m;
      t[d] = nodes1[i];
      lw += logw1[i];
    }
    emit(map(t), lw);
  }
}

NodeSet gauss_hermite_nodes(const Density& mu, int nodes) {
  const auto axes = mu.gaussian_axes();
  if (!axes) throw QuadratureError("gauss_hermite requires a Gaussian measure: " + mu.describe());
  const std::size_t n = mu.dim();
  NodeSet ns;
  ns.dim = n;
  ns.scheme = Scheme::gauss_hermite;
  ns.nodes_per_axis = nodes;
  auto map = [&](const Point& t) {
    Point x(n);
    for (std::size_t d = 0; d < n; ++d) x[d] = axes->mean[d] + std::numbers::sqrt2 * axes->sigma[d] * t[d];
    return x;
  };
  auto add_rule = [&](int count, bool fine) {
    const Rule1D r = gauss_hermite_rule(count);
    std::vector<double> lw(r.weights.size());
    for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = std::log(r.weights[i]) - 0.5 * std::log(std::numbers::pi);
    tensor(n, r.nodes, lw, [&](const Point& x, double w) {
      ns.points.push_back(x);
      ns.log_w_fine.push_back(fine ? w : kNegInf);
      ns.log_w_coarse.push_back(fine ? kNegInf : w);
    }, map);
  };
  add_rule(nodes, true);
  add_rule(std::max(1, nodes / 2), false);
  normalize(ns.log_w_fine);
  normalize(ns.log_w_coarse);
  return ns;
}

NodeSet trapezoid_nodes(const Density& mu, int nodes, double radius) {
  const std::size_t n = mu.dim();
  if (nodes % 2 == 0) ++nodes;
  NodeSet ns;
  ns.dim = n;
  ns.scheme = Scheme::tensor_trapezoid;
  ns.nodes_per_axis = nodes;
  ns.truncation_radius = radius;
  const double h = 2.0 * radius / (nodes - 1);
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= static_cast<std::size_t>(nodes);
  Point x(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double lf = 0.0;
    double lc = 0.0;
    bool in_coarse = true;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t i = rem % nodes;
      rem /= nodes;
      x[d] = -radius + h * static_cast<double>(i);
      const bool edge = i == 0 || i + 1 == static_cast<std::size_t>(nodes);
      lf += edge ? -std::numbers::ln2 : 0.0;
      if (i % 2 == 1) in_coarse = false;
      lc += edge ? 0.0 : std::numbers::ln2;
    }
    const double ld = mu.log_density(x);
    if (ld < kLogFloor) continue;
    if (std::isnan(ld)) throw QuadratureError("density is NaN at a quadrature node", x);
    ns.points.push_back(x);
    ns.log_w_fine.push_back(lf + ld);
    ns.log_w_coarse.push_back(in_coarse ? lc + ld : kNegInf);
  }
  normalize(ns.log_w_fine);
  normalize(ns.log_w_coarse);
  return ns;
}

NodeSet adaptive_1d_nodes(const Density& mu, int panels) {
  if (mu.dim() != 1) throw QuadratureError("adaptive_1d is one-dimensional");
  NodeSet ns;
  ns.dim = 1;
  ns.scheme = Scheme::adaptive_1d;
  ns.nodes_per_axis = panels;
  const KronrodPanel& k = kronrod15();
  const bool compact = mu.compact_support();
  const double radius = mu.truncation_radius();
  ns.truncation_radius = compact ? radius : std::numeric_limits<double>::infinity();
  const double scale = mu.heavy_tailed() ? 1.0 : radius / 8.0;
  const double lo = compact ? -radius : -std::numbers::pi / 2.0;
  const double hi = -lo;
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + width * p;
    const double mid = a + 0.5 * width;
    for (std::size_t i = 0; i < k.nodes.size(); ++i) {
      const double u = mid + 0.5 * width * k.nodes[i];
      double x = u;
      double jac = 0.5 * width;
      if (!compact) {
        const double c = std::cos(u);
        x = scale * std::tan(u);
        jac *= scale / (c * c);
      }
      const double ld = mu.log_density(Point{x});
      if (!(ld >= kLogFloor) || !std::isfinite(x)) continue;
      ns.points.push_back(Point{x});
      ns.log_w_fine.push_back(std::log(k.kronrod_weights[i] * jac) + ld);
      ns.log_w_coarse.push_back(k.gauss_weights[i] > 0.0 ? std::log(k.gauss_weights[i] * jac) + ld : kNegInf);
    }
  }
  normalize(ns.log_w_fine);
  normalize(ns.log_w_coarse);
  return ns;
}

NodeSet monte_carlo_nodes(const Density& mu, const QuadratureSpec& spec) {
  const std::size_t count = spec.mc_samples;
  if (count < kMcBatches) throw std::invalid_argument("monte_carlo needs at least 16 samples");
  NodeSet ns;
  ns.dim = mu.dim();
  ns.scheme = Scheme::monte_carlo;
  ns.batches = kMcBatches;
  ns.points.assign(count, Point(mu.dim()));
  const std::size_t chunks = (count + kMcChunk - 1) / kMcChunk;
  parallel_for(
      chunks,
      [&](std::size_t c) {
        Rng rng(mix_seed(spec.seed, c));
        const std::size_t end = std::min(count, (c + 1) * kMcChunk);
        for (std::size_t i = c * kMcChunk; i < end; ++i) ns.points[i] = mu.sample(rng);
      },
      2);
  ns.log_w_fine.assign(count, -std::log(static_cast<double>(count)));
  return ns;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::automatic: return "automatic";
    case Scheme::gauss_hermite: return "gauss_hermite";
    case Scheme::tensor_trapezoid: return "tensor_trapezoid";
    case Scheme::adaptive_1d: return "adaptive_1d";
    case Scheme::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "automatic") return Scheme::automatic;
  if (name == "gauss_hermite") return Scheme::gauss_hermite;
  if (name == "tensor_trapezoid") return Scheme::tensor_trapezoid;
  if (name == "adaptive_1d") return Scheme::adaptive_1d;
  if (name == "monte_carlo") return Scheme::monte_carlo;
  throw std::invalid_argument(fmt::format("unknown quadrature scheme '{}'", name));
}

nlohmann::ordered_json to_json(const QuadratureSpec& s) {
  nlohmann::ordered_json j;
  j["scheme"] = to_string(s.scheme);
  j["nodes_per_axis"] = s.nodes_per_axis;
  j["truncation_radius"] = s.truncation_radius;
  j["mc_samples"] = s.mc_samples;
  j["seed"] = s.seed;
  j["target_rel_tol"] = s.target_rel_tol;
  return j;
}

QuadratureSpec quadrature_spec_from_json(const nlohmann::ordered_json& j) {
  QuadratureSpec s;
  if (j.contains("scheme")) s.scheme = parse_scheme(j.at("scheme").get<std::string>());
  if (j.contains("nodes_per_axis")) s.nodes_per_axis = j.at("nodes_per_axis").get<int>();
  if (j.contains("truncation_radius")) s.truncation_radius = j.at("truncation_radius").get<double>();
  if (j.contains("mc_samples")) s.mc_samples = j.at("mc_samples").get<std::size_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("target_rel_tol")) s.target_rel_tol = j.at("target_rel_tol").get<double>();
  return s;
}

Scheme resolve_scheme(const Density& mu, const QuadratureSpec& spec) {
  if (spec.scheme != Scheme::automatic) return spec.scheme;
  const std::size_t n = mu.dim();
  if (n > 3) return Scheme::monte_carlo;
  if (mu.gaussian_axes()) return Scheme::gauss_hermite;
  if (n == 1) return Scheme::adaptive_1d;
  return Scheme::tensor_trapezoid;
}

NodeSet build_nodes(const Density& mu, const QuadratureSpec& spec) {
  const Scheme scheme = resolve_scheme(mu, spec);
  if (scheme != Scheme::monte_carlo && mu.dim() > 3) {
    throw QuadratureError(fmt::format("{} supports dim <= 3; use monte_carlo", to_string(scheme)));
  }
  const int nodes = spec.nodes_per_axis > 0 ? spec.nodes_per_axis : default_nodes(scheme, mu.dim());
  switch (scheme) {
    case Scheme::gauss_hermite: return gauss_hermite_nodes(mu, nodes);
    case Scheme::tensor_trapezoid:
      return trapezoid_nodes(mu, nodes, spec.truncation_radius > 0.0 ? spec.truncation_radius : mu.truncation_radius());
    case Scheme::adaptive_1d: return adaptive_1d_nodes(mu, nodes);
    case Scheme::monte_carlo: return monte_carlo_nodes(mu, spec);
    case Scheme::automatic: break;
  }
  throw std::logic_error("unresolved quadrature scheme");
}

Estimate estimate_functional(const NodeSet& nodes, const std::function<double(const RuleView&)>& fn) {
  const std::size_t size = nodes.points.size();
  const double fine = fn(RuleView{nodes.log_w_fine, 0.0, 0, size});
  if (!nodes.monte_carlo()) {
    const double coarse = fn(RuleView{nodes.log_w_coarse, 0.0, 0, size});
    return {fine, std::abs(fine - coarse)};
  }
  const std::size_t b = nodes.batches;
  std::vector<double> vals(b);
  const double shift = std::log(static_cast<double>(b));
  for (std::size_t k = 0; k < b; ++k) vals[k] = fn(RuleView{nodes.log_w_fine, shift, k * size / b, (k + 1) * size / b});
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(b);
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(b - 1);
  return {fine, std::sqrt(var / static_cast<double>(b))};
}

LogMoments log_moments(const RuleView& rule, std::span<const double> log_integrand,
                       std::span<const std::span<const double>> factors, std::size_t* floored) {
  double m = kNegInf;
  std::size_t count = 0;
  for (std::size_t i = rule.begin; i < rule.end; ++i) {
    if (rule.log_w[i] == kNegInf) continue;
    if (log_integrand[i] < kLogFloor) {
      ++count;
      continue;
    }
    m = std::max(m, rule.log_w[i] + rule.log_shift + log_integrand[i]);
  }
  if (floored != nullptr) *floored = count;
  LogMoments out;
  out.means.assign(factors.size(), 0.0);
  if (m == kNegInf) {
    out.log_mass = kNegInf;
    return out;
  }
  double s0 = 0.0;
  std::vector<double> sk(factors.size(), 0.0);
  for (std::size_t i = rule.begin; i < rule.end; ++i) {
    if (rule.log_w[i] == kNegInf || log_integrand[i] < kLogFloor) continue;
    const double w = std::exp(rule.log_w[i] + rule.log_shift + log_integrand[i] - m);
    s0 += w;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      if (!factors[k].empty()) sk[k] += w * factors[k][i];
    }
  }
  out.log_mass = m + std::log(s0);
  for (std::size_t k = 0; k < factors.size(); ++k) out.means[k] = sk[k] / s0;
  return out;
}

std::vector<double> log_values_at(const NodeSet& nodes, const std::function<double(const Point&)>& log_f) {
  std::vector<double> out(nodes.points.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = log_f(nodes.points[i]); });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i]) || out[i] == std::numeric_limits<double>::infinity()) {
      throw QuadratureError(fmt::format("integrand is not finite at {}", to_string(nodes.points[i])), nodes.points[i]);
    }
  }
  return out;
}

Estimate integrate(const std::function<double(const Point&)>& h, const NodeSet& nodes) {
  std::vector<double> vals(nodes.points.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = h(nodes.points[i]); });
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!std::isfinite(vals[i])) {
      throw QuadratureError(fmt::format("integrand is not finite at {}", to_string(nodes.points[i])), nodes.points[i]);
    }
  }
  return estimate_functional(nodes, [&](const RuleView& r) {
    double s = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (r.log_w[i] != kNegInf) s += std::exp(r.log_w[i] + r.log_shift) * vals[i];
    }
    return s;
  });
}

namespace {

// Fully adaptive integral over the line; `weighted(x, log_density)` returns the
// integrand already multiplied by the density.
Estimate adaptive_line(const std::function<double(const Point&, double)>& weighted, const Density& mu,
                       const QuadratureSpec& spec) {
  if (mu.dim() != 1) throw QuadratureError("adaptive_1d is one-dimensional");
  auto g = [&](double t) {
    const Point x{t};
    const double ld = mu.log_density(x);
    if (ld < kLogFloor) return 0.0;
    const double v = weighted(x, ld);
    if (!std::isfinite(v)) throw QuadratureError(fmt::format("integrand is not finite at {}", t), x);
    return v;
  };
  AdaptiveOptions opt;
  opt.abs_tol = 1e-15;
  opt.rel_tol = spec.target_rel_tol;
  opt.max_intervals = 20000;
  const double r = mu.truncation_radius();
  const AdaptiveResult res = mu.compact_support() ? adaptive_gauss_kronrod(g, -r, r, opt) : adaptive_real_line(g, opt);
  return {res.value, res.error};
}

}  // namespace

Estimate integrate(const std::function<double(const Point&)>& h, const Density& mu, const QuadratureSpec& spec) {
  if (resolve_scheme(mu, spec) == Scheme::adaptive_1d) {
    return adaptive_line([&](const Point& x, double ld) { return h(x) * std::exp(ld); }, mu, spec);
  }
  return integrate(h, build_nodes(mu, spec));
}

Estimate integrate(const ScalarField& f, const Density& mu, const QuadratureSpec& spec) {
  if (f.dim() != mu.dim()) throw std::invalid_argument("integrate: field and measure dimensions differ");
  if (resolve_scheme(mu, spec) == Scheme::adaptive_1d) {
    return adaptive_line([&](const Point& x, double ld) { return std::exp(f.log_value(x) + ld); }, mu, spec);
  }
  return integrate([&f](const Point& x) { return f.value(x); }, mu, spec);
}

Estimate log_lp_integral(const ScalarField& f, const NodeSet& nodes, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm needs p > 0");
  if (f.dim() != nodes.dim) throw std::invalid_argument("lp_norm: field and measure dimensions differ");
  std::vector<double> logs = log_values_at(nodes, [&f](const Point& x) { return f.log_value(x); });
  for (double& v : logs) v = v == kNegInf ? kNegInf : p * v;
  return estimate_functional(nodes, [&](const RuleView& r) { return log_moments(r, logs, {}).log_mass; });
}

Estimate lp_norm(const ScalarField& f, const NodeSet& nodes, double p) {
  const Estimate li = log_lp_integral(f, nodes, p);
  if (li.value == kNegInf) return {0.0, 0.0};
  const double log_norm = li.value / p;
  if (log_norm > 700.0) throw QuadratureError(fmt::format("L^{} norm overflows (log norm {:.4g})", p, log_norm));
  const double v = std::exp(log_norm);
  const double err = std::isfinite(li.error) ? v * std::expm1(std::min(li.error / p, 700.0)) : INFINITY;
  return {v, err};
}

Estimate lp_norm(const ScalarField& f, const Density& mu, double p, const QuadratureSpec& spec) {
  return lp_norm(f, build_nodes(mu, spec), p);
}

}  // namespace lsh
