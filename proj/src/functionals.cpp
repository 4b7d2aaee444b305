#include "lsh/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "lsh/error.hpp"
#include "lsh/parallel.hpp"

namespace lsh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxLog = 700.0;

void require_r(double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument(fmt::format("r must lie in (0, 1], got {}", r));
}

void require_c(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument(fmt::format("c must be positive, got {}", c));
}

double checked_exp(double l, const char* what) {
  if (l > kMaxLog) throw QuadratureError(fmt::format("{} overflows (log value {:.4g})", what, l));
  return std::exp(l);
}

// Log values of g and the Euler ratios x . grad ln g at every node; ratios are
// zero where g vanishes.
struct LogData {
  std::vector<double> log_g;
  std::vector<double> euler;
};

LogData log_data(const ScalarField& g, const NodeSet& nodes, bool with_euler) {
  if (g.dim() != nodes.dim) throw std::invalid_argument("field and measure dimensions differ");
  LogData d;
  d.log_g = log_values_at(nodes, [&g](const Point& x) { return g.log_value(x); });
  if (with_euler) {
    if (!g.has_gradient() && !g.smooth()) {
      throw std::invalid_argument("Euler operator needs a gradient or a smooth field: " + g.describe());
    }
    d.euler.assign(d.log_g.size(), 0.0);
    const double floor = std::log(1e-300);
    parallel_for(d.euler.size(), [&](std::size_t i) {
      if (d.log_g[i] >= floor) d.euler[i] = g.log_euler(nodes.points[i]);
    });
    for (std::size_t i = 0; i < d.euler.size(); ++i) {
      if (!std::isfinite(d.euler[i])) {
        throw QuadratureError(fmt::format("Euler ratio is not finite at {}", to_string(nodes.points[i])),
                              nodes.points[i]);
      }
    }
  }
  return d;
}

// True when every unfloored log value is bitwise equal: Ent is then exactly zero.
bool uniform_logs(const std::vector<double>& logs) {
  const double floor = std::log(1e-300);
  double ref = std::numeric_limits<double>::quiet_NaN();
  for (double v : logs) {
    if (v < floor) continue;
    if (std::isnan(ref)) ref = v;
    else if (v != ref) return false;
  }
  return true;
}

std::size_t count_floored(const NodeSet& nodes, const std::vector<double>& logs) {
  std::size_t n = 0;
  log_moments(RuleView{nodes.log_w_fine, 0.0, 0, nodes.points.size()}, logs, {}, &n);
  return n;
}

FunctionalValue pack(const Estimate& e, std::size_t floored) { return {e.value, e.error, floored}; }

// Log values of f_r^q and the Euler ratios of f_r^q.
LogData dilated_power_data(const ScalarField& f, const NodeSet& nodes, double r, double q, bool with_euler) {
  LogData d = log_data(dilate(f, r), nodes, with_euler);
  for (double& v : d.log_g) v = v == kNegInf ? kNegInf : q * v;
  for (double& v : d.euler) v *= q;
  return d;
}

double checked_q(double c, double r) {
  require_c(c);
  require_r(r);
  const double q = q_of_r(c, r);
  if (q > kMaxExponent) {
    throw QuadratureError(
        fmt::format("q(r) = {:.4g} at r = {} with c = {} exceeds {}; raise the r_grid minimum", q, r, c, kMaxExponent));
  }
  return q;
}

}  // namespace

double q_of_r(double c, double r) {
  require_c(c);
  require_r(r);
  return std::pow(r, -2.0 / c);
}

double contraction_time(double c, double p, double q) {
  require_c(c);
  if (!(p > 0.0 && p <= q)) throw std::invalid_argument(fmt::format("need 0 < p <= q, got p = {}, q = {}", p, q));
  return std::pow(p / q, c / 2.0);
}

std::vector<double> default_r_grid() { return {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}; }

void HCParams::validate() const {
  require_c(c);
  if (r_grid.empty()) throw std::invalid_argument("r_grid is empty");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    require_r(r_grid[i]);
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw std::invalid_argument("r_grid must be strictly increasing");
  }
  if (!(p > 0.0 && p <= q)) throw std::invalid_argument(fmt::format("need 0 < p <= q, got p = {}, q = {}", p, q));
}

FunctionalValue entropy(const ScalarField& g, const NodeSet& nodes) {
  const LogData d = log_data(g, nodes, false);
  if (uniform_logs(d.log_g)) return {0.0, 0.0, count_floored(nodes, d.log_g)};
  const std::span<const double> factors[] = {d.log_g};
  const Estimate e = estimate_functional(nodes, [&](const RuleView& rule) {
    const LogMoments m = log_moments(rule, d.log_g, factors);
    if (m.log_mass == kNegInf) return 0.0;
    if (m.log_mass == std::numeric_limits<double>::infinity()) throw QuadratureError("|g|_1 diverges");
    return checked_exp(m.log_mass, "|g|_1") * (m.means[0] - m.log_mass);
  });
  return pack(e, count_floored(nodes, d.log_g));
}

FunctionalValue entropy(const ScalarField& g, const Density& mu, const QuadratureSpec& spec) {
  return entropy(g, build_nodes(mu, spec));
}

FunctionalValue euler_energy(const ScalarField& g, const NodeSet& nodes) {
  const LogData d = log_data(g, nodes, true);
  const std::span<const double> factors[] = {d.euler};
  const Estimate e = estimate_functional(nodes, [&](const RuleView& rule) {
    const LogMoments m = log_moments(rule, d.log_g, factors);
    if (m.log_mass == kNegInf) return 0.0;
    return checked_exp(m.log_mass, "|g|_1") * m.means[0];
  });
  return pack(e, count_floored(nodes, d.log_g));
}

FunctionalValue euler_energy(const ScalarField& g, const Density& mu, const QuadratureSpec& spec) {
  return euler_energy(g, build_nodes(mu, spec));
}

FunctionalValue alpha(const ScalarField& f, const NodeSet& nodes, double c, double r) {
  const double q = checked_q(c, r);
  const LogData d = dilated_power_data(f, nodes, r, q, false);
  const Estimate e = estimate_functional(nodes, [&](const RuleView& rule) {
    const double l = log_moments(rule, d.log_g, {}).log_mass;
    return l == kNegInf ? 0.0 : checked_exp(l / q, "alpha(r)");
  });
  return pack(e, count_floored(nodes, d.log_g));
}

FunctionalValue alpha(const ScalarField& f, const Density& mu, double c, double r, const QuadratureSpec& spec) {
  return alpha(f, build_nodes(mu, spec), c, r);
}

FunctionalValue alpha_prime_analytic(const ScalarField& f, const NodeSet& nodes, double c, double r) {
  const double q = checked_q(c, r);
  // log_g = q ln f(rx); euler = q r x . grad ln f(rx)
  const LogData d = dilated_power_data(f, nodes, r, q, true);
  const std::span<const double> factors[] = {d.log_g, d.euler};
  const Estimate e = estimate_functional(nodes, [&](const RuleView& rule) {
    const LogMoments m = log_moments(rule, d.log_g, factors);
    if (m.log_mass == kNegInf) return 0.0;
    const double a = checked_exp(m.log_mass / q, "alpha(r)");
    return 2.0 / (c * r * q) * a * (m.log_mass - m.means[0] + 0.5 * c * m.means[1]);
  });
  return pack(e, count_floored(nodes, d.log_g));
}

FunctionalValue alpha_prime_analytic(const ScalarField& f, const Density& mu, double c, double r,
                                     const QuadratureSpec& spec) {
  return alpha_prime_analytic(f, build_nodes(mu, spec), c, r);
}

double alpha_prime_fd(const ScalarField& f, const NodeSet& nodes, double c, double r, double h) {
  require_r(r);
  if (!(h > 0.0) || r - 2.0 * h <= 0.0) throw std::invalid_argument("finite-difference step out of range");
  auto a = [&](double t) { return alpha(f, nodes, c, t).value; };
  if (r + h <= 1.0) return (a(r + h) - a(r - h)) / (2.0 * h);
  return (3.0 * a(r) - 4.0 * a(r - h) + a(r - 2.0 * h)) / (2.0 * h);
}

FunctionalValue hc_bracket(const ScalarField& f, const NodeSet& nodes, double c, double r) {
  const double q = checked_q(c, r);
  const ScalarField g = power(dilate(f, r), q);
  const LogData d = log_data(g, nodes, true);
  const bool uniform = uniform_logs(d.log_g);
  const std::span<const double> factors[] = {d.log_g, d.euler};
  const Estimate e = estimate_functional(nodes, [&](const RuleView& rule) {
    const LogMoments m = log_moments(rule, d.log_g, factors);
    if (m.log_mass == kNegInf) return 0.0;
    const double mass = checked_exp(m.log_mass, "|f_r^q|_1");
    const double ent = uniform ? 0.0 : mass * (m.means[0] - m.log_mass);
    const double energy = mass * m.means[1];
    return -ent + 0.5 * c * energy;
  });
  return pack(e, count_floored(nodes, d.log_g));
}

FunctionalValue hc_bracket(const ScalarField& f, const Density& mu, double c, double r, const QuadratureSpec& spec) {
  return hc_bracket(f, build_nodes(mu, spec), c, r);
}

double bracket_from_derivative(double c, double r, double alpha, double alpha_prime) {
  const double q = q_of_r(c, r);
  return 0.5 * c * r * q * std::pow(alpha, q - 1.0) * alpha_prime;
}

}  // namespace lsh
