#include "lsh/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "lsh/random.hpp"

namespace lsh {

Rule1D gauss_hermite_rule(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
  // Newton iteration on orthonormal Hermite polynomials with the usual
  // asymptotic initial guesses for the largest roots.
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  Rule1D rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.nodes[m - 1] = 0.0;
  std::reverse(rule.nodes.begin(), rule.nodes.end());
  std::reverse(rule.weights.begin(), rule.weights.end());
  return rule;
}

Rule1D gauss_legendre_rule(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  Rule1D rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.nodes[m - 1] = 0.0;
  return rule;
}

const KronrodPanel& kronrod15() {
  static const KronrodPanel panel = [] {
    const double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.0};
    const double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    KronrodPanel p;
    for (int i = 0; i < 7; ++i) {
      const double g = (i % 2 == 1) ? wg[i / 2] : 0.0;
      p.nodes.push_back(-xgk[i]);
      p.kronrod_weights.push_back(wgk[i]);
      p.gauss_weights.push_back(g);
    }
    p.nodes.push_back(0.0);
    p.kronrod_weights.push_back(wgk[7]);
    p.gauss_weights.push_back(wg[3]);
    for (int i = 6; i >= 0; --i) {
      const double g = (i % 2 == 1) ? wg[i / 2] : 0.0;
      p.nodes.push_back(xgk[i]);
      p.kronrod_weights.push_back(wgk[i]);
      p.gauss_weights.push_back(g);
    }
    return p;
  }();
  return panel;
}

namespace {

struct Interval {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gk15(const std::function<double(double)>& f, double a, double b) {
  const auto& panel = kronrod15();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double k = 0.0;
  double g = 0.0;
  for (std::size_t i = 0; i < panel.nodes.size(); ++i) {
    const double y = f(c + h * panel.nodes[i]);
    k += panel.kronrod_weights[i] * y;
    g += panel.gauss_weights[i] * y;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

AdaptiveResult adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                      const AdaptiveOptions& options) {
  std::priority_queue<Interval> heap;
  heap.push(gk15(f, a, b));
  double total = heap.top().value;
  double error = heap.top().error;
  AdaptiveResult result;
  while (static_cast<int>(heap.size()) < options.max_intervals) {
    if (!std::isfinite(total)) break;
    if (error <= std::max(options.abs_tol, options.rel_tol * std::abs(total))) {
      result.converged = true;
      break;
    }
    const Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Interval left = gk15(f, worst.a, mid);
    const Interval right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  result.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  result.value = total;
  result.error = error;
  if (!result.converged) {
    result.converged = error <= std::max(options.abs_tol, options.rel_tol * std::abs(total));
  }
  return result;
}

AdaptiveResult adaptive_real_line(const std::function<double(double)>& f, const AdaptiveOptions& options) {
  const double half_pi = 0.5 * std::numbers::pi;
  auto g = [&](double theta) {
    const double c = std::cos(theta);
    return f(std::tan(theta)) / (c * c);
  };
  return adaptive_gauss_kronrod(g, -half_pi, half_pi, options);
}

AdaptiveResult adaptive_half_line(const std::function<double(double)>& f, const AdaptiveOptions& options) {
  const double half_pi = 0.5 * std::numbers::pi;
  auto g = [&](double theta) {
    const double c = std::cos(theta);
    return f(std::tan(theta)) / (c * c);
  };
  return adaptive_gauss_kronrod(g, 0.0, half_pi, options);
}

double unit_sphere_area(std::size_t n) {
  const double half = 0.5 * static_cast<double>(n);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double unit_ball_volume(std::size_t n) {
  const double half = 0.5 * static_cast<double>(n);
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

std::size_t default_sphere_count(std::size_t n) {
  switch (n) {
    case 1:
      return 2;
    case 2:
      return 64;
    case 3:
      return 256;
    default:
      return 512;
  }
}

std::vector<Point> sphere_directions(std::size_t n, std::size_t count) {
  if (n == 0 || n > kMaxDim) throw std::invalid_argument("sphere_directions: unsupported dimension");
  std::vector<Point> dirs;
  if (n == 1) {
    dirs.push_back(Point{1.0});
    dirs.push_back(Point{-1.0});
    return dirs;
  }
  if (count < 2) throw std::invalid_argument("sphere_directions: need at least two directions");
  if (n == 2) {
    dirs.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
      dirs.push_back(Point{std::cos(theta), std::sin(theta)});
    }
    return dirs;
  }
  const std::size_t half = count / 2;
  dirs.reserve(2 * half);
  if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < half; ++i) {
      const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(half);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(i);
      dirs.push_back(Point{rho * std::cos(phi), rho * std::sin(phi), z});
    }
  } else {
    Rng rng(0x5eed0000ULL + n);
    for (std::size_t i = 0; i < half; ++i) {
      Point d(n);
      for (auto& v : d) v = rng.normal();
      dirs.push_back((1.0 / norm(d)) * d);
    }
  }
  for (std::size_t i = 0; i < half; ++i) dirs.push_back(-dirs[i]);
  return dirs;
}

}  // namespace lsh
