#include "lsh/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "lsh/error.hpp"
#include "lsh/parallel.hpp"
#include "lsh/rules.hpp"

namespace lsh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(fmt::format("{} must be positive and finite", what));
}

void require_dim(std::size_t dim) {
  if (dim == 0 || dim > kMaxDim) throw std::invalid_argument(fmt::format("dimension must be in [1, {}]", kMaxDim));
}

Point random_direction(Rng& rng, std::size_t dim) {
  Point d(dim);
  double n2 = 0.0;
  do {
    for (auto& v : d) v = rng.normal();
    n2 = norm_sq(d);
  } while (n2 == 0.0);
  return (1.0 / std::sqrt(n2)) * d;
}

// S_{n-1} * int_0^limit t^{n-1} exp(h(t)) dt, returned as a log.
double radial_log_mass(std::size_t dim, const std::function<double(double)>& log_profile, double limit) {
  auto integrand = [&](double t) {
    const double lp = log_profile(t);
    if (lp == kNegInf) return 0.0;
    return std::pow(t, static_cast<double>(dim) - 1.0) * std::exp(lp);
  };
  AdaptiveResult res = std::isfinite(limit) ? adaptive_gauss_kronrod(integrand, 0.0, limit)
                                            : adaptive_half_line(integrand);
  if (!(res.value > 0.0) || !std::isfinite(res.value)) throw QuadratureError("normalization integral is not positive");
  return std::log(unit_sphere_area(dim) * res.value);
}

std::string fmt_num(double v) { return fmt::format("{:g}", v); }

// ----------------------------------------------------------------------------
// Built-in families

class GaussianModel final : public DensityModel {
 public:
  GaussianModel(double sigma, std::size_t dim, Point mean) : sigma_(sigma), dim_(dim), mean_(mean) {
    if (mean_.empty()) mean_ = Point(dim);
    if (mean_.dim() != dim) throw std::invalid_argument("gaussian mean has wrong dimension");
    centered_ = norm(mean_) == 0.0;
    const double s = sigma_;
    log_mass_ = radial_log_mass(dim_, [s](double t) { return -t * t / (2.0 * s * s); },
                                std::numeric_limits<double>::infinity());
  }
  std::size_t dim() const override { return dim_; }
  double log_unnormalized(const Point& x) const override {
    return -norm_sq(x - mean_) / (2.0 * sigma_ * sigma_);
  }
  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    Point x(dim_);
    for (std::size_t i = 0; i < dim_; ++i) x[i] = mean_[i] + sigma_ * rng.normal();
    return x;
  }
  double truncation_radius() const override {
    return 8.0 * sigma_ * std::sqrt(static_cast<double>(dim_)) + norm(mean_);
  }
  bool rotation_invariant() const override { return centered_; }
  std::optional<GaussianAxes> gaussian_axes() const override {
    return GaussianAxes{mean_, Point::filled(dim_, sigma_)};
  }
  Provenance provenance() const override { return Provenance::builtin; }
  std::string describe() const override {
    if (centered_) return fmt::format("gaussian(sigma={}, dim={})", fmt_num(sigma_), dim_);
    return fmt::format("gaussian(sigma={}, dim={}, mean={})", fmt_num(sigma_), dim_, to_string(mean_));
  }

 private:
  double sigma_;
  std::size_t dim_;
  Point mean_;
  bool centered_ = true;
  double log_mass_ = 0.0;
};

class GenExponentialModel final : public DensityModel {
 public:
  GenExponentialModel(double c, double a, std::size_t dim) : c_(c), a_(a), dim_(dim) {
    log_mass_ = radial_log_mass(dim_, [c, a](double t) { return -c * std::pow(t, a); },
                                std::numeric_limits<double>::infinity());
    // c |X|^a ~ Gamma(n / a): the tail mass beyond R is Q(n / a, c R^a).
    const double shape = static_cast<double>(dim_) / a_;
    const double u = boost::math::gamma_q_inv(shape, 1e-12);
    radius_ = std::pow(u / c_, 1.0 / a_);
  }
  std::size_t dim() const override { return dim_; }
  double log_unnormalized(const Point& x) const override { return -c_ * std::pow(norm(x), a_); }
  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    const double g = rng.gamma(static_cast<double>(dim_) / a_);
    const double t = std::pow(g / c_, 1.0 / a_);
    return t * random_direction(rng, dim_);
  }
  double truncation_radius() const override { return radius_; }
  bool rotation_invariant() const override { return true; }
  std::optional<GaussianAxes> gaussian_axes() const override {
    if (a_ != 2.0) return std::nullopt;
    return GaussianAxes{Point(dim_), Point::filled(dim_, 1.0 / std::sqrt(2.0 * c_))};
  }
  Provenance provenance() const override { return Provenance::builtin; }
  std::string describe() const override {
    return fmt::format("gen_exponential(c={}, a={}, dim={})", fmt_num(c_), fmt_num(a_), dim_);
  }

 private:
  double c_;
  double a_;
  std::size_t dim_;
  double log_mass_ = 0.0;
  double radius_ = 0.0;
};

class PolyTailModel final : public DensityModel {
 public:
  explicit PolyTailModel(double alpha) : alpha_(alpha) {
    const double al = alpha_;
    auto f = [al](double x) { return std::pow(1.0 + x * x, -al); };
    const AdaptiveResult res = adaptive_real_line(f);
    if (!(res.value > 0.0)) throw QuadratureError("poly_tail normalization failed");
    log_mass_ = std::log(res.value);
    // Search radius: two-sided tail mass 1e-3, by bisection on log R.
    auto tail = [&](double r) {
      AdaptiveOptions opt;
      opt.abs_tol = 0.0;
      opt.rel_tol = 1e-8;
      return 2.0 * adaptive_half_line([&](double u) { return f(r + u); }, opt).value / res.value;
    };
    double lo = 0.0;
    double hi = std::log(1e4);
    if (tail(std::exp(hi)) > 1e-3) {
      radius_ = 1e4;
    } else {
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(std::exp(mid)) > 1e-3 ? lo : hi) = mid;
      }
      radius_ = std::exp(hi);
    }
  }
  std::size_t dim() const override { return 1; }
  double log_unnormalized(const Point& x) const override { return -alpha_ * std::log1p(x[0] * x[0]); }
  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    // Student t with nu = 2 alpha - 1 degrees of freedom, rescaled to (1 + x^2)^-alpha.
    const double nu = 2.0 * alpha_ - 1.0;
    const double z = rng.normal();
    const double v = 2.0 * rng.gamma(0.5 * nu);
    return Point{z / std::sqrt(v)};
  }
  double truncation_radius() const override { return radius_; }
  bool rotation_invariant() const override { return true; }
  bool heavy_tailed() const override { return true; }
  Provenance provenance() const override { return Provenance::builtin; }
  std::string describe() const override { return fmt::format("poly_tail(alpha={})", fmt_num(alpha_)); }

 private:
  double alpha_;
  double log_mass_ = 0.0;
  double radius_ = 0.0;
};

class UniformBallModel final : public DensityModel {
 public:
  UniformBallModel(double radius, std::size_t dim) : radius_(radius), dim_(dim) {
    log_mass_ = radial_log_mass(dim_, [](double) { return 0.0; }, radius_);
  }
  std::size_t dim() const override { return dim_; }
  double log_unnormalized(const Point& x) const override { return norm(x) <= radius_ ? 0.0 : kNegInf; }
  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    const double t = radius_ * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim_));
    return t * random_direction(rng, dim_);
  }
  double truncation_radius() const override { return radius_; }
  bool rotation_invariant() const override { return true; }
  bool compact_support() const override { return true; }
  Provenance provenance() const override { return Provenance::builtin; }
  std::string describe() const override {
    return fmt::format("uniform_ball(radius={}, dim={})", fmt_num(radius_), dim_);
  }

 private:
  double radius_;
  std::size_t dim_;
  double log_mass_ = 0.0;
};

// ----------------------------------------------------------------------------
// Composites

class MixtureModel final : public DensityModel {
 public:
  MixtureModel(Density m1, Density m2, double t)
      : m1_(std::move(m1)), m2_(std::move(m2)), t_(t), log_w1_(std::log1p(-t)), log_w2_(std::log(t)) {}
  std::size_t dim() const override { return m1_.dim(); }
  double log_unnormalized(const Point& x) const override {
    const double a = t_ < 1.0 ? log_w1_ + m1_.log_density(x) : kNegInf;
    const double b = t_ > 0.0 ? log_w2_ + m2_.log_density(x) : kNegInf;
    return log_sum_exp(a, b);
  }
  // Components are normalized, so the convex combination has unit mass.
  double log_mass() const override { return 0.0; }
  Point sample(Rng& rng) const override { return rng.uniform() < t_ ? m2_.sample(rng) : m1_.sample(rng); }
  double truncation_radius() const override {
    return std::max(m1_.truncation_radius(), m2_.truncation_radius());
  }
  bool rotation_invariant() const override { return m1_.rotation_invariant() && m2_.rotation_invariant(); }
  bool compact_support() const override { return m1_.compact_support() && m2_.compact_support(); }
  bool heavy_tailed() const override { return m1_.heavy_tailed() || m2_.heavy_tailed(); }
  Provenance provenance() const override { return Provenance::mixture; }
  std::string describe() const override {
    return fmt::format("mix({}, {}, t={})", m1_.describe(), m2_.describe(), fmt_num(t_));
  }
  std::vector<Density> components() const override { return {m1_, m2_}; }

 private:
  Density m1_;
  Density m2_;
  double t_;
  double log_w1_;
  double log_w2_;
};

class ProductModel final : public DensityModel {
 public:
  ProductModel(Density m1, Density m2) : m1_(std::move(m1)), m2_(std::move(m2)) {
    if (m1_.dim() + m2_.dim() > kMaxDim) throw std::invalid_argument("product dimension exceeds the supported maximum");
  }
  std::size_t dim() const override { return m1_.dim() + m2_.dim(); }
  double log_unnormalized(const Point& x) const override {
    return m1_.log_density(slice(x, 0, m1_.dim())) + m2_.log_density(slice(x, m1_.dim(), m2_.dim()));
  }
  double log_mass() const override { return 0.0; }
  Point sample(Rng& rng) const override {
    const Point a = m1_.sample(rng);
    return concat(a, m2_.sample(rng));
  }
  double truncation_radius() const override { return std::hypot(m1_.truncation_radius(), m2_.truncation_radius()); }
  bool rotation_invariant() const override {
    const auto g = gaussian_axes();
    if (!g) return false;
    for (std::size_t i = 0; i < g->mean.dim(); ++i) {
      if (g->mean[i] != 0.0 || g->sigma[i] != g->sigma[0]) return false;
    }
    return true;
  }
  bool compact_support() const override { return m1_.compact_support() || m2_.compact_support(); }
  bool heavy_tailed() const override { return m1_.heavy_tailed() || m2_.heavy_tailed(); }
  std::optional<GaussianAxes> gaussian_axes() const override {
    const auto g1 = m1_.gaussian_axes();
    const auto g2 = m2_.gaussian_axes();
    if (!g1 || !g2) return std::nullopt;
    return GaussianAxes{concat(g1->mean, g2->mean), concat(g1->sigma, g2->sigma)};
  }
  Provenance provenance() const override { return Provenance::product; }
  std::string describe() const override { return fmt::format("product({}, {})", m1_.describe(), m2_.describe()); }
  std::vector<Density> components() const override { return {m1_, m2_}; }

 private:
  Density m1_;
  Density m2_;
};

// Lagrange weights for the 4 nodes at offsets 0..3 evaluated at t (in node units).
void cubic_weights(double t, double w[4]) {
  const double t0 = t;
  const double t1 = t - 1.0;
  const double t2 = t - 2.0;
  const double t3 = t - 3.0;
  w[0] = -t1 * t2 * t3 / 6.0;
  w[1] = t0 * t2 * t3 / 2.0;
  w[2] = -t0 * t1 * t3 / 2.0;
  w[3] = t0 * t1 * t2 / 6.0;
}

class ConvolutionModel final : public DensityModel {
 public:
  ConvolutionModel(Density m1, Density m2, const ConvolutionOptions& opt) : m1_(std::move(m1)), m2_(std::move(m2)) {
    dim_ = m1_.dim();
    const double r1 = m1_.truncation_radius();
    const double r2 = m2_.truncation_radius();
    compact_ = m1_.compact_support() && m2_.compact_support();
    radius_ = (m1_.compact_support() || m2_.compact_support()) ? r1 + r2 : std::hypot(r1, r2);
    static constexpr int kCacheNodes[] = {0, 4001, 161, 33};
    static constexpr int kInnerNodes[] = {0, 1601, 41, 13};
    nodes_ = opt.cache_nodes_per_axis > 0 ? opt.cache_nodes_per_axis : kCacheNodes[dim_];
    inner_ = opt.inner_nodes_per_axis > 0 ? opt.inner_nodes_per_axis : kInnerNodes[dim_];
    if (nodes_ < 8 || inner_ < 3) throw std::invalid_argument("convolution grid too coarse");
    extent_ = opt.cache_extent_factor * radius_;
    h_ = 2.0 * extent_ / (nodes_ - 1);

    std::size_t total = 1;
    for (std::size_t d = 0; d < dim_; ++d) total *= static_cast<std::size_t>(nodes_);
    cache_.assign(total, 0.0);
    parallel_for(total, [&](std::size_t idx) { cache_[idx] = direct(node_point(idx)); }, 64);

    // Renormalize: trapezoid mass of the tabulated density.
    double m = kNegInf;
    for (double v : cache_) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (cache_[idx] == kNegInf) continue;
      double w = 1.0;
      std::size_t rem = idx;
      for (std::size_t d = 0; d < dim_; ++d) {
        const std::size_t i = rem % nodes_;
        rem /= nodes_;
        if (i == 0 || i + 1 == static_cast<std::size_t>(nodes_)) w *= 0.5;
      }
      sum += w * std::exp(cache_[idx] - m);
    }
    log_mass_ = m + std::log(sum) + static_cast<double>(dim_) * std::log(h_);
  }

  std::size_t dim() const override { return dim_; }

  double log_unnormalized(const Point& x) const override {
    // Stencil base index per axis; fall back to direct quadrature off the grid.
    std::size_t base[3];
    double w[3][4];
    for (std::size_t d = 0; d < dim_; ++d) {
      const double u = (x[d] + extent_) / h_;
      const double fl = std::floor(u);
      if (!(fl >= 1.0) || fl + 2.0 > nodes_ - 1) return direct(x);
      base[d] = static_cast<std::size_t>(fl) - 1;
      cubic_weights(u - static_cast<double>(base[d]), w[d]);
    }
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << (2 * dim_);
    for (std::size_t c = 0; c < corners; ++c) {
      std::size_t idx = 0;
      std::size_t stride = 1;
      double weight = 1.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const std::size_t off = (c >> (2 * d)) & 3U;
        idx += (base[d] + off) * stride;
        stride *= nodes_;
        weight *= w[d][off];
      }
      const double v = cache_[idx];
      if (v == kNegInf) return direct(x);
      acc += weight * v;
    }
    return acc;
  }

  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    const Point a = m1_.sample(rng);
    return a + m2_.sample(rng);
  }
  double truncation_radius() const override { return radius_; }
  bool rotation_invariant() const override { return m1_.rotation_invariant() && m2_.rotation_invariant(); }
  bool compact_support() const override { return compact_; }
  bool heavy_tailed() const override { return m1_.heavy_tailed() || m2_.heavy_tailed(); }
  std::optional<GaussianAxes> gaussian_axes() const override {
    const auto g1 = m1_.gaussian_axes();
    const auto g2 = m2_.gaussian_axes();
    if (!g1 || !g2) return std::nullopt;
    Point sigma(dim_);
    for (std::size_t i = 0; i < dim_; ++i) sigma[i] = std::hypot(g1->sigma[i], g2->sigma[i]);
    return GaussianAxes{g1->mean + g2->mean, sigma};
  }
  Provenance provenance() const override { return Provenance::convolution; }
  std::string describe() const override { return fmt::format("convolve({}, {})", m1_.describe(), m2_.describe()); }
  std::vector<Density> components() const override { return {m1_, m2_}; }

 private:
  Point node_point(std::size_t idx) const {
    Point x(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
      x[d] = -extent_ + h_ * static_cast<double>(idx % nodes_);
      idx /= nodes_;
    }
    return x;
  }

  // log int rho1(x - u) rho2(u) du by a tensor trapezoid over the box where
  // both factors are non-negligible.
  double direct(const Point& x) const {
    const double r1 = m1_.truncation_radius();
    const double r2 = m2_.truncation_radius();
    double lo[3];
    double step[3];
    for (std::size_t d = 0; d < dim_; ++d) {
      double a = std::max(-r2, x[d] - r1);
      double b = std::min(r2, x[d] + r1);
      if (!(b > a)) {
        a = std::min(0.0, x[d]);
        b = std::max(0.0, x[d]);
      }
      lo[d] = a;
      step[d] = (b - a) / (inner_ - 1);
    }
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim_; ++d) total *= static_cast<std::size_t>(inner_);
    // Two passes: max then scaled sum.
    thread_local std::vector<double> vals;
    vals.resize(total);
    double m = kNegInf;
    Point u(dim_);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      double lw = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const std::size_t i = rem % inner_;
        rem /= inner_;
        u[d] = lo[d] + step[d] * static_cast<double>(i);
        if (i == 0 || i + 1 == static_cast<std::size_t>(inner_)) lw += -std::numbers::ln2;
      }
      const double v = lw + m1_.log_density(x - u) + m2_.log_density(u);
      vals[idx] = v;
      m = std::max(m, v);
    }
    if (m == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double v : vals) sum += std::exp(v - m);
    double log_cell = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) log_cell += std::log(step[d]);
    return m + std::log(sum) + log_cell;
  }

  Density m1_;
  Density m2_;
  std::size_t dim_ = 1;
  bool compact_ = false;
  double radius_ = 0.0;
  int nodes_ = 0;
  int inner_ = 0;
  double extent_ = 0.0;
  double h_ = 0.0;
  std::vector<double> cache_;
  double log_mass_ = 0.0;
};

class PerturbationModel final : public DensityModel {
 public:
  PerturbationModel(Density base, double amplitude, double frequency)
      : base_(std::move(base)), amp_(amplitude), freq_(frequency) {
    log_mass_ = std::log(mean_weight());
  }
  double weight(const Point& x) const { return 1.0 + amp_ * std::cos(freq_ * norm(x)); }
  std::size_t dim() const override { return base_.dim(); }
  double log_unnormalized(const Point& x) const override { return base_.log_density(x) + std::log(weight(x)); }
  double log_mass() const override { return log_mass_; }
  Point sample(Rng& rng) const override {
    const double top = 1.0 + std::abs(amp_);
    for (;;) {
      const Point x = base_.sample(rng);
      if (rng.uniform() * top < weight(x)) return x;
    }
  }
  double truncation_radius() const override { return base_.truncation_radius(); }
  bool rotation_invariant() const override { return base_.rotation_invariant(); }
  bool compact_support() const override { return base_.compact_support(); }
  bool heavy_tailed() const override { return base_.heavy_tailed(); }
  Provenance provenance() const override { return Provenance::perturbation; }
  std::string describe() const override {
    return fmt::format("perturb({}, amplitude={}, frequency={})", base_.describe(), fmt_num(amp_), fmt_num(freq_));
  }
  std::vector<Density> components() const override { return {base_}; }

  const Density& base() const { return base_; }
  double lower() const { return (1.0 - std::abs(amp_)) / std::exp(log_mass_); }
  double upper() const { return (1.0 + std::abs(amp_)) / std::exp(log_mass_); }

 private:
  // E_base[w], the mass of w * rho_base.
  double mean_weight() const {
    const std::size_t n = base_.dim();
    if (base_.rotation_invariant()) {
      const double lz = std::log(unit_sphere_area(n));
      auto f = [&](double t) {
        const double ld = base_.log_density(Point::unit(n, 0) * t);
        if (ld == kNegInf) return 0.0;
        return std::pow(t, static_cast<double>(n) - 1.0) * std::exp(ld + lz) * (1.0 + amp_ * std::cos(freq_ * t));
      };
      const double lim = base_.compact_support() ? base_.truncation_radius() : std::numeric_limits<double>::infinity();
      return std::isfinite(lim) ? adaptive_gauss_kronrod(f, 0.0, lim).value : adaptive_half_line(f).value;
    }
    if (n == 1) {
      auto f = [&](double t) {
        const Point x{t};
        const double ld = base_.log_density(x);
        return ld == kNegInf ? 0.0 : std::exp(ld) * weight(x);
      };
      return adaptive_real_line(f).value;
    }
    if (n <= 3) {
      const int nodes = n == 2 ? 401 : 121;
      const double r = base_.truncation_radius();
      const double h = 2.0 * r / (nodes - 1);
      std::size_t total = 1;
      for (std::size_t d = 0; d < n; ++d) total *= nodes;
      double sum = 0.0;
      Point x(n);
      for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        double w = 1.0;
        for (std::size_t d = 0; d < n; ++d) {
          const std::size_t i = rem % nodes;
          rem /= nodes;
          x[d] = -r + h * static_cast<double>(i);
          if (i == 0 || i + 1 == static_cast<std::size_t>(nodes)) w *= 0.5;
        }
        const double ld = base_.log_density(x);
        if (ld != kNegInf) sum += w * std::exp(ld) * weight(x);
      }
      return sum * std::pow(h, static_cast<double>(n));
    }
    Rng rng(mix_seed(0x5eed, 17));
    double sum = 0.0;
    const int samples = 200000;
    for (int i = 0; i < samples; ++i) sum += weight(base_.sample(rng));
    return sum / samples;
  }

  Density base_;
  double amp_;
  double freq_;
  double log_mass_ = 0.0;
};

}  // namespace

// ----------------------------------------------------------------------------

std::vector<Density> DensityModel::components() const { return {}; }

Density::Density(std::shared_ptr<const DensityModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("null density model");
  log_norm_ = model_->log_mass();
  if (!std::isfinite(log_norm_)) throw QuadratureError("density normalization is not finite");
}

double Density::norm_const() const { return std::exp(log_norm_); }

double Density::eval(const Point& x) const {
  if (x.dim() != dim()) throw std::invalid_argument("point dimension does not match the density");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("density evaluated at a non-finite point");
  }
  const double ld = log_density(x);
  if (std::isnan(ld)) throw EvaluationError("density evaluation produced NaN", x);
  const double v = std::exp(ld);
  if (!std::isfinite(v)) throw EvaluationError("density value overflows", x);
  return v;
}

double eval(const Density& mu, const Point& x) { return mu.eval(x); }

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::builtin: return "builtin";
    case Provenance::mixture: return "mixture";
    case Provenance::product: return "product";
    case Provenance::convolution: return "convolution";
    case Provenance::perturbation: return "perturbation";
  }
  return "unknown";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::gen_exponential: return "gen_exponential";
    case Family::poly_tail: return "poly_tail";
    case Family::uniform_ball: return "uniform_ball";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "gen_exponential") return Family::gen_exponential;
  if (name == "poly_tail") return Family::poly_tail;
  if (name == "uniform_ball") return Family::uniform_ball;
  throw std::invalid_argument(fmt::format("unknown density family '{}'", name));
}

Density make_builtin(Family family, const FamilyParams& params, std::size_t dim) {
  require_dim(dim);
  switch (family) {
    case Family::gaussian:
      require_positive(params.sigma, "gaussian sigma");
      return Density(std::make_shared<GaussianModel>(params.sigma, dim, params.mean));
    case Family::gen_exponential:
      require_positive(params.c, "gen_exponential c");
      require_positive(params.a, "gen_exponential a");
      return Density(std::make_shared<GenExponentialModel>(params.c, params.a, dim));
    case Family::poly_tail:
      if (dim != 1) throw std::invalid_argument("poly_tail is defined in dimension 1 only");
      if (!(params.alpha > 0.5) || !std::isfinite(params.alpha)) {
        throw std::invalid_argument("poly_tail needs alpha > 1/2 for a finite mass");
      }
      return Density(std::make_shared<PolyTailModel>(params.alpha));
    case Family::uniform_ball:
      require_positive(params.radius, "uniform_ball radius");
      return Density(std::make_shared<UniformBallModel>(params.radius, dim));
  }
  throw std::invalid_argument("unknown density family");
}

Density make_gaussian(double sigma, std::size_t dim, Point mean) {
  FamilyParams p;
  p.sigma = sigma;
  p.mean = mean;
  return make_builtin(Family::gaussian, p, dim);
}

Density make_gen_exponential(double c, double a, std::size_t dim) {
  FamilyParams p;
  p.c = c;
  p.a = a;
  return make_builtin(Family::gen_exponential, p, dim);
}

Density make_poly_tail(double alpha) {
  FamilyParams p;
  p.alpha = alpha;
  return make_builtin(Family::poly_tail, p, 1);
}

Density make_uniform_ball(double radius, std::size_t dim) {
  FamilyParams p;
  p.radius = radius;
  return make_builtin(Family::uniform_ball, p, dim);
}

Density mix(const Density& mu1, const Density& mu2, double t) {
  if (mu1.dim() != mu2.dim()) throw std::invalid_argument("mix: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("mix: weight t must lie in [0, 1]");
  return Density(std::make_shared<MixtureModel>(mu1, mu2, t));
}

Density product(const Density& mu1, const Density& mu2) {
  return Density(std::make_shared<ProductModel>(mu1, mu2));
}

Density convolve_measures(const Density& mu1, const Density& mu2, const ConvolutionOptions& options) {
  if (mu1.dim() != mu2.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  if (mu1.dim() > kConvolutionMaxDim) {
    throw std::invalid_argument(fmt::format(
        "convolve: deterministic convolution supports dim <= {}; use monte_carlo mode (sample sums) instead",
        kConvolutionMaxDim));
  }
  return Density(std::make_shared<ConvolutionModel>(mu1, mu2, options));
}

Density perturb(const Density& mu, double amplitude, double frequency) {
  if (!(std::abs(amplitude) < 1.0)) throw std::invalid_argument("perturb: |amplitude| must be < 1");
  if (!std::isfinite(frequency) || frequency < 0.0) throw std::invalid_argument("perturb: frequency must be >= 0");
  return Density(std::make_shared<PerturbationModel>(mu, amplitude, frequency));
}

std::optional<PerturbationInfo> perturbation_info(const Density& mu) {
  const auto* pm = dynamic_cast<const PerturbationModel*>(&mu.model());
  if (pm == nullptr) return std::nullopt;
  return PerturbationInfo{pm->base(), pm->lower(), pm->upper()};
}

// ----------------------------------------------------------------------------
// Regularity search

namespace {

constexpr double kLogOverflow = 690.0;

struct Candidate {
  double value = kNegInf;
  Point x;
  Point y;
};

class RatioSearch {
 public:
  RatioSearch(const Density& mu, double p, double a, double s) : mu_(mu), p_(p), a_(a), s_(s) {}

  double log_weight(const Point& x) const {
    if (p_ == 0.0) return 0.0;
    const double r = norm(x);
    return r == 0.0 ? kNegInf : p_ * std::log(r);
  }

  // log(|x|^p rho(ax + y) / rho(x)); throws if rho(x) vanishes.
  double log_ratio(const Point& x, const Point& y, double log_rho_x) const {
    const double lw = log_weight(x);
    if (lw == kNegInf) return kNegInf;
    return lw + mu_.log_density(a_ * x + y) - log_rho_x;
  }

  double log_rho(const Point& x) const {
    const double v = mu_.log_density(x);
    if (v == kNegInf || std::isnan(v)) {
      throw std::invalid_argument(fmt::format("regularity search: density vanishes at {}", to_string(x)));
    }
    return v;
  }

  double value_at(const Point& x, const Point& y) const { return log_ratio(x, y, log_rho(x)); }

  double s() const { return s_; }

 private:
  const Density& mu_;
  double p_;
  double a_;
  double s_;
};

std::vector<Point> tensor_ball(std::size_t n, int nodes, double radius, double spacing) {
  std::vector<Point> pts;
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= static_cast<std::size_t>(nodes);
  const int half = nodes / 2;
  const double lim = radius * (1.0 + 1e-12);
  Point x(n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t d = 0; d < n; ++d) {
      x[d] = spacing * (static_cast<int>(rem % nodes) - half);
      rem /= nodes;
    }
    if (norm(x) <= lim) pts.push_back(x);
  }
  return pts;
}

Point project_ball(Point y, double s) {
  const double r = norm(y);
  if (r > s && r > 0.0) y *= s / r;
  return y;
}

void compass_refine(const RatioSearch& search, Candidate& best, double radius, double step0) {
  const std::size_t n = best.x.dim();
  const bool move_y = search.s() > 0.0;
  const std::size_t vars = move_y ? 2 * n : n;
  double step = step0;
  const double stop = 1e-11 * std::max(1.0, radius);
  for (int iter = 0; iter < 4000 && step > stop; ++iter) {
    bool improved = false;
    for (std::size_t v = 0; v < vars && !improved; ++v) {
      for (double sign : {1.0, -1.0}) {
        Candidate c = best;
        if (v < n) {
          c.x[v] += sign * step;
          if (norm(c.x) > radius) continue;
        } else {
          c.y[v - n] += sign * step;
          c.y = project_ball(c.y, search.s());
        }
        double val = kNegInf;
        try {
          val = search.value_at(c.x, c.y);
        } catch (const std::invalid_argument&) {
          continue;
        }
        if (val > best.value) {
          c.value = val;
          best = c;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

int default_nodes(std::size_t n) {
  switch (n) {
    case 1: return 2001;
    case 2: return 201;
    default: return 41;
  }
}

}  // namespace

RegularityEstimate estimate_regularity(const Density& mu, double p, double a, double s, const RegularityGrid& grid) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("regularity: p must be >= 0");
  if (!(a >= 1.0) || !std::isfinite(a)) throw std::invalid_argument("regularity: a must be >= 1");
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("regularity: s must be >= 0");
  if (mu.compact_support()) {
    throw std::invalid_argument(
        "regularity: compactly supported densities are excluded (ratios vanish outside the support)");
  }
  const std::size_t n = mu.dim();
  if (n > 3) throw std::invalid_argument("regularity: grid search supports dim <= 3");

  RegularityEstimate out;
  out.p = p;
  out.a = a;
  out.s = s;
  out.radius = grid.radius > 0.0 ? grid.radius : mu.truncation_radius();
  int nodes = grid.nodes_per_axis > 0 ? grid.nodes_per_axis : default_nodes(n);
  if (nodes % 2 == 0) ++nodes;
  out.nodes_per_axis = nodes;
  out.spacing = 2.0 * out.radius / (nodes - 1);

  const RatioSearch search(mu, p, a, s);
  const std::vector<Point> xs = tensor_ball(n, nodes, out.radius, out.spacing);
  std::vector<Point> ys{Point(n)};
  if (s > 0.0) {
    const int ny = 2 * static_cast<int>(std::floor(s / out.spacing)) + 1;
    ys = tensor_ball(n, ny, s, out.spacing);
    for (const Point& d : sphere_directions(n, n == 1 ? 2 : (n == 2 ? 64 : 128))) ys.push_back(s * d);
  }

  // Grid pass, chunked so the reduction order is fixed.
  const std::size_t chunk = 256;
  const std::size_t chunks = (xs.size() + chunk - 1) / chunk;
  std::vector<Candidate> local(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        Candidate best;
        const std::size_t end = std::min(xs.size(), (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
          const double lr = search.log_rho(xs[i]);
          for (const Point& y : ys) {
            const double v = search.log_ratio(xs[i], y, lr);
            if (v > best.value) best = {v, xs[i], y};
          }
        }
        local[c] = best;
      },
      2);
  Candidate best{kNegInf, Point(n), Point(n)};
  for (const auto& c : local) {
    if (c.value > best.value) best = c;
  }

  auto overflow = [&](const Candidate& c) {
    out.finite = false;
    out.x_star = c.x;
    out.y_star = c.y;
    out.log_value = c.value;
    out.value = std::numeric_limits<double>::infinity();
    out.failure = fmt::format("type-p condition violated at x = {}: weighted ratio overflows (log ratio {:.6g})",
                              to_string(c.x), c.value);
    return out;
  };
  if (best.value > kLogOverflow) return overflow(best);

  // Tail screen along rays beyond the grid.
  const std::size_t rays = grid.tail_directions > 0 ? static_cast<std::size_t>(grid.tail_directions)
                                                    : (n == 1 ? 2 : (n == 2 ? 16 : 32));
  const double factors[] = {1.0, 1.5, 2.0, 3.0, 4.0};
  for (const Point& d : sphere_directions(n, rays)) {
    double prev = kNegInf;
    bool increasing = true;
    double first = 0.0;
    Candidate last;
    for (std::size_t k = 0; k < std::size(factors); ++k) {
      const Point x = (factors[k] * out.radius) * d;
      double lr = 0.0;
      try {
        lr = search.log_rho(x);
      } catch (const std::invalid_argument&) {
        increasing = false;
        break;
      }
      Candidate m;
      for (const Point& y : ys) {
        const double v = search.log_ratio(x, y, lr);
        if (v > m.value) m = {v, x, y};
      }
      if (m.value > kLogOverflow) return overflow(m);
      if (m.value > best.value) best = m;
      if (k == 0) first = m.value;
      if (!(m.value > prev)) increasing = false;
      prev = m.value;
      last = m;
    }
    if (increasing && last.value - first > 1e-6) {
      out.finite = false;
      out.x_star = last.x;
      out.y_star = last.y;
      out.log_value = last.value;
      out.value = std::numeric_limits<double>::infinity();
      out.failure = fmt::format(
          "type-p condition violated at x = {}: weighted ratio still increasing beyond the grid radius {:g}",
          to_string(last.x), out.radius);
      return out;
    }
  }

  if (grid.refine && best.value > kNegInf) compass_refine(search, best, 4.0 * out.radius, out.spacing);
  if (best.value > kLogOverflow) return overflow(best);

  out.finite = true;
  out.log_value = best.value;
  out.value = std::exp(best.value);
  out.x_star = best.x;
  out.y_star = best.y;
  return out;
}

double regularity_constant(const Density& mu, double p, double a, double s, const RegularityGrid& grid) {
  const RegularityEstimate e = estimate_regularity(mu, p, a, s, grid);
  if (!e.finite) throw TypeConditionViolated(e.failure, e.x_star, e.y_star);
  return e.value;
}

RegularityConstants type_report(const Density& mu, double p, const std::vector<double>& a_list,
                                const std::vector<double>& s_list, double eps, int near_one_points,
                                const RegularityGrid& grid) {
  if (a_list.empty() || s_list.empty()) throw std::invalid_argument("type_report: a and s lists must be non-empty");
  if (!(eps > 0.0)) throw std::invalid_argument("type_report: eps must be positive");
  if (near_one_points < 1) throw std::invalid_argument("type_report: need at least one near-one point");
  RegularityConstants out;
  out.p = p;
  out.near_one_eps = eps;
  out.near_one_points = near_one_points;
  out.type_p = true;
  auto record_failure = [&](const RegularityEstimate& e) {
    if (out.type_p) {
      out.witness_x = e.x_star;
      out.witness_y = e.y_star;
      out.failure = e.failure;
    }
    out.type_p = false;
  };
  for (double a : a_list) {
    for (double s : s_list) {
      const RegularityEstimate e = estimate_regularity(mu, p, a, s, grid);
      out.radius = e.radius;
      out.nodes_per_axis = e.nodes_per_axis;
      RegularityEntry entry{a, s, std::nullopt};
      if (e.finite) {
        entry.estimate = e.value;
      } else {
        record_failure(e);
      }
      out.entries.push_back(entry);
    }
  }
  double sup = 0.0;
  bool ok = true;
  for (int j = 1; j <= near_one_points; ++j) {
    const double a = 1.0 + eps * static_cast<double>(j) / near_one_points;
    const RegularityEstimate e = estimate_regularity(mu, 0.0, a, 0.0, grid);
    if (!e.finite) {
      ok = false;
      record_failure(e);
      break;
    }
    sup = std::max(sup, e.value);
  }
  if (ok) out.uniform_near_one = sup;
  return out;
}

nlohmann::ordered_json to_json(const RegularityEstimate& e) {
  nlohmann::ordered_json j;
  j["p"] = e.p;
  j["a"] = e.a;
  j["s"] = e.s;
  j["finite"] = e.finite;
  if (e.finite) {
    j["estimate"] = e.value;
  } else {
    j["estimate"] = nullptr;
    j["failure"] = e.failure;
  }
  j["x_star"] = e.x_star.to_vector();
  j["y_star"] = e.y_star.to_vector();
  j["grid"] = {{"radius", e.radius}, {"nodes_per_axis", e.nodes_per_axis}, {"spacing", e.spacing}};
  return j;
}

nlohmann::ordered_json to_json(const RegularityConstants& c) {
  nlohmann::ordered_json j;
  j["p"] = c.p;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : c.entries) {
    nlohmann::ordered_json row;
    row["a"] = e.a;
    row["s"] = e.s;
    if (e.estimate) {
      row["estimate"] = *e.estimate;
    } else {
      row["estimate"] = nullptr;
    }
    entries.push_back(row);
  }
  j["entries"] = entries;
  j["grid"] = {{"radius", c.radius}, {"nodes_per_axis", c.nodes_per_axis}};
  j["uniform_near_one"] = {{"eps", c.near_one_eps},
                           {"points", c.near_one_points},
                           {"estimate", c.uniform_near_one ? nlohmann::ordered_json(*c.uniform_near_one)
                                                           : nlohmann::ordered_json(nullptr)}};
  j["type_p"] = c.type_p;
  if (!c.type_p) {
    j["failure"] = c.failure;
    if (c.witness_x) j["witness_x"] = c.witness_x->to_vector();
    if (c.witness_y) j["witness_y"] = c.witness_y->to_vector();
  }
  return j;
}

}  // namespace lsh
