#include "lsh/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "lsh/error.hpp"
#include "lsh/random.hpp"
#include "lsh/rules.hpp"

namespace lsh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt_num(double v) { return fmt::format("{:g}", v); }

void require_dim(std::size_t dim) {
  if (dim == 0 || dim > kMaxDim) throw std::invalid_argument(fmt::format("dimension must be in [1, {}]", kMaxDim));
}

void require_same_dim(const Point& x, std::size_t dim) {
  if (x.dim() != dim) throw std::invalid_argument("point dimension does not match the field");
}

// ln cosh(t) without overflow.
double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// Log-sum-exp of values[i] + log_weights[i].
double weighted_lse(const std::vector<double>& values, const std::vector<double>& log_weights) {
  double m = kNegInf;
  for (std::size_t i = 0; i < values.size(); ++i) m = std::max(m, values[i] + log_weights[i]);
  if (m == kNegInf) return kNegInf;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += std::exp(values[i] + log_weights[i] - m);
  return m + std::log(s);
}

class ConstantModel final : public FieldModel {
 public:
  ConstantModel(double c, std::size_t dim) : c_(c), log_c_(c > 0.0 ? std::log(c) : kNegInf), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double log_value(const Point&) const override { return log_c_; }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point&) const override { return Point(dim_); }
  std::string describe() const override { return fmt::format("constant({}, dim={})", fmt_num(c_), dim_); }

 private:
  double c_;
  double log_c_;
  std::size_t dim_;
};

class LogLinearModel final : public FieldModel {
 public:
  explicit LogLinearModel(const Point& lambda) : lambda_(lambda) {}
  std::size_t dim() const override { return lambda_.dim(); }
  double log_value(const Point& x) const override { return dot(lambda_, x); }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point&) const override { return lambda_; }
  std::string describe() const override { return fmt::format("log_linear({})", to_string(lambda_)); }

 private:
  Point lambda_;
};

class CoshModel final : public FieldModel {
 public:
  explicit CoshModel(const Point& lambda) : lambda_(lambda) {}
  std::size_t dim() const override { return lambda_.dim(); }
  double log_value(const Point& x) const override { return log_cosh(dot(lambda_, x)); }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override { return std::tanh(dot(lambda_, x)) * lambda_; }
  std::string describe() const override {
    if (lambda_.dim() == 1) return fmt::format("cosh({})", fmt_num(lambda_[0]));
    return fmt::format("cosh({})", to_string(lambda_));
  }

 private:
  Point lambda_;
};

class PotentialModel final : public FieldModel {
 public:
  explicit PotentialModel(const Potential& u) : u_(u) {}
  std::size_t dim() const override { return u_.linear.dim(); }
  double log_value(const Point& x) const override { return u_.offset + dot(u_.linear, x) + u_.quadratic * norm_sq(x); }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override { return u_.linear + (2.0 * u_.quadratic) * x; }
  std::string describe() const override {
    return fmt::format("exp_subharmonic(linear={}, quadratic={}, offset={})", to_string(u_.linear),
                       fmt_num(u_.quadratic), fmt_num(u_.offset));
  }

 private:
  Potential u_;
};

class HolomorphicModel final : public FieldModel {
 public:
  explicit HolomorphicModel(std::vector<std::complex<double>> coeffs) : c_(std::move(coeffs)) {}
  std::size_t dim() const override { return 2; }
  double log_value(const Point& x) const override {
    const double m = std::abs(eval(z(x)));
    return m > 0.0 ? std::log(m) : kNegInf;
  }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override {
    const std::complex<double> zz = z(x);
    const std::complex<double> p = eval(zz);
    if (p == std::complex<double>(0.0, 0.0)) {
      const double inf = std::numeric_limits<double>::infinity();
      return Point{inf, inf};
    }
    const std::complex<double> ratio = deriv(zz) / p;
    return Point{ratio.real(), -ratio.imag()};
  }
  std::string describe() const override {
    std::string s = "modulus_holomorphic([";
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (i) s += ", ";
      if (c_[i].imag() == 0.0) {
        s += fmt_num(c_[i].real());
      } else {
        s += fmt::format("({}, {})", fmt_num(c_[i].real()), fmt_num(c_[i].imag()));
      }
    }
    return s + "])";
  }

 private:
  static std::complex<double> z(const Point& x) { return {x[0], x[1]}; }
  std::complex<double> eval(std::complex<double> zz) const {
    std::complex<double> acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * zz + *it;
    return acc;
  }
  std::complex<double> deriv(std::complex<double> zz) const {
    std::complex<double> acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 1;) acc = acc * zz + static_cast<double>(k) * c_[k];
    return acc;
  }
  std::vector<std::complex<double>> c_;
};

class PowerModel final : public FieldModel {
 public:
  PowerModel(ScalarField f, double p) : f_(std::move(f)), p_(p) {}
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override {
    const double l = f_.log_value(x);
    return l == kNegInf ? kNegInf : p_ * l;
  }
  bool has_gradient() const override { return f_.has_gradient(); }
  Point log_gradient(const Point& x) const override { return p_ * f_.log_gradient(x); }
  std::string describe() const override { return fmt::format("power({}, {})", f_.describe(), fmt_num(p_)); }

 private:
  ScalarField f_;
  double p_;
};

class ProductFieldModel final : public FieldModel {
 public:
  ProductFieldModel(ScalarField f, ScalarField g) : f_(std::move(f)), g_(std::move(g)) {}
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override {
    const double a = f_.log_value(x);
    const double b = g_.log_value(x);
    if (a == kNegInf || b == kNegInf) return kNegInf;
    return a + b;
  }
  bool has_gradient() const override { return f_.has_gradient() && g_.has_gradient(); }
  Point log_gradient(const Point& x) const override { return f_.log_gradient(x) + g_.log_gradient(x); }
  std::string describe() const override { return fmt::format("product({}, {})", f_.describe(), g_.describe()); }

 private:
  ScalarField f_;
  ScalarField g_;
};

class ScaleModel final : public FieldModel {
 public:
  ScaleModel(ScalarField f, double t) : f_(std::move(f)), t_(t), log_t_(std::log(t)) {}
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override { return f_.log_value(x) + log_t_; }
  bool has_gradient() const override { return f_.has_gradient(); }
  Point log_gradient(const Point& x) const override { return f_.log_gradient(x); }
  std::string describe() const override { return fmt::format("scale({}, {})", f_.describe(), fmt_num(t_)); }

 private:
  ScalarField f_;
  double t_;
  double log_t_;
};

class DilateModel final : public FieldModel {
 public:
  DilateModel(ScalarField f, double r) : f_(std::move(f)), r_(r) {}
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override { return f_.log_value(r_ * x); }
  bool has_gradient() const override { return f_.has_gradient(); }
  Point log_gradient(const Point& x) const override { return r_ * f_.log_gradient(r_ * x); }
  std::string describe() const override { return fmt::format("dilate({}, {})", f_.describe(), fmt_num(r_)); }

 private:
  ScalarField f_;
  double r_;
};

class SqNormModel final : public FieldModel {
 public:
  explicit SqNormModel(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double log_value(const Point& x) const override {
    const double n2 = norm_sq(x);
    return n2 > 0.0 ? std::log(n2) : kNegInf;
  }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override { return (2.0 / norm_sq(x)) * x; }
  std::string describe() const override { return fmt::format("sq_norm(dim={})", dim_); }

 private:
  std::size_t dim_;
};

class ExpSqNormModel final : public FieldModel {
 public:
  ExpSqNormModel(double kappa, std::size_t dim) : kappa_(kappa), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double log_value(const Point& x) const override { return kappa_ * norm_sq(x); }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override { return (2.0 * kappa_) * x; }
  std::string describe() const override { return fmt::format("exp_sq_norm({}, dim={})", fmt_num(kappa_), dim_); }

 private:
  double kappa_;
  std::size_t dim_;
};

class CoshNormModel final : public FieldModel {
 public:
  CoshNormModel(double lambda, std::size_t dim) : lambda_(lambda), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double log_value(const Point& x) const override { return log_cosh(lambda_ * norm(x)); }
  bool has_gradient() const override { return true; }
  Point log_gradient(const Point& x) const override {
    const double r = norm(x);
    if (r == 0.0) return Point(dim_);
    return (lambda_ * std::tanh(lambda_ * r) / r) * x;
  }
  std::string describe() const override { return fmt::format("cosh_norm({}, dim={})", fmt_num(lambda_), dim_); }

 private:
  double lambda_;
  std::size_t dim_;
};

class CustomModel final : public FieldModel {
 public:
  CustomModel(std::size_t dim, std::function<double(const Point&)> value, std::function<Point(const Point&)> gradient,
              std::string description)
      : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)), description_(std::move(description)) {}
  std::size_t dim() const override { return dim_; }
  double log_value(const Point& x) const override {
    const double v = value_(x);
    if (std::isnan(v) || v < 0.0) throw EvaluationError("custom field returned a negative or NaN value", x);
    return v > 0.0 ? std::log(v) : kNegInf;
  }
  bool has_gradient() const override { return static_cast<bool>(gradient_); }
  Point log_gradient(const Point& x) const override { return (1.0 / value_(x)) * gradient_(x); }
  std::string describe() const override { return description_; }

 private:
  std::size_t dim_;
  std::function<double(const Point&)> value_;
  std::function<Point(const Point&)> gradient_;
  std::string description_;
};

class MollifiedModel final : public FieldModel {
 public:
  MollifiedModel(ScalarField f, Mollifier phi) : f_(std::move(f)), phi_(std::move(phi)) {
    for (double w : phi_.weights()) log_w_.push_back(std::log(w));
  }
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override {
    std::vector<double> vals(log_w_.size());
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = f_.log_value(x - phi_.nodes()[j]);
    return weighted_lse(vals, log_w_);
  }
  bool has_gradient() const override { return true; }
  // Weighted mean of grad ln f(x - y) under f(x - y) phi(y) dy when f has a
  // gradient; otherwise the f * grad(phi) form.
  Point log_gradient(const Point& x) const override {
    const auto& nodes = phi_.nodes();
    std::vector<double> vals(log_w_.size());
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = f_.log_value(x - nodes[j]);
    const double total = weighted_lse(vals, log_w_);
    Point g(dim());
    if (total == kNegInf) return g;
    const bool analytic = f_.has_gradient();
    for (std::size_t j = 0; j < vals.size(); ++j) {
      if (vals[j] == kNegInf) continue;
      const double w = std::exp(vals[j] + log_w_[j] - total);
      g += w * (analytic ? f_.log_gradient(x - nodes[j]) : phi_.log_gradient(nodes[j]));
    }
    return g;
  }
  std::string describe() const override { return fmt::format("mollify({}, {})", f_.describe(), phi_.describe()); }

 private:
  ScalarField f_;
  Mollifier phi_;
  std::vector<double> log_w_;
};

class AverageModel final : public FieldModel {
 public:
  AverageModel(ScalarField f, std::vector<Point> dirs) : f_(std::move(f)), dirs_(std::move(dirs)) {
    log_w_.assign(dirs_.size(), -std::log(static_cast<double>(dirs_.size())));
  }
  std::size_t dim() const override { return f_.dim(); }
  double log_value(const Point& x) const override {
    const double r = norm(x);
    std::vector<double> vals(dirs_.size());
    for (std::size_t j = 0; j < dirs_.size(); ++j) vals[j] = f_.log_value(r * dirs_[j]);
    return weighted_lse(vals, log_w_);
  }
  bool has_gradient() const override { return f_.has_gradient(); }
  Point log_gradient(const Point& x) const override {
    const double r = norm(x);
    if (r == 0.0) return Point(dim());
    std::vector<double> vals(dirs_.size());
    for (std::size_t j = 0; j < dirs_.size(); ++j) vals[j] = f_.log_value(r * dirs_[j]);
    const double total = weighted_lse(vals, log_w_);
    if (total == kNegInf) return Point(dim());
    double radial = 0.0;
    for (std::size_t j = 0; j < dirs_.size(); ++j) {
      if (vals[j] == kNegInf) continue;
      const double w = std::exp(vals[j] + log_w_[j] - total);
      radial += w * dot(dirs_[j], f_.log_gradient(r * dirs_[j]));
    }
    return (radial / r) * x;
  }
  std::string describe() const override {
    return fmt::format("spherical_average({}, directions={})", f_.describe(), dirs_.size());
  }

 private:
  ScalarField f_;
  std::vector<Point> dirs_;
  std::vector<double> log_w_;
};

ScalarField make(std::shared_ptr<const FieldModel> m, Certificate c, bool smooth = true) {
  return ScalarField(std::move(m), c, smooth);
}

// Mean of u over the sphere dB(x, r) with `count` directions (endpoints in 1-D).
double sphere_mean(const std::function<double(const Point&)>& u, const Point& x, double r,
                   const std::vector<Point>& dirs) {
  double s = 0.0;
  for (const Point& d : dirs) s += u(x + r * d);
  return s / static_cast<double>(dirs.size());
}

const std::vector<Point>& cached_directions(std::size_t n, std::size_t count) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, std::vector<Point>> cache;
  auto it = cache.find({n, count});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, count), sphere_directions(n, count)).first;
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Certificate c) {
  switch (c) {
    case Certificate::log_linear: return "log_linear";
    case Certificate::exp_subharmonic: return "exp_subharmonic";
    case Certificate::modulus_holomorphic: return "modulus_holomorphic";
    case Certificate::power: return "power";
    case Certificate::product: return "product";
    case Certificate::dilation: return "dilation";
    case Certificate::convolution: return "convolution";
    case Certificate::mollified: return "mollified";
    case Certificate::averaged: return "averaged";
    case Certificate::unverified: return "unverified";
  }
  return "unknown";
}

Point FieldModel::log_gradient(const Point&) const { throw std::logic_error("field has no analytic gradient"); }

ScalarField::ScalarField(std::shared_ptr<const FieldModel> model, Certificate certificate, bool smooth)
    : model_(std::move(model)), certificate_(certificate), smooth_(smooth) {
  if (!model_) throw std::invalid_argument("null field model");
}

double ScalarField::value(const Point& x) const {
  require_same_dim(x, dim());
  const double l = model_->log_value(x);
  if (std::isnan(l)) throw EvaluationError("field evaluation produced NaN", x);
  const double v = std::exp(l);
  if (!std::isfinite(v)) throw EvaluationError("field value overflows", x);
  return v;
}

Point ScalarField::log_gradient(const Point& x) const {
  if (!has_gradient()) throw std::logic_error("field has no analytic gradient: " + describe());
  require_same_dim(x, dim());
  return model_->log_gradient(x);
}

Point ScalarField::gradient(const Point& x) const {
  const double v = value(x);
  if (v == 0.0) {
    if (!has_gradient()) throw std::logic_error("field has no analytic gradient: " + describe());
    return Point(dim());
  }
  return v * log_gradient(x);
}

Point fd_gradient(const std::function<double(const Point&)>& f, const Point& x) {
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, norm(x));
  Point g(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    Point xp = x;
    Point xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i]);
  }
  return g;
}

Point ScalarField::gradient_any(const Point& x) const {
  if (has_gradient()) return gradient(x);
  if (!smooth_) throw std::invalid_argument("non-smooth field without gradient: " + describe());
  return fd_gradient([this](const Point& p) { return value(p); }, x);
}

double ScalarField::log_euler(const Point& x) const {
  if (has_gradient()) return dot(x, log_gradient(x));
  if (!smooth_) throw std::invalid_argument("Euler operator needs a gradient or a smooth field: " + describe());
  return dot(x, fd_gradient([this](const Point& p) { return log_value(p); }, x));
}

double euler(const ScalarField& f, const Point& x) {
  if (!f.has_gradient() && !f.smooth()) {
    throw std::invalid_argument("Euler operator needs a gradient or a smooth field: " + f.describe());
  }
  return dot(x, f.gradient_any(x));
}

// ---------------------------------------------------------------------------

ScalarField constant(double c, std::size_t dim) {
  require_dim(dim);
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("constant field must be finite and >= 0");
  return make(std::make_shared<ConstantModel>(c, dim), Certificate::log_linear);
}

ScalarField log_linear(const Point& lambda) {
  require_dim(lambda.dim());
  for (double v : lambda) {
    if (!std::isfinite(v)) throw std::invalid_argument("log_linear needs a finite lambda");
  }
  return make(std::make_shared<LogLinearModel>(lambda), Certificate::log_linear);
}

ScalarField cosh_field(const Point& lambda) {
  require_dim(lambda.dim());
  for (double v : lambda) {
    if (!std::isfinite(v)) throw std::invalid_argument("cosh_field needs a finite lambda");
  }
  return make(std::make_shared<CoshModel>(lambda), Certificate::exp_subharmonic);
}

ScalarField cosh_field(double lambda) { return cosh_field(Point{lambda}); }

ScalarField exp_subharmonic(const Potential& u) {
  require_dim(u.linear.dim());
  const std::size_t n = u.linear.dim();
  auto pot = [&u](const Point& x) { return u.offset + dot(u.linear, x) + u.quadratic * norm_sq(x); };
  const auto& dirs = cached_directions(n, n == 1 ? 2 : default_sphere_count(n));
  for (const Point& x : default_probes(n)) {
    const double center = pot(x);
    for (double r : default_radii()) {
      const double tol = 1e-7 * std::max(1.0, std::abs(center));
      if (sphere_mean(pot, x, r, dirs) < center - tol) {
        throw NotSubharmonic(fmt::format("potential fails the sub-mean-value test at x = {}, r = {}", to_string(x),
                                         fmt_num(r)),
                             x, r);
      }
    }
  }
  return make(std::make_shared<PotentialModel>(u), Certificate::exp_subharmonic);
}

ScalarField modulus_holomorphic(const std::vector<std::complex<double>>& coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("modulus_holomorphic needs at least one coefficient");
  return make(std::make_shared<HolomorphicModel>(coeffs), Certificate::modulus_holomorphic);
}

ScalarField power(const ScalarField& f, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("power exponent must be positive");
  return make(std::make_shared<PowerModel>(f, p), Certificate::power, f.smooth());
}

ScalarField product(const ScalarField& f, const ScalarField& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("product of fields: dimension mismatch");
  return make(std::make_shared<ProductFieldModel>(f, g), Certificate::product, f.smooth() && g.smooth());
}

ScalarField scale(const ScalarField& f, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("scale factor must be positive");
  return make(std::make_shared<ScaleModel>(f, t), f.certificate(), f.smooth());
}

ScalarField dilate(const ScalarField& f, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("dilation parameter r must lie in (0, 1]");
  if (r == 1.0) return f;
  return make(std::make_shared<DilateModel>(f, r), Certificate::dilation, f.smooth());
}

ScalarField sq_norm(std::size_t dim) {
  require_dim(dim);
  return make(std::make_shared<SqNormModel>(dim), Certificate::unverified);
}

ScalarField exp_sq_norm(double kappa, std::size_t dim) {
  require_dim(dim);
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw NotSubharmonic("exp_sq_norm needs kappa >= 0", Point(dim), 0.0);
  return make(std::make_shared<ExpSqNormModel>(kappa, dim), Certificate::exp_subharmonic);
}

ScalarField cosh_norm(double lambda, std::size_t dim) {
  require_dim(dim);
  if (!std::isfinite(lambda)) throw std::invalid_argument("cosh_norm needs a finite lambda");
  return make(std::make_shared<CoshNormModel>(lambda, dim), Certificate::exp_subharmonic);
}

ScalarField from_functions(std::size_t dim, std::function<double(const Point&)> value,
                           std::function<Point(const Point&)> gradient, bool smooth, std::string description) {
  require_dim(dim);
  if (!value) throw std::invalid_argument("from_functions needs a value function");
  return make(std::make_shared<CustomModel>(dim, std::move(value), std::move(gradient), std::move(description)),
              Certificate::unverified, smooth);
}

// ---------------------------------------------------------------------------

namespace {

double unit_bump(double t2) { return t2 < 1.0 ? std::exp(-1.0 / (1.0 - t2)) : 0.0; }

}  // namespace

Mollifier::Mollifier(std::size_t dim, int k, double base_radius) : dim_(dim), k_(k), base_radius_(base_radius) {
  require_dim(dim);
  if (k < 1) throw std::invalid_argument("mollifier scale index must be >= 1");
  if (!(base_radius > 0.0) || !std::isfinite(base_radius)) {
    throw std::invalid_argument("mollifier base radius must be positive");
  }
  radius_ = base_radius / k;
  const double nd = static_cast<double>(dim);
  AdaptiveOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-13;
  const double radial =
      adaptive_gauss_kronrod([nd](double t) { return std::pow(t, nd - 1.0) * unit_bump(t * t); }, 0.0, 1.0, opt).value;
  log_z_ = std::log(unit_sphere_area(dim) * radial);

  // Product rule on the support ball, weights normalized to sum to one.
  if (dim == 1) {
    const Rule1D gl = gauss_legendre_rule(48);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      nodes_.push_back(Point{radius_ * gl.nodes[i]});
      weights_.push_back(gl.weights[i] * unit_bump(gl.nodes[i] * gl.nodes[i]));
    }
  } else {
    const int radial_nodes = dim == 2 ? 24 : 16;
    const std::size_t angles = dim == 2 ? 48 : (dim == 3 ? 128 : 256);
    const Rule1D gl = gauss_legendre_rule(radial_nodes);
    const std::vector<Point> dirs = sphere_directions(dim, angles);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = 0.5 * (gl.nodes[i] + 1.0);
      const double w = 0.5 * gl.weights[i] * std::pow(t, nd - 1.0) * unit_bump(t * t);
      for (const Point& d : dirs) {
        nodes_.push_back((radius_ * t) * d);
        weights_.push_back(w);
      }
    }
  }
  double total = 0.0;
  for (double w : weights_) total += w;
  for (double& w : weights_) w /= total;
}

double Mollifier::support_volume() const {
  return unit_ball_volume(dim_) * std::pow(radius_, static_cast<double>(dim_));
}

double Mollifier::log_value(const Point& y) const {
  const double t2 = norm_sq(y) / (radius_ * radius_);
  if (t2 >= 1.0) return kNegInf;
  return -1.0 / (1.0 - t2) - log_z_ - static_cast<double>(dim_) * std::log(radius_);
}

double Mollifier::value(const Point& y) const { return std::exp(log_value(y)); }

Point Mollifier::log_gradient(const Point& y) const {
  const double s2 = radius_ * radius_;
  const double t2 = norm_sq(y) / s2;
  if (t2 >= 1.0) return Point(dim_);
  const double d = 1.0 - t2;
  return (-2.0 / (s2 * d * d)) * y;
}

Point Mollifier::gradient(const Point& y) const {
  const double v = value(y);
  if (v == 0.0) return Point(dim_);
  return v * log_gradient(y);
}

double Mollifier::lp_norm(double p) const {
  if (std::isinf(p) && p > 0.0) return value(Point(dim_));
  if (!(p > 0.0)) throw std::invalid_argument("mollifier norm exponent must be positive");
  const double nd = static_cast<double>(dim_);
  AdaptiveOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-13;
  // In unit coordinates: int phi_s^p = s^{n(1-p)} Z^{-p} S int t^{n-1} bump(t)^p dt.
  const double radial =
      adaptive_gauss_kronrod([&](double t) { return std::pow(t, nd - 1.0) * std::pow(unit_bump(t * t), p); }, 0.0, 1.0,
                             opt)
          .value;
  const double log_int = nd * (1.0 - p) * std::log(radius_) - p * log_z_ + std::log(unit_sphere_area(dim_) * radial);
  return std::exp(log_int / p);
}

double Mollifier::mass() const {
  const double nd = static_cast<double>(dim_);
  AdaptiveOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-13;
  const double radial = adaptive_gauss_kronrod(
                            [&](double t) { return std::pow(t, nd - 1.0) * value(Point::unit(dim_, 0) * t); }, 0.0,
                            radius_, opt)
                            .value;
  return unit_sphere_area(dim_) * radial;
}

std::string Mollifier::describe() const {
  return fmt::format("mollifier(k={}, base_radius={}, dim={})", k_, fmt_num(base_radius_), dim_);
}

ScalarField convolve(const ScalarField& f, const Mollifier& phi) {
  if (f.dim() != phi.dim()) throw std::invalid_argument("convolve: field and mollifier dimensions differ");
  return make(std::make_shared<MollifiedModel>(f, phi), Certificate::mollified, true);
}

ScalarField dilated_convolve(const ScalarField& f, const Mollifier& phi, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("dilated_convolve needs r in (0, 1)");
  return dilate(convolve(f, phi), r).with_certificate(Certificate::mollified);
}

ScalarField spherical_average(const ScalarField& f, std::size_t directions) {
  const std::size_t n = f.dim();
  if (n > 3) throw std::invalid_argument("spherical_average supports dim <= 3");
  const std::size_t count = n == 1 ? 2 : (directions > 0 ? directions : default_sphere_count(n));
  return make(std::make_shared<AverageModel>(f, sphere_directions(n, count)), Certificate::averaged, f.smooth());
}

// ---------------------------------------------------------------------------

std::vector<Point> default_probes(std::size_t dim, std::size_t count, std::uint64_t seed, double scale) {
  Rng rng(mix_seed(seed, dim));
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point p(dim);
    for (auto& v : p) v = scale * rng.normal();
    out.push_back(p);
  }
  return out;
}

std::vector<double> default_radii() { return {0.05, 0.1, 0.25, 0.5}; }

LshTestReport is_lsh(const ScalarField& f, const std::vector<Point>& probes, const std::vector<double>& radii,
                     const LshTestOptions& options) {
  const std::size_t n = f.dim();
  LshTestReport rep;
  const std::size_t base_count = n == 1 ? 2 : (options.angular_count > 0 ? options.angular_count : default_sphere_count(n));
  auto lnf = [&f](const Point& x) { return f.log_value(x); };
  for (const Point& x : probes) {
    const double center = f.log_value(x);
    if (center < std::log(1e-300)) {
      ++rep.skipped_zero;
      continue;
    }
    const double tol = options.tolerance * std::max(1.0, std::abs(center));
    for (double r : radii) {
      std::size_t count = base_count;
      double deficit = 0.0;
      bool skipped = false;
      for (;;) {
        const double mean = sphere_mean(lnf, x, r, cached_directions(n, count));
        if (mean == kNegInf) {
          // The sphere passes through a zero of f; the discrete mean is useless.
          skipped = true;
          break;
        }
        deficit = center - tol - mean;
        if (deficit <= 0.0 || n == 1 || count * 2 > options.max_angular_count) break;
        count *= 2;
        ++rep.refined;
      }
      if (skipped) {
        ++rep.skipped_zero;
        continue;
      }
      ++rep.tested;
      if (deficit > 0.0) {
        if (rep.passed || deficit > rep.worst_violation) {
          rep.worst_violation = deficit;
          rep.witness = x;
          rep.witness_radius = r;
        }
        rep.passed = false;
      }
    }
  }
  if (rep.skipped_zero > 0) rep.note = fmt::format("{} probe(s) skipped at zeros of f", rep.skipped_zero);
  return rep;
}

LshTestReport is_lsh(const ScalarField& f, const LshTestOptions& options) {
  return is_lsh(f, default_probes(f.dim()), default_radii(), options);
}

nlohmann::ordered_json to_json(const LshTestReport& r) {
  nlohmann::ordered_json j;
  j["passed"] = r.passed;
  j["tested"] = r.tested;
  j["skipped_zero"] = r.skipped_zero;
  j["refined"] = r.refined;
  j["worst_violation"] = r.worst_violation;
  if (r.witness) {
    j["witness"] = r.witness->to_vector();
    j["witness_radius"] = r.witness_radius;
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace lsh
