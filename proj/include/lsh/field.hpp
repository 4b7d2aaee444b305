#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsh/point.hpp"

namespace lsh {

enum class Certificate {
  log_linear,
  exp_subharmonic,
  modulus_holomorphic,
  power,
  product,
  dilation,
  convolution,
  mollified,
  averaged,
  unverified,
};

std::string to_string(Certificate c);

/// Implementation interface behind ScalarField. Fields work in log space:
/// log_value may be -inf at zeros, and gradients are gradients of log f.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual std::size_t dim() const = 0;
  virtual double log_value(const Point& x) const = 0;
  virtual bool has_gradient() const = 0;
  /// Gradient of ln f at x (only called when has_gradient()).
  virtual Point log_gradient(const Point& x) const;
  virtual std::string describe() const = 0;
};

/// A non-negative function on R^n with an optional analytic gradient and a
/// tag recording why it is log-subharmonic. Cheap to copy.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const FieldModel> model, Certificate certificate, bool smooth);

  std::size_t dim() const { return model_->dim(); }
  double value(const Point& x) const;
  double log_value(const Point& x) const { return model_->log_value(x); }
  double operator()(const Point& x) const { return value(x); }

  bool has_gradient() const { return model_->has_gradient(); }
  /// Analytic gradient of f; throws std::logic_error when absent.
  Point gradient(const Point& x) const;
  /// Analytic gradient of ln f; throws std::logic_error when absent.
  Point log_gradient(const Point& x) const;
  /// Gradient of f: analytic when available, else central differences.
  Point gradient_any(const Point& x) const;
  /// x . grad ln f(x) = Ef(x) / f(x).
  double log_euler(const Point& x) const;

  Certificate certificate() const { return certificate_; }
  bool smooth() const { return smooth_; }
  std::string describe() const { return model_->describe(); }
  const std::shared_ptr<const FieldModel>& model() const { return model_; }

  ScalarField with_certificate(Certificate c) const { return ScalarField(model_, c, smooth_); }

 private:
  std::shared_ptr<const FieldModel> model_;
  Certificate certificate_;
  bool smooth_;
};

/// Euler operator x . grad f(x). Uses the analytic gradient when present,
/// else central differences; rejects non-smooth fields without a gradient.
double euler(const ScalarField& f, const Point& x);

/// Central-difference gradient with step eps^{1/3} max(1, |x|) per axis.
Point fd_gradient(const std::function<double(const Point&)>& f, const Point& x);

// ---------------------------------------------------------------------------
// Builders

ScalarField constant(double c, std::size_t dim);
/// x -> exp(lambda . x).
ScalarField log_linear(const Point& lambda);
/// x -> cosh(lambda . x); ln cosh is convex along lambda, hence subharmonic.
ScalarField cosh_field(const Point& lambda);
ScalarField cosh_field(double lambda);

/// u(x) = offset + linear . x + quadratic |x|^2.
struct Potential {
  Point linear;
  double quadratic = 0.0;
  double offset = 0.0;
};
/// x -> exp(u(x)). Throws NotSubharmonic when u fails the sphere-mean test.
ScalarField exp_subharmonic(const Potential& u);

/// |p(x + iy)| on R^2 for p(z) = sum_k coeffs[k] z^k.
ScalarField modulus_holomorphic(const std::vector<std::complex<double>>& coeffs);

ScalarField power(const ScalarField& f, double p);
ScalarField product(const ScalarField& f, const ScalarField& g);
/// t * f for t > 0; keeps the certificate of f.
ScalarField scale(const ScalarField& f, double t);

/// x -> f(rx), r in (0, 1]. dilate(f, 1) returns f itself.
ScalarField dilate(const ScalarField& f, double r);

/// |x|^2 (subharmonic; log-subharmonic only for n >= 2).
ScalarField sq_norm(std::size_t dim);
/// exp(kappa |x|^2), kappa >= 0.
ScalarField exp_sq_norm(double kappa, std::size_t dim);
/// cosh(lambda |x|).
ScalarField cosh_norm(double lambda, std::size_t dim);

/// A user-supplied field (certificate unverified).
ScalarField from_functions(std::size_t dim, std::function<double(const Point&)> value,
                           std::function<Point(const Point&)> gradient, bool smooth, std::string description);

// ---------------------------------------------------------------------------
// Mollifiers

/// phi_k(y) = s^{-n} phi(y / s) with s = base_radius / k and the unit bump
/// phi(y) = exp(-1 / (1 - |y|^2)) / Z on |y| < 1. Integrals against phi use
/// a fixed product rule whose weights sum to one exactly.
class Mollifier {
 public:
  Mollifier(std::size_t dim, int k, double base_radius = 1.0);

  std::size_t dim() const { return dim_; }
  int scale_index() const { return k_; }
  double base_radius() const { return base_radius_; }
  double support_radius() const { return radius_; }
  /// Lebesgue volume of the support ball.
  double support_volume() const;

  double value(const Point& y) const;
  double log_value(const Point& y) const;
  Point gradient(const Point& y) const;
  /// grad ln phi(y) inside the support.
  Point log_gradient(const Point& y) const;

  /// L^p(dx) norm; p = infinity gives the peak value.
  double lp_norm(double p) const;
  /// int phi dx by radial quadrature (should be 1).
  double mass() const;

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  std::string describe() const;

 private:
  std::size_t dim_;
  int k_;
  double base_radius_;
  double radius_;
  double log_z_;  // log normalizer of the unit bump
  std::vector<Point> nodes_;
  std::vector<double> weights_;
};

/// f * phi; certificate mollified.
ScalarField convolve(const ScalarField& f, const Mollifier& phi);
/// (f * phi)_r for r in (0, 1); certificate mollified.
ScalarField dilated_convolve(const ScalarField& f, const Mollifier& phi, double r);

/// Average of f over the rotation orbit of x (dim <= 3).
ScalarField spherical_average(const ScalarField& f, std::size_t directions = 0);

// ---------------------------------------------------------------------------
// Subharmonicity testing

struct LshTestOptions {
  double tolerance = 1e-7;         ///< scaled by max(1, |ln f(x)|)
  std::size_t angular_count = 0;   ///< 0 = default_sphere_count(dim)
  std::size_t max_angular_count = 4096;
};

struct LshTestReport {
  bool passed = true;
  std::size_t tested = 0;
  std::size_t skipped_zero = 0;
  std::size_t refined = 0;
  double worst_violation = 0.0;
  std::optional<Point> witness;
  double witness_radius = 0.0;
  std::string note;
};

/// Sub-mean-value test of ln f over spheres dB(x, r).
LshTestReport is_lsh(const ScalarField& f, const std::vector<Point>& probes, const std::vector<double>& radii,
                     const LshTestOptions& options = {});
/// Default battery: 64 seeded probes and radii {0.05, 0.1, 0.25, 0.5}.
LshTestReport is_lsh(const ScalarField& f, const LshTestOptions& options = {});

/// Seeded normal(0, scale^2) probe points.
std::vector<Point> default_probes(std::size_t dim, std::size_t count = 64, std::uint64_t seed = 7, double scale = 1.0);
std::vector<double> default_radii();

nlohmann::ordered_json to_json(const LshTestReport& r);

}  // namespace lsh
