#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsh/point.hpp"
#include "lsh/random.hpp"

namespace lsh {

enum class Provenance { builtin, mixture, product, convolution, perturbation };
enum class Family { gaussian, gen_exponential, poly_tail, uniform_ball };

std::string to_string(Provenance p);
std::string to_string(Family f);
Family parse_family(const std::string& name);

/// Axis-aligned Gaussian description, available when a measure is a
/// (product of) Gaussian(s). Enables Gauss-Hermite quadrature.
struct GaussianAxes {
  Point mean;
  Point sigma;
};

class Density;

/// Implementation interface behind Density. Models are immutable once built.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual std::size_t dim() const = 0;
  /// Log of the unnormalized density; -inf outside the support.
  virtual double log_unnormalized(const Point& x) const = 0;
  /// Log of the total mass of exp(log_unnormalized), computed numerically.
  virtual double log_mass() const = 0;
  /// Draw from the normalized measure.
  virtual Point sample(Rng& rng) const = 0;
  virtual double truncation_radius() const = 0;
  virtual bool rotation_invariant() const = 0;
  virtual bool compact_support() const { return false; }
  virtual bool heavy_tailed() const { return false; }
  virtual std::optional<GaussianAxes> gaussian_axes() const { return std::nullopt; }
  virtual Provenance provenance() const = 0;
  virtual std::string describe() const = 0;
  virtual std::vector<Density> components() const;
};

/// A probability density on R^n. Cheap to copy; shares an immutable model.
class Density {
 public:
  explicit Density(std::shared_ptr<const DensityModel> model);

  std::size_t dim() const { return model_->dim(); }
  /// Log of the normalized density (may be -inf).
  double log_density(const Point& x) const { return model_->log_unnormalized(x) - log_norm_; }
  /// Normalized density value; throws EvaluationError when it is not finite.
  double eval(const Point& x) const;

  double norm_const() const;
  double log_norm_const() const { return log_norm_; }
  bool rotation_invariant() const { return model_->rotation_invariant(); }
  double truncation_radius() const { return model_->truncation_radius(); }
  bool compact_support() const { return model_->compact_support(); }
  bool heavy_tailed() const { return model_->heavy_tailed(); }
  Provenance provenance() const { return model_->provenance(); }
  std::optional<GaussianAxes> gaussian_axes() const { return model_->gaussian_axes(); }
  std::string describe() const { return model_->describe(); }
  std::vector<Density> components() const { return model_->components(); }
  Point sample(Rng& rng) const { return model_->sample(rng); }
  const DensityModel& model() const { return *model_; }

 private:
  std::shared_ptr<const DensityModel> model_;
  double log_norm_;
};

double eval(const Density& mu, const Point& x);

/// Parameters for the built-in families; unused fields are ignored.
struct FamilyParams {
  double sigma = 1.0;   ///< gaussian scale
  Point mean;           ///< gaussian center (empty = origin)
  double c = 1.0;       ///< gen_exponential rate in exp(-c|x|^a)
  double a = 1.0;       ///< gen_exponential power
  double alpha = 1.0;   ///< poly_tail exponent in (1+x^2)^-alpha
  double radius = 1.0;  ///< uniform_ball radius
};

Density make_builtin(Family family, const FamilyParams& params, std::size_t dim);
Density make_gaussian(double sigma = 1.0, std::size_t dim = 1, Point mean = {});
Density make_gen_exponential(double c, double a, std::size_t dim = 1);
Density make_poly_tail(double alpha);
Density make_uniform_ball(double radius, std::size_t dim = 1);

/// (1 - t) mu1 + t mu2.
Density mix(const Density& mu1, const Density& mu2, double t);
/// mu1 (x) mu2 on R^{n1 + n2}.
Density product(const Density& mu1, const Density& mu2);

struct ConvolutionOptions {
  int cache_nodes_per_axis = 0;   ///< 0 = dimension default
  int inner_nodes_per_axis = 0;   ///< 0 = dimension default
  double cache_extent_factor = 2.5;
};

inline constexpr std::size_t kConvolutionMaxDim = 3;

/// mu1 * mu2, tabulated on a grid of log-density values and interpolated.
Density convolve_measures(const Density& mu1, const Density& mu2, const ConvolutionOptions& options = {});

/// Bounded perturbation: density proportional to w(x) rho(x) with
/// w(x) = 1 + amplitude * cos(frequency * |x|), |amplitude| < 1.
Density perturb(const Density& mu, double amplitude, double frequency);

/// Constants with lower * rho_base <= rho <= upper * rho_base.
struct PerturbationInfo {
  Density base;
  double lower;
  double upper;
};
std::optional<PerturbationInfo> perturbation_info(const Density& mu);

// ---------------------------------------------------------------------------
// Euclidean regularity constants
// ---------------------------------------------------------------------------

/// Sup-search grid. Zero fields take per-dimension defaults.
struct RegularityGrid {
  double radius = 0.0;       ///< 0 = the measure's truncation radius
  int nodes_per_axis = 0;    ///< 0 = 2001 (1-D), 201 (2-D), 41 (3-D)
  int tail_directions = 0;   ///< rays used by the tail screen (0 = default)
  bool refine = true;        ///< local compass search around the grid maximum
};

struct RegularityEstimate {
  double p = 0.0;
  double a = 1.0;
  double s = 0.0;
  bool finite = false;
  double value = 0.0;        ///< estimate of C^p(a, s); a lower bound of the true sup
  double log_value = 0.0;
  Point x_star;              ///< maximizer, or divergence witness when !finite
  Point y_star;
  std::string failure;
  double radius = 0.0;       ///< resolved grid radius
  int nodes_per_axis = 0;    ///< resolved grid resolution
  double spacing = 0.0;
};

/// Grid estimate of sup_x sup_{|y|<=s} |x|^p rho(ax + y) / rho(x). Never
/// throws on divergence; the result carries the witness instead.
RegularityEstimate estimate_regularity(const Density& mu, double p, double a, double s,
                                       const RegularityGrid& grid = {});

/// Throwing form of estimate_regularity: TypeConditionViolated on
/// divergence, std::invalid_argument on compact support or bad parameters.
double regularity_constant(const Density& mu, double p, double a, double s, const RegularityGrid& grid = {});

struct RegularityEntry {
  double a = 1.0;
  double s = 0.0;
  std::optional<double> estimate;
};

struct RegularityConstants {
  double p = 0.0;
  std::vector<RegularityEntry> entries;
  double radius = 0.0;
  int nodes_per_axis = 0;
  double near_one_eps = 0.25;
  int near_one_points = 16;
  std::optional<double> uniform_near_one;   ///< sup over a in (1, 1+eps] of C^0(a, 0)
  bool type_p = false;                      ///< all estimates finite
  std::optional<Point> witness_x;
  std::optional<Point> witness_y;
  std::string failure;
};

RegularityConstants type_report(const Density& mu, double p, const std::vector<double>& a_list,
                                const std::vector<double>& s_list, double eps = 0.25, int near_one_points = 16,
                                const RegularityGrid& grid = {});

nlohmann::ordered_json to_json(const RegularityEstimate& e);
nlohmann::ordered_json to_json(const RegularityConstants& c);

}  // namespace lsh
