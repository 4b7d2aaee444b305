#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsh/field.hpp"
#include "lsh/measure.hpp"

namespace lsh {

enum class Scheme { automatic, gauss_hermite, tensor_trapezoid, adaptive_1d, monte_carlo };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

/// How integrals against a Density are discretized. Zero fields take
/// per-scheme defaults.
struct QuadratureSpec {
  Scheme scheme = Scheme::automatic;
  int nodes_per_axis = 0;          ///< GH 96/48/24, trapezoid 401/161/61, adaptive_1d panels 64
  double truncation_radius = 0.0;  ///< 0 = the measure's own radius
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 1;
  double target_rel_tol = 1e-10;   ///< used by fully adaptive 1-D integration

  bool operator==(const QuadratureSpec&) const = default;
};

nlohmann::ordered_json to_json(const QuadratureSpec& s);
QuadratureSpec quadrature_spec_from_json(const nlohmann::ordered_json& j);

/// Value with an error estimate: |fine - coarse| for grids, a batch standard
/// error for Monte Carlo.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Discretization of a measure: log weights of a fine rule and a comparison
/// rule over one shared point list. The density is folded into the weights.
/// Each rule's weights sum to one.
struct NodeSet {
  std::size_t dim = 0;
  Scheme scheme = Scheme::automatic;
  int nodes_per_axis = 0;
  double truncation_radius = 0.0;
  std::vector<Point> points;
  std::vector<double> log_w_fine;    ///< -inf where a point is not in the rule
  std::vector<double> log_w_coarse;  ///< unused for Monte Carlo
  std::size_t batches = 0;           ///< Monte Carlo: contiguous equal batches

  bool monte_carlo() const { return scheme == Scheme::monte_carlo; }
};

/// Resolves `automatic` and builds the node set. Throws QuadratureError for
/// gauss_hermite on a non-Gaussian measure or deterministic schemes in dim > 3.
NodeSet build_nodes(const Density& mu, const QuadratureSpec& spec);
/// The scheme `automatic` resolves to for mu.
Scheme resolve_scheme(const Density& mu, const QuadratureSpec& spec);

/// A weighted rule restricted to one index range, used to evaluate a
/// functional once per rule (or per Monte Carlo batch).
struct RuleView {
  std::span<const double> log_w;
  double log_shift = 0.0;  ///< added to every weight (renormalizes MC batches)
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Evaluates fn on the fine rule and on the comparison rule(s); returns the
/// fine value with the scheme's error estimate.
Estimate estimate_functional(const NodeSet& nodes, const std::function<double(const RuleView&)>& fn);

/// Log-space moments of a rule: with w_i the rule weights and L_i a log
/// integrand, log_mass = log sum w_i e^{L_i} and mean(a) = sum w_i e^{L_i} a_i / sum w_i e^{L_i}.
struct LogMoments {
  double log_mass = 0.0;
  std::vector<double> means;
};
/// Entries of `factors` may be empty (skipped). Nodes whose L is below ln(1e-300)
/// contribute nothing (0 ln 0 = 0); `floored` counts them when non-null.
LogMoments log_moments(const RuleView& rule, std::span<const double> log_integrand,
                       std::span<const std::span<const double>> factors, std::size_t* floored = nullptr);

/// Evaluates log f at every node, throwing QuadratureError (with the node as
/// witness) when a value is NaN or +inf.
std::vector<double> log_values_at(const NodeSet& nodes, const std::function<double(const Point&)>& log_f);

/// int h dmu for a pointwise integrand (any sign).
Estimate integrate(const std::function<double(const Point&)>& h, const Density& mu, const QuadratureSpec& spec = {});
Estimate integrate(const ScalarField& f, const Density& mu, const QuadratureSpec& spec = {});
/// Same integral on a prebuilt node set.
Estimate integrate(const std::function<double(const Point&)>& h, const NodeSet& nodes);

/// (int f^p dmu)^{1/p}, p > 0 (p < 1 gives the quasi-norm).
Estimate lp_norm(const ScalarField& f, const Density& mu, double p, const QuadratureSpec& spec = {});
Estimate lp_norm(const ScalarField& f, const NodeSet& nodes, double p);
/// log int f^p dmu with its error estimate (error is on the log scale).
Estimate log_lp_integral(const ScalarField& f, const NodeSet& nodes, double p);

}  // namespace lsh
