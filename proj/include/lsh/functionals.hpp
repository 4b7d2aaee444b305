#pragma once

#include <cstddef>
#include <vector>

#include "lsh/field.hpp"
#include "lsh/integrate.hpp"
#include "lsh/measure.hpp"

namespace lsh {

/// Exponent schedule q(r) = r^{-2/c}.
double q_of_r(double c, double r);
/// Contraction time r(p, q) = (p/q)^{c/2}.
double contraction_time(double c, double p, double q);
/// {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}
std::vector<double> default_r_grid();

struct HCParams {
  double c = 1.0;
  std::vector<double> r_grid = default_r_grid();
  double p = 1.0;
  double q = 1.0;
  /// Throws std::invalid_argument unless c > 0, r_grid is increasing in (0, 1] and 0 < p <= q.
  void validate() const;
};

/// A functional value with its quadrature error estimate. `floored` counts
/// nodes where the integrand fell below the 1e-300 floor (0 ln 0 = 0).
struct FunctionalValue {
  double value = 0.0;
  double error = 0.0;
  std::size_t floored = 0;
};

/// int g ln(g / |g|_1) dmu.
FunctionalValue entropy(const ScalarField& g, const Density& mu, const QuadratureSpec& spec = {});
FunctionalValue entropy(const ScalarField& g, const NodeSet& nodes);

/// int Eg dmu with Eg = x . grad g.
FunctionalValue euler_energy(const ScalarField& g, const Density& mu, const QuadratureSpec& spec = {});
FunctionalValue euler_energy(const ScalarField& g, const NodeSet& nodes);

/// Largest q(r) accepted before f^q is considered to overflow.
inline constexpr double kMaxExponent = 64.0;

/// alpha(r) = |f_r|_{q(r)}.
FunctionalValue alpha(const ScalarField& f, const Density& mu, double c, double r, const QuadratureSpec& spec = {});
FunctionalValue alpha(const ScalarField& f, const NodeSet& nodes, double c, double r);

/// d alpha / dr from the log-derivative of |f_r|_q^q.
FunctionalValue alpha_prime_analytic(const ScalarField& f, const Density& mu, double c, double r,
                                     const QuadratureSpec& spec = {});
FunctionalValue alpha_prime_analytic(const ScalarField& f, const NodeSet& nodes, double c, double r);

/// Finite-difference derivative of alpha: central with step h, or the
/// second-order left difference when r + h > 1.
double alpha_prime_fd(const ScalarField& f, const NodeSet& nodes, double c, double r, double h = 1e-4);

/// -Ent(f_r^q) + (c/2) int E(f_r^q) dmu with q = q(r).
FunctionalValue hc_bracket(const ScalarField& f, const Density& mu, double c, double r, const QuadratureSpec& spec = {});
FunctionalValue hc_bracket(const ScalarField& f, const NodeSet& nodes, double c, double r);

/// (c r q / 2) alpha^{q-1} alpha', which equals hc_bracket.
double bracket_from_derivative(double c, double r, double alpha, double alpha_prime);

}  // namespace lsh
