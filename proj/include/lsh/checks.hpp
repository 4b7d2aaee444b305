#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lsh/field.hpp"
#include "lsh/functionals.hpp"
#include "lsh/integrate.hpp"
#include "lsh/measure.hpp"

namespace lsh {

enum class Outcome { passed, failed, inconclusive };
std::string to_string(Outcome o);

/// Result of one falsifiable check. `quantities` holds named values (lhs,
/// rhs, deficit, witnesses); `inputs` echoes everything needed to rerun it.
struct CheckReport {
  std::string check_id;
  std::string name;  ///< campaign label; empty for ad hoc checks
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  nlohmann::ordered_json quantities = nlohmann::ordered_json::object();
  double tolerance = 0.0;
  Outcome outcome = Outcome::inconclusive;
  QuadratureSpec spec;
  std::vector<std::string> notes;

  /// One row per r for sHC-type checks (CSV output).
  struct AlphaRow {
    double r;
    double alpha;
    double q;
    double deficit;
  };
  std::vector<AlphaRow> alpha_rows;

  bool expect_failure = false;  ///< campaigns may declare expected counterexamples
  std::string error;            ///< set when the check could not run

  bool passed() const { return outcome == Outcome::passed; }
  /// Conclusive and matching the declared expectation.
  bool as_expected() const {
    return error.empty() && outcome != Outcome::inconclusive && passed() != expect_failure;
  }
};

nlohmann::ordered_json to_json(const CheckReport& r);

struct CheckOptions {
  double rel_tol = 1e-6;        ///< identity / relative slack
  double noise_factor = 3.0;    ///< multiples of the quadrature error added to inequality slack
  bool override_preconditions = false;
};

/// All check kinds, alphabetized.
std::vector<std::string> check_kinds();

/// Ent(g) <= (c/2) int Eg dmu.
CheckReport check_slsi(const ScalarField& g, const Density& mu, double c, const QuadratureSpec& spec = {},
                       const CheckOptions& opt = {});

/// |f_r|_{q(r)} <= |f|_1 and |f_r|_1 <= |f|_1 on r_grid, plus monotonicity of alpha.
CheckReport check_shc(const ScalarField& f, const Density& mu, double c, const std::vector<double>& r_grid,
                      const QuadratureSpec& spec = {}, const CheckOptions& opt = {});

/// |f_r|_q <= |f|_p at r = (p/q)^{c/2} and two smaller r.
CheckReport check_general_shc(const ScalarField& f, const Density& mu, double c, double p, double q,
                              const QuadratureSpec& spec = {}, const CheckOptions& opt = {});

/// |f_r|_p <= r^{-n/p} C(1/r, 0)^{1/p} |f|_p.
CheckReport check_dilation_bound(const ScalarField& f, const Density& mu, double p, double r,
                                 const QuadratureSpec& spec = {}, const CheckOptions& opt = {},
                                 const RegularityGrid& grid = {});

/// |(f*phi)_r|_p <= r^{-n/p} C(1/r, s/r)^{1/p} Vol(K)^{1/p} |phi|_{p'} |f|_p, p >= 1.
/// Also reports Vol(K) |phi|_{p'}^p at phi's scale and at twice its index.
CheckReport check_dilated_convolution_bound(const ScalarField& f, const Density& mu, double p, const Mollifier& phi,
                                            double r, const QuadratureSpec& spec = {}, const CheckOptions& opt = {},
                                            const RegularityGrid& grid = {});

struct DensityApproxOptions {
  std::vector<int> k_list = {2, 4, 8, 16};
  std::vector<double> r_list = {0.9, 0.95, 0.99};
  double target = 0.01;        ///< relative to |f|_p
  double base_radius = 1.0;    ///< mollifier support at k = 1
  double noise_factor = 2.0;
};

/// e(k, r) = |(f*phi_k)_r - f|_p over the (k, r) grid.
CheckReport check_density_approximation(const ScalarField& f, const Density& mu, double p,
                                        const DensityApproxOptions& dopt = {}, const QuadratureSpec& spec = {},
                                        const CheckOptions& opt = {});

/// {0.1, 0.2, ..., 1.0}
std::vector<double> default_monotonicity_grid();

/// r -> f~(rx) non-decreasing for the spherical average f~, at every probe.
CheckReport check_spherical_monotonicity(const ScalarField& f, const std::vector<Point>& probes,
                                         const std::vector<double>& r_grid, double tolerance = 1e-7);

/// E k(rx) <= r^{2-n} E k(x) for a rotation-invariant k.
CheckReport check_radial_euler_bound(const ScalarField& k, const std::vector<Point>& probes,
                                     const std::vector<double>& r_grid, double tolerance = 1e-7);

/// Sub-mean-value test of ln f.
CheckReport check_lsh(const ScalarField& f, const LshTestOptions& options = {});

/// Regularity constants C^p(a, s) over a grid and the exponential-type verdict.
CheckReport check_regularity(const Density& mu, double p, const std::vector<double>& a_list,
                             const std::vector<double>& s_list, const RegularityGrid& grid = {});

enum class BestConstantMode { slsi, shc };
std::string to_string(BestConstantMode m);
BestConstantMode parse_best_constant_mode(const std::string& s);

struct BestConstantResult {
  double c = 0.0;
  bool lower_bound_only = false;  ///< nothing in range passed; c = c_max
  bool vacuous = false;           ///< c_min already passes
  int iterations = 0;
};

/// Smallest c in [c_min, c_max] at which every battery member passes.
BestConstantResult best_constant(const std::vector<ScalarField>& battery, const Density& mu, BestConstantMode mode,
                                 double c_min = 0.25, double c_max = 4.0, const QuadratureSpec& spec = {},
                                 double resolution = 1e-4, const std::vector<double>& r_grid = default_r_grid());

}  // namespace lsh
