#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "../oracles.hpp"
#include "lsh/checks.hpp"

using namespace lsh;

namespace {

std::vector<ScalarField> log_linear_battery() {
  return {log_linear(Point{0.4}), log_linear(Point{0.8}), log_linear(Point{1.2})};
}

std::vector<ScalarField> battery_1d() {
  return {constant(2.0, 1),    log_linear(Point{0.8}), cosh_field(0.8), power(cosh_field(1.2), 1.5),
          product(log_linear(Point{0.4}), cosh_field(0.5)), convolve(cosh_field(0.9), Mollifier(1, 4))};
}

ScalarField gaussian_bump(std::size_t n) {
  return from_functions(
      n, [](const Point& x) { return std::exp(-norm_sq(x)); },
      [](const Point& x) { return x * (-2.0 * std::exp(-norm_sq(x))); }, true, "exp(-|x|^2)");
}

}  // namespace

TEST(Checks, SlsiEqualityCase) {
  const Density mu = make_gaussian();
  for (const auto& f : log_linear_battery()) {
    const CheckReport r = check_slsi(f, mu, 1.0);
    EXPECT_TRUE(r.passed()) << f.describe();
    EXPECT_LE(std::abs(r.quantities["deficit"].get<double>()), 1e-6);
  }
}

TEST(Checks, SlsiStrictCasesAndConstants) {
  const Density mu = make_gaussian();
  const CheckReport r = check_slsi(cosh_field(0.8), mu, 1.0);
  EXPECT_TRUE(r.passed());
  EXPECT_GT(r.quantities["deficit"].get<double>(), 0.0);
  for (const auto& mu2 : {make_gaussian(), make_gen_exponential(1.0, 1.0, 1), make_gaussian(1.0, 2)}) {
    const CheckReport c = check_slsi(constant(3.0, mu2.dim()), mu2, 0.7);
    EXPECT_TRUE(c.passed());
    EXPECT_EQ(c.quantities["deficit"].get<double>(), 0.0);
  }
}

TEST(Checks, SlsiFailsBelowSharpConstant) {
  const CheckReport r = check_slsi(log_linear(Point{0.8}), make_gaussian(), 0.9);
  EXPECT_EQ(r.outcome, Outcome::failed);
  EXPECT_LT(r.quantities["deficit"].get<double>(), -10.0 * r.tolerance);
}

TEST(Checks, SlsiPreconditions) {
  const auto uncertified = from_functions(
      1, [](const Point& x) { return std::exp(0.3 * x[0]); }, [](const Point& x) { return Point{0.3 * std::exp(0.3 * x[0])}; },
      true, "e^{0.3x}");
  EXPECT_EQ(check_slsi(uncertified, make_gaussian(), 1.0).outcome, Outcome::inconclusive);
  CheckOptions o;
  o.override_preconditions = true;
  EXPECT_EQ(check_slsi(uncertified, make_gaussian(), 1.0, {}, o).outcome, Outcome::passed);
  const Density shifted = make_gaussian(1.0, 1, Point{0.5});
  EXPECT_EQ(check_slsi(cosh_field(0.5), shifted, 1.0).outcome, Outcome::inconclusive);
  EXPECT_EQ(check_slsi(log_linear(Point{0.8}), make_poly_tail(2.0), 1.0).outcome, Outcome::inconclusive);
}

TEST(Checks, ShcEqualityCase) {
  const Density mu = make_gaussian();
  for (const auto& f : log_linear_battery()) {
    const CheckReport r = check_shc(f, mu, 1.0, default_r_grid());
    EXPECT_TRUE(r.passed()) << f.describe();
    ASSERT_EQ(r.alpha_rows.size(), default_r_grid().size());
    for (const auto& row : r.alpha_rows) EXPECT_LE(std::abs(row.deficit), 1e-6 * row.alpha);
    EXPECT_FALSE(r.notes.empty());
  }
  EXPECT_TRUE(check_shc(constant(1.0, 1), mu, 1.0, default_r_grid()).passed());
}

TEST(Checks, ShcSharpnessCounterexample) {
  // c = 0.5, lambda = 1: alpha(r) = exp(1 / (2 r^2)) decreases in r.
  const CheckReport r = check_shc(log_linear(Point{1.0}), make_gaussian(), 0.5, default_r_grid());
  EXPECT_EQ(r.outcome, Outcome::failed);
  EXPECT_FALSE(r.quantities["alpha_monotone"].get<bool>());
  for (const auto& row : r.alpha_rows) EXPECT_NEAR(row.alpha, std::exp(0.5 / (row.r * row.r)), 1e-8 * row.alpha);
}

TEST(Checks, ShcIsMonotoneInC) {
  const Density mu = make_gaussian();
  for (const auto& f : battery_1d()) {
    bool seen_pass = false;
    for (double c : {0.6, 0.9, 1.0, 1.2, 2.0}) {
      const bool p = check_shc(f, mu, c, default_r_grid()).passed();
      if (seen_pass) EXPECT_TRUE(p) << f.describe() << " c=" << c;
      seen_pass = seen_pass || p;
    }
    EXPECT_TRUE(seen_pass) << f.describe();
  }
}

TEST(Checks, ShcImpliesLogSobolevBracket) {
  const Density mu = make_gaussian();
  for (const auto& f : battery_1d()) {
    for (double c : {0.8, 1.0, 1.5}) {
      const CheckReport r = check_shc(f, mu, c, default_r_grid());
      if (r.passed()) EXPECT_GE(r.quantities["bracket_at_1"].get<double>(), -1e-6) << f.describe();
    }
  }
}

TEST(Checks, OutcomesAreScaleCovariant) {
  const Density mu = make_gaussian();
  for (const auto& f : battery_1d()) {
    for (double c : {0.9, 1.0}) {
      EXPECT_EQ(check_shc(f, mu, c, default_r_grid()).outcome, check_shc(scale(f, 7.0), mu, c, default_r_grid()).outcome);
      EXPECT_EQ(check_slsi(f, mu, c).outcome, check_slsi(scale(f, 0.2), mu, c).outcome) << f.describe();
    }
  }
}

TEST(Checks, GeneralShc) {
  const Density mu = make_gaussian();
  const CheckReport eq = check_general_shc(log_linear(Point{0.8}), mu, 1.0, 1.0, 2.0);
  EXPECT_TRUE(eq.passed());
  EXPECT_NEAR(eq.quantities["contraction_time"].get<double>(), std::sqrt(0.5), 1e-14);
  EXPECT_LE(std::abs(eq.quantities["rows"][2]["deficit"].get<double>()), 1e-8);
  EXPECT_TRUE(check_general_shc(cosh_field(0.9), mu, 1.0, 2.0, 2.0).passed());
  EXPECT_TRUE(check_general_shc(cosh_field(0.9), mu, 1.0, 0.5, 1.0).passed());
  EXPECT_EQ(check_general_shc(log_linear(Point{0.8}), mu, 0.8, 1.0, 2.0).outcome, Outcome::failed);
}

TEST(Checks, DilationBound) {
  const Density mu = make_gaussian();
  for (const auto& f : battery_1d()) {
    for (double p : {1.0, 2.0}) {
      const CheckReport r = check_dilation_bound(f, mu, p, 0.8);
      EXPECT_TRUE(r.passed()) << f.describe();
      EXPECT_NEAR(r.quantities["operator_bound"].get<double>(), std::pow(0.8, -1.0 / p), 1e-9);
    }
  }
  const CheckReport one = check_dilation_bound(constant(1.0, 1), mu, 2.0, 1.0);
  EXPECT_TRUE(one.passed());
  EXPECT_LE(one.quantities["lhs"].get<double>(), one.quantities["rhs"].get<double>());
  EXPECT_EQ(check_dilation_bound(constant(1.0, 1), make_uniform_ball(1.0, 1), 2.0, 0.8).outcome, Outcome::inconclusive);
}

TEST(Checks, DilatedConvolutionBound) {
  const Density mu = make_gaussian();
  const CheckReport r = check_dilated_convolution_bound(log_linear(Point{0.5}), mu, 2.0, Mollifier(1, 4), 0.8);
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.quantities["slack_ratio"].get<double>(), 1.0);
  EXPECT_LE(r.quantities["scaling_relative_difference"].get<double>(), 1e-8);
  // C(1/r, s/r) = exp(s^2 / (2 (1 - r^2))) for the standard Gaussian
  const double s = 0.25;
  EXPECT_NEAR(r.quantities["regularity"]["estimate"].get<double>(), std::exp(s * s / (2.0 * (1.0 - 0.64))), 1e-6);
  const CheckReport p1 = check_dilated_convolution_bound(cosh_field(0.7), mu, 1.0, Mollifier(1, 4), 0.6);
  EXPECT_TRUE(p1.passed());
  EXPECT_EQ(p1.quantities["conjugate_exponent"], "inf");
  EXPECT_NEAR(p1.quantities["mollifier_norm_conjugate"].get<double>(), Mollifier(1, 4).value(Point{0.0}), 1e-12);
}

TEST(Checks, DensityApproximation) {
  const Density mu = make_gaussian();
  DensityApproxOptions o;
  o.base_radius = 12.0;
  for (double p : {1.0, 2.0}) {
    const CheckReport r = check_density_approximation(log_linear(Point{0.25}), mu, p, o);
    EXPECT_TRUE(r.passed()) << p << " " << to_json(r).dump();
    EXPECT_TRUE(r.quantities["error_decreasing_in_k"].get<bool>());
    EXPECT_LE(r.quantities["relative_error_at_kmax_rmax"].get<double>(), 0.01);
  }
  const CheckReport c = check_density_approximation(constant(2.0, 1), mu, 2.0);
  EXPECT_TRUE(c.passed());
  for (const auto& cell : c.quantities["cells"]) EXPECT_LT(cell["error"].get<double>(), 1e-12);
}

TEST(Checks, DensityApproximationSplitsVanish) {
  const Density mu = make_gaussian();
  DensityApproxOptions o;
  o.k_list = {2, 4, 8, 16, 32};
  o.r_list = {0.9, 0.95, 0.99, 0.999};
  const CheckReport r = check_density_approximation(cosh_field(0.3), mu, 2.0, o);
  EXPECT_TRUE(r.quantities["mollification_split_decreasing_in_k"].get<bool>());
  EXPECT_TRUE(r.quantities["dilation_split_decreasing_in_r"].get<bool>());
  const auto& m = r.quantities["mollification_split"];
  const auto& d = r.quantities["dilation_split"];
  EXPECT_LT(m.back()["mollification_error"].get<double>(), 0.01 * m.front()["mollification_error"].get<double>());
  EXPECT_LT(d.back()["dilation_error"].get<double>(), 0.02 * d.front()["dilation_error"].get<double>());
}

TEST(Checks, DensityApproximationCancellationAtSmallMollifier) {
  // f * phi >= f for subharmonic f while f_r < f on most of the mass, so with
  // a small mollifier e(k, 0.99) grows toward |f_r - f| as k increases.
  const CheckReport r = check_density_approximation(log_linear(Point{0.25}), make_gaussian(), 2.0);
  EXPECT_FALSE(r.quantities["error_decreasing_in_k"].get<bool>());
  EXPECT_TRUE(r.quantities["mollification_split_decreasing_in_k"].get<bool>());
  EXPECT_TRUE(r.quantities["target_met"].get<bool>());
  EXPECT_EQ(r.outcome, Outcome::failed);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Checks, SphericalMonotonicity) {
  const auto grid = default_monotonicity_grid();
  for (std::size_t n : {1u, 2u, 3u}) {
    const CheckReport r = check_spherical_monotonicity(sq_norm(n), default_probes(n), grid);
    EXPECT_TRUE(r.passed()) << n;
    EXPECT_TRUE(check_spherical_monotonicity(cosh_norm(0.8, n), default_probes(n), grid).passed());
  }
  const ScalarField ex = log_linear(Point{1.0, 0.0});
  EXPECT_TRUE(check_spherical_monotonicity(ex, default_probes(2), grid).passed());
  const ScalarField avg = spherical_average(ex);
  for (double t : {0.3, 1.0, 2.5}) EXPECT_NEAR(avg.value(Point{0.0, t}), oracle::bessel_i0(t), 1e-9);
  // exp(-|x|^2) is not subharmonic; its average decreases along rays.
  EXPECT_EQ(check_spherical_monotonicity(gaussian_bump(2), default_probes(2), grid).outcome, Outcome::failed);
}

TEST(Checks, RadialEulerBound) {
  const auto grid = default_monotonicity_grid();
  for (std::size_t n : {1u, 2u, 3u}) {
    EXPECT_TRUE(check_radial_euler_bound(sq_norm(n), default_probes(n), grid).passed()) << n;
    EXPECT_TRUE(check_radial_euler_bound(cosh_norm(0.8, n), default_probes(n), grid).passed()) << n;
    EXPECT_TRUE(check_radial_euler_bound(exp_sq_norm(0.3, n), default_probes(n), grid).passed()) << n;
  }
  const CheckReport bad = check_radial_euler_bound(gaussian_bump(2), default_probes(2), grid);
  EXPECT_EQ(bad.outcome, Outcome::failed);
  EXPECT_FALSE(bad.quantities["witness"].is_null());
  EXPECT_EQ(check_radial_euler_bound(log_linear(Point{1.0, 0.0}), default_probes(2), grid).outcome,
            Outcome::inconclusive);
}

TEST(Checks, BestConstantGaussianSlsi) {
  const BestConstantResult r = best_constant(log_linear_battery(), make_gaussian(), BestConstantMode::slsi);
  EXPECT_NEAR(r.c, 1.0, 1e-3);
  EXPECT_EQ(fmt::format("{:.3f}", r.c), "1.000");
  EXPECT_FALSE(r.lower_bound_only);
}

TEST(Checks, BestConstantGaussianShc) {
  const BestConstantResult r = best_constant(log_linear_battery(), make_gaussian(), BestConstantMode::shc);
  EXPECT_NEAR(r.c, 1.0, 1e-3);
}

TEST(Checks, BestConstantVacuousAndUnbounded) {
  const BestConstantResult v = best_constant({constant(1.0, 1), constant(5.0, 1)}, make_gaussian(), BestConstantMode::slsi);
  EXPECT_TRUE(v.vacuous);
  EXPECT_DOUBLE_EQ(v.c, 0.25);
  const BestConstantResult u =
      best_constant({log_linear(Point{0.8})}, make_gaussian(), BestConstantMode::slsi, 0.25, 0.9);
  EXPECT_TRUE(u.lower_bound_only);
  EXPECT_DOUBLE_EQ(u.c, 0.9);
  EXPECT_THROW(best_constant({}, make_gaussian(), BestConstantMode::slsi), std::invalid_argument);
}

TEST(Checks, LshAndRegularityWrappers) {
  EXPECT_TRUE(check_lsh(cosh_norm(0.5, 2)).passed());
  EXPECT_EQ(check_lsh(gaussian_bump(2)).outcome, Outcome::failed);
  const CheckReport g = check_regularity(make_gaussian(), 0.0, {1.1, 2.0}, {0.0});
  EXPECT_TRUE(g.passed());
  const CheckReport t = check_regularity(make_poly_tail(1.0), 1.0, {2.0}, {0.0});
  EXPECT_EQ(t.outcome, Outcome::failed);
  EXPECT_EQ(check_regularity(make_uniform_ball(1.0, 1), 0.0, {2.0}, {0.0}).outcome, Outcome::inconclusive);
}

TEST(Checks, ReportJson) {
  const CheckReport r = check_shc(cosh_field(0.5), make_gaussian(), 1.0, {0.5, 1.0});
  const auto j = to_json(r);
  for (const char* key : {"check_id", "name", "inputs", "quantities", "tolerance", "outcome", "passed", "spec", "notes",
                          "alpha_rows"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["check_id"], "shc");
  const auto kinds = check_kinds();
  EXPECT_TRUE(std::is_sorted(kinds.begin(), kinds.end()));
}
