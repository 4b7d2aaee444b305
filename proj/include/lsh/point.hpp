#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lsh {

/// Largest ambient dimension supported by the library. Deterministic
/// quadrature is further capped at 3; Monte Carlo runs up to this bound.
inline constexpr std::size_t kMaxDim = 8;

/// A point (or vector) in R^n with n <= kMaxDim, stored inline.
class Point {
 public:
  Point() = default;
  explicit Point(std::size_t dim);
  Point(std::initializer_list<double> values);
  explicit Point(std::span<const double> values);

  static Point filled(std::size_t dim, double value);
  static Point unit(std::size_t dim, std::size_t axis);

  std::size_t dim() const { return dim_; }
  bool empty() const { return dim_ == 0; }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  double* begin() { return v_.data(); }
  double* end() { return v_.data() + dim_; }
  const double* begin() const { return v_.data(); }
  const double* end() const { return v_.data() + dim_; }

  std::span<const double> span() const { return {v_.data(), dim_}; }
  std::vector<double> to_vector() const { return {begin(), end()}; }

  Point& operator+=(const Point& o);
  Point& operator-=(const Point& o);
  Point& operator*=(double s);

  friend bool operator==(const Point& a, const Point& b);

 private:
  std::array<double, kMaxDim> v_{};
  std::size_t dim_ = 0;
};

Point operator+(Point a, const Point& b);
Point operator-(Point a, const Point& b);
Point operator-(Point a);
Point operator*(double s, Point a);
Point operator*(Point a, double s);

double dot(const Point& a, const Point& b);
double norm_sq(const Point& a);
double norm(const Point& a);

/// Concatenation (x1, x2) used by product measures.
Point concat(const Point& a, const Point& b);
/// Coordinates [offset, offset + count).
Point slice(const Point& a, std::size_t offset, std::size_t count);

std::string to_string(const Point& p);

}  // namespace lsh
