#include "lsh/point.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace lsh {

namespace {

void check_dim(std::size_t dim) {
  if (dim > kMaxDim) {
    throw std::invalid_argument(fmt::format("dimension {} exceeds the supported maximum {}", dim, kMaxDim));
  }
}

void check_same(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(fmt::format("dimension mismatch: {} vs {}", a.dim(), b.dim()));
  }
}

}  // namespace

Point::Point(std::size_t dim) : dim_(dim) { check_dim(dim); }

Point::Point(std::initializer_list<double> values) : dim_(values.size()) {
  check_dim(dim_);
  std::copy(values.begin(), values.end(), v_.begin());
}

Point::Point(std::span<const double> values) : dim_(values.size()) {
  check_dim(dim_);
  std::copy(values.begin(), values.end(), v_.begin());
}

Point Point::filled(std::size_t dim, double value) {
  Point p(dim);
  std::fill(p.begin(), p.end(), value);
  return p;
}

Point Point::unit(std::size_t dim, std::size_t axis) {
  Point p(dim);
  p[axis] = 1.0;
  return p;
}

Point& Point::operator+=(const Point& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < dim_; ++i) v_[i] += o.v_[i];
  return *this;
}

Point& Point::operator-=(const Point& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < dim_; ++i) v_[i] -= o.v_[i];
  return *this;
}

Point& Point::operator*=(double s) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] *= s;
  return *this;
}

bool operator==(const Point& a, const Point& b) {
  return a.dim_ == b.dim_ && std::equal(a.begin(), a.end(), b.begin());
}

Point operator+(Point a, const Point& b) { return a += b; }
Point operator-(Point a, const Point& b) { return a -= b; }
Point operator-(Point a) { return a *= -1.0; }
Point operator*(double s, Point a) { return a *= s; }
Point operator*(Point a, double s) { return a *= s; }

double dot(const Point& a, const Point& b) {
  check_same(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const Point& a) { return dot(a, a); }
double norm(const Point& a) { return std::sqrt(norm_sq(a)); }

Point concat(const Point& a, const Point& b) {
  Point out(a.dim() + b.dim());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + a.dim());
  return out;
}

Point slice(const Point& a, std::size_t offset, std::size_t count) {
  if (offset + count > a.dim()) throw std::out_of_range("slice exceeds point dimension");
  return Point(a.span().subspan(offset, count));
}

std::string to_string(const Point& p) {
  std::string out = "(";
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{:.6g}", p[i]);
  }
  return out + ")";
}

}  // namespace lsh
