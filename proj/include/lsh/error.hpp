#pragma once

#include <stdexcept>
#include <string>

#include "lsh/point.hpp"

namespace lsh {

/// A computation produced a non-finite value where a finite one is required.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Point witness)
      : std::runtime_error(what), witness_(witness) {}
  const Point& witness() const { return witness_; }

 private:
  Point witness_;
};

/// A quadrature could not produce a trustworthy value (non-finite integrand,
/// divergence detected by truncation screening, unsupported scheme).
class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what, Point witness = {})
      : std::runtime_error(what), witness_(witness) {}
  const Point& witness() const { return witness_; }

 private:
  Point witness_;
};

/// The Euclidean-regularity supremum diverges or overflows. The witness is a
/// point (x, y) where the weighted ratio is large or still increasing.
class TypeConditionViolated : public std::runtime_error {
 public:
  TypeConditionViolated(const std::string& what, Point x, Point y)
      : std::runtime_error(what), x_(x), y_(y) {}
  const Point& x() const { return x_; }
  const Point& y() const { return y_; }

 private:
  Point x_;
  Point y_;
};

/// A field failed a numerical sub-mean-value test during construction.
class NotSubharmonic : public std::invalid_argument {
 public:
  NotSubharmonic(const std::string& what, Point center, double radius)
      : std::invalid_argument(what), center_(center), radius_(radius) {}
  const Point& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Point center_;
  double radius_;
};

}  // namespace lsh
