#include "lsh/expr.hpp"

#include <cctype>
#include <charconv>
#include <complex>
#include <variant>

#include <fmt/format.h>

namespace lsh {

ExprError::ExprError(const std::string& what, std::size_t column)
    : std::runtime_error(fmt::format("{} (column {})", what, column)), column_(column) {}

namespace {

using Value = std::variant<double, ScalarField>;

struct Arg {
  Value value;
  std::size_t column;
};

class Parser {
 public:
  Parser(const std::string& text, const std::map<std::string, ScalarField>& named) : s_(text), named_(named) {}

  ScalarField run() {
    const std::size_t col = here();
    Value v = expr();
    skip();
    if (pos_ != s_.size()) fail(fmt::format("unexpected '{}'", s_[pos_]));
    if (!std::holds_alternative<ScalarField>(v)) throw ExprError("expression is a number, not a field", col);
    return std::get<ScalarField>(v);
  }

 private:
  const std::string& s_;
  const std::map<std::string, ScalarField>& named_;
  std::size_t pos_ = 0;

  std::size_t here() const { return pos_ + 1; }
  [[noreturn]] void fail(const std::string& what) const { throw ExprError(what, here()); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value expr() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char ch = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+' || ch == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') return call();
    fail(fmt::format("unexpected '{}'", ch));
  }

  double number() {
    const char* begin = s_.data() + pos_;
    const char* first = begin;
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
    if (ec != std::errc() || ptr == first) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  Value call() {
    const std::size_t col = here();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    skip();
    if (pos_ >= s_.size() || s_[pos_] != '(') {
      const auto it = named_.find(name);
      if (it == named_.end()) throw ExprError(fmt::format("unknown field '{}'", name), col);
      return it->second;
    }
    ++pos_;
    std::vector<Arg> args;
    skip();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      ++pos_;
    } else {
      while (true) {
        skip();
        const std::size_t acol = here();
        args.push_back({expr(), acol});
        skip();
        if (pos_ >= s_.size()) fail("missing ')'");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail(fmt::format("expected ',' or ')' but found '{}'", s_[pos_]));
      }
    }
    try {
      return build(name, args, col);
    } catch (const ExprError&) {
      throw;
    } catch (const std::exception& e) {
      throw ExprError(fmt::format("{}: {}", name, e.what()), col);
    }
  }

  static double num(const std::vector<Arg>& a, std::size_t i, const std::string& fn) {
    if (!std::holds_alternative<double>(a[i].value)) {
      throw ExprError(fmt::format("{}: argument {} must be a number", fn, i + 1), a[i].column);
    }
    return std::get<double>(a[i].value);
  }

  static std::size_t dim_arg(const std::vector<Arg>& a, std::size_t i, const std::string& fn) {
    const double d = num(a, i, fn);
    if (d < 1.0 || d > static_cast<double>(kMaxDim) || d != std::floor(d)) {
      throw ExprError(fmt::format("{}: dimension must be an integer in [1, {}]", fn, kMaxDim), a[i].column);
    }
    return static_cast<std::size_t>(d);
  }

  static const ScalarField& fld(const std::vector<Arg>& a, std::size_t i, const std::string& fn) {
    if (!std::holds_alternative<ScalarField>(a[i].value)) {
      throw ExprError(fmt::format("{}: argument {} must be a field", fn, i + 1), a[i].column);
    }
    return std::get<ScalarField>(a[i].value);
  }

  static void arity(const std::vector<Arg>& a, std::size_t lo, std::size_t hi, const std::string& fn, std::size_t col) {
    if (a.size() < lo || a.size() > hi) {
      const std::string want = lo == hi ? fmt::format("{}", lo) : fmt::format("{} to {}", lo, hi);
      throw ExprError(fmt::format("{} takes {} arguments, got {}", fn, want, a.size()), col);
    }
  }

  static Point vec(const std::vector<Arg>& a, std::size_t from, const std::string& fn) {
    Point p(a.size() - from);
    for (std::size_t i = from; i < a.size(); ++i) p[i - from] = num(a, i, fn);
    return p;
  }

  Value build(const std::string& fn, const std::vector<Arg>& a, std::size_t col) const {
    constexpr std::size_t kMax = kMaxDim;
    if (fn == "constant") {
      arity(a, 2, 2, fn, col);
      return constant(num(a, 0, fn), dim_arg(a, 1, fn));
    }
    if (fn == "log_linear") {
      arity(a, 1, kMax, fn, col);
      return log_linear(vec(a, 0, fn));
    }
    if (fn == "cosh") {
      arity(a, 1, kMax, fn, col);
      return cosh_field(vec(a, 0, fn));
    }
    if (fn == "exp_potential") {
      arity(a, 3, kMax + 2, fn, col);
      Potential u;
      u.offset = num(a, 0, fn);
      u.quadratic = num(a, 1, fn);
      u.linear = vec(a, 2, fn);
      return exp_subharmonic(u);
    }
    if (fn == "holomorphic") {
      if (a.empty() || a.size() % 2 != 0) throw ExprError("holomorphic takes (re, im) coefficient pairs", col);
      std::vector<std::complex<double>> coeffs;
      for (std::size_t i = 0; i < a.size(); i += 2) coeffs.emplace_back(num(a, i, fn), num(a, i + 1, fn));
      return modulus_holomorphic(coeffs);
    }
    if (fn == "power") {
      arity(a, 2, 2, fn, col);
      return power(fld(a, 0, fn), num(a, 1, fn));
    }
    if (fn == "product") {
      arity(a, 2, 2, fn, col);
      return product(fld(a, 0, fn), fld(a, 1, fn));
    }
    if (fn == "scale") {
      arity(a, 2, 2, fn, col);
      return scale(fld(a, 0, fn), num(a, 1, fn));
    }
    if (fn == "dilate") {
      arity(a, 2, 2, fn, col);
      return dilate(fld(a, 0, fn), num(a, 1, fn));
    }
    if (fn == "sq_norm") {
      arity(a, 1, 1, fn, col);
      return sq_norm(dim_arg(a, 0, fn));
    }
    if (fn == "exp_sq_norm") {
      arity(a, 2, 2, fn, col);
      return exp_sq_norm(num(a, 0, fn), dim_arg(a, 1, fn));
    }
    if (fn == "cosh_norm") {
      arity(a, 2, 2, fn, col);
      return cosh_norm(num(a, 0, fn), dim_arg(a, 1, fn));
    }
    if (fn == "mollify") {
      arity(a, 2, 3, fn, col);
      const ScalarField& f = fld(a, 0, fn);
      const double k = num(a, 1, fn);
      if (k < 1.0 || k != std::floor(k)) throw ExprError("mollify: k must be a positive integer", a[1].column);
      return convolve(f, Mollifier(f.dim(), static_cast<int>(k), a.size() == 3 ? num(a, 2, fn) : 1.0));
    }
    if (fn == "dilated_mollify") {
      arity(a, 3, 4, fn, col);
      const ScalarField& f = fld(a, 0, fn);
      const double k = num(a, 1, fn);
      if (k < 1.0 || k != std::floor(k)) throw ExprError("dilated_mollify: k must be a positive integer", a[1].column);
      return dilated_convolve(f, Mollifier(f.dim(), static_cast<int>(k), a.size() == 4 ? num(a, 3, fn) : 1.0),
                              num(a, 2, fn));
    }
    if (fn == "average") {
      arity(a, 1, 1, fn, col);
      return spherical_average(fld(a, 0, fn));
    }
    throw ExprError(fmt::format("unknown builder '{}'", fn), col);
  }
};

}  // namespace

ScalarField parse_field(const std::string& text, const std::map<std::string, ScalarField>& named) {
  return Parser(text, named).run();
}

std::vector<FieldBuilderInfo> field_builders() {
  return {
      {"average", "average(f)", "spherical average over rotations (dim <= 3)"},
      {"constant", "constant(value, dim)", "constant function"},
      {"cosh", "cosh(l1, ..., ln)", "cosh(lambda . x)"},
      {"cosh_norm", "cosh_norm(lambda, dim)", "cosh(lambda |x|)"},
      {"dilate", "dilate(f, r)", "x -> f(rx), r in (0, 1]"},
      {"dilated_mollify", "dilated_mollify(f, k, r[, base])", "(f * phi_k)_r"},
      {"exp_potential", "exp_potential(offset, quadratic, l1, ..., ln)", "exp(offset + l . x + quadratic |x|^2)"},
      {"exp_sq_norm", "exp_sq_norm(kappa, dim)", "exp(kappa |x|^2)"},
      {"holomorphic", "holomorphic(re0, im0, re1, im1, ...)", "|p(x + iy)| on R^2"},
      {"log_linear", "log_linear(l1, ..., ln)", "exp(lambda . x)"},
      {"mollify", "mollify(f, k[, base])", "f * phi_k with support radius base / k"},
      {"power", "power(f, p)", "f^p, p > 0"},
      {"product", "product(f, g)", "f g"},
      {"scale", "scale(f, t)", "t f, t > 0"},
      {"sq_norm", "sq_norm(dim)", "|x|^2"},
  };
}

}  // namespace lsh
