#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsh/field.hpp"

namespace lsh {

/// Syntax or semantic error in a field expression; `column` is 1-based.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& what, std::size_t column);
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Builds a ScalarField from a call expression such as
/// `power(cosh(0.8), 1.5)` or `mollify(my_field, 8)`. Bare identifiers refer
/// to entries of `named`.
ScalarField parse_field(const std::string& text, const std::map<std::string, ScalarField>& named = {});

struct FieldBuilderInfo {
  std::string name;
  std::string signature;
  std::string summary;
};
/// Builders accepted by parse_field, alphabetized.
std::vector<FieldBuilderInfo> field_builders();

}  // namespace lsh
