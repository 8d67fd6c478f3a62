#pragma once

// Arithmetic expressions over the coordinates: + - * /, unary minus,
// abs, log, exp, sqrt, min, max, the variables x y z and the constant pi.

#include <array>
#include <memory>
#include <string>

#include "oplab/types.hpp"

namespace oplab {

class Expression {
 public:
  static Expression parse(const std::string& text);

  double eval(const std::array<double, 3>& xyz) const;
  double operator()(const std::array<double, 3>& xyz) const { return eval(xyz); }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace oplab
