#pragma once

#include <functional>
#include <memory>
#include <string>

#include "katolab/mesh.hpp"

namespace katolab::cli {

// Arithmetic over a point x in R^3.
//   variables: x1, x2, x3, r (= |x|), pi, e
//   operators: + - * / ^ (right associative, binds tighter than unary minus)
//   |...|: absolute value; |x| is the Euclidean norm of the point
//   functions: ln, log (natural), exp, sqrt, abs, sin, cos, tan, atan,
//              min(a, b), max(a, b), pow(a, b)
// Parse errors throw ConfigError naming the offending position.
class Expression {
 public:
  static Expression parse(const std::string& text);

  double operator()(const Vec3& x) const { return eval_(x); }
  const std::string& text() const { return text_; }
  // True when the expression does not depend on x.
  bool constant() const { return constant_; }

 private:
  std::string text_;
  std::function<double(const Vec3&)> eval_;
  bool constant_ = false;
};

}  // namespace katolab::cli
