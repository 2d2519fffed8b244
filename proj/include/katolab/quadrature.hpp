#pragma once

#include <array>
#include <vector>

namespace katolab {

// Quadrature on a tetrahedron in barycentric coordinates. Weights sum to 1 and
// are multiplied by the element volume at the call site.
struct TetRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  int degree = 0;
};

// 4 points, exact for quadratics.
const TetRule& tet_rule_degree2();
// 14 points with positive weights, exact for quintics. No point sits on a
// vertex, so integrands singular at a vertex are safe to sample.
const TetRule& tet_rule_degree5();

// Integral of (sum_i u_i lambda_i)^p over an element of the given volume, for
// integer p >= 0. Exact.
double integrate_linear_power(const std::array<double, 4>& u, int p, double volume);

}  // namespace katolab
