#pragma once

#include <functional>
#include <vector>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"

namespace katolab {

using PointFunction = std::function<double(const Vec3&)>;

// Elementwise constant data, optionally backed by a closed form that
// quadratures may evaluate directly.
struct SampledFunction {
  ElementField values;
  PointFunction eval;
  std::vector<Vec3> singular_points;

  bool has_closed_form() const { return static_cast<bool>(eval); }
};

enum class Representative {
  Mean,      // degree 5 quadrature average over the element
  Centroid,  // value at the centroid
  Lower,     // smallest |f| over vertices and quadrature points
};

SampledFunction sample(const Mesh& m, const PointFunction& f, Representative rep = Representative::Mean,
                       std::vector<Vec3> singular_points = {});
SampledFunction from_values(ElementField values);

// |f|, f^2 and similar pointwise transforms keep the closed form in sync.
SampledFunction transform(const SampledFunction& f, const std::function<double(double)>& op);
SampledFunction masked(const SampledFunction& f, const ElementMask& mask);

}  // namespace katolab
