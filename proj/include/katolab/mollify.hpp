#pragma once

#include <vector>

#include "katolab/kato.hpp"
#include "katolab/mesh.hpp"
#include "katolab/sampled.hpp"

namespace katolab {

// Standard bump psi(x) = C exp(-1 / (1 - |x|^2)) on the unit ball, unit mass.
double mollifier(const Vec3& x);
// psi_delta(x) = delta^{-3} psi(x / delta).
double mollifier(const Vec3& x, double delta);

// Omega_delta = {x in Omega : dist(x, complement) > delta} intersected with
// B(0, 1/delta).
bool in_inner_domain(const Mesh& m, const Vec3& x, double delta);

struct MollifyResult {
  SampledFunction f;
  // delta < h / 2: the kernel is not resolved by the mesh.
  bool under_resolved = false;
};

// (f chi_{Omega_delta}) * psi_delta evaluated at element centroids. Source
// values come from the closed form at quadrature points when available,
// otherwise from the element values.
MollifyResult mollify(const Mesh& m, const SampledFunction& f, double delta);

struct MorreyResult {
  double value = 0.0;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

// sup over centers and radii of r^{-lambda} int_{B_r(x) cap Omega} |f|.
MorreyResult morrey_norm(const Mesh& m, const SampledFunction& f, double lambda, const std::vector<double>& radii,
                         const CenterSet& centers = {}, bool use_closed_form = true);

}  // namespace katolab
