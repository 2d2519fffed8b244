#include "katolab/mollify.hpp"

#include <cmath>

#include "katolab/errors.hpp"
#include "katolab/parallel.hpp"
#include "katolab/quadrature.hpp"

namespace katolab {

namespace {

double bump(double s2) { return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0; }

double bump_mass() {
  // 4 pi int_0^1 r^2 bump(r^2) dr; the integrand is flat at both ends, so the
  // midpoint rule converges fast.
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) / n;
    acc += r * r * bump(r * r);
  }
  return 4.0 * M_PI * acc / n;
}

}  // namespace

double mollifier(const Vec3& x) {
  static const double scale = 1.0 / bump_mass();
  return scale * bump(x.squaredNorm());
}

double mollifier(const Vec3& x, double delta) { return mollifier(x / delta) / (delta * delta * delta); }

bool in_inner_domain(const Mesh& m, const Vec3& x, double delta) {
  return m.in_domain(x, 0.0) && m.distance_to_boundary(x) > delta && x.norm() < 1.0 / delta;
}

MollifyResult mollify(const Mesh& m, const SampledFunction& f, double delta) {
  if (!(delta > 0.0)) throw ConfigError("mollification radius must be positive");
  if (static_cast<int>(f.values.size()) != m.num_elements())
    throw ConfigError("sampled function does not match the mesh");
  MollifyResult out;
  out.under_resolved = delta < 0.5 * m.h;

  // Source values at quadrature points, with the Omega_delta cutoff applied.
  const TetRule& rule = tet_rule_degree5();
  const std::size_t nq = rule.points.size();
  std::vector<Vec3> points(m.num_elements() * nq);
  std::vector<double> mass(m.num_elements() * nq);
  parallel_for(m.num_elements(), [&](std::size_t e) {
    const auto& t = m.elements[e];
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& l = rule.points[q];
      Vec3 y = Vec3::Zero();
      for (int a = 0; a < 4; ++a) y += l[a] * m.nodes[t[a]];
      double v = 0.0;
      if (in_inner_domain(m, y, delta)) {
        v = f.has_closed_form() ? f.eval(y) : f.values[e];
        if (!std::isfinite(v)) v = 0.0;
      }
      points[e * nq + q] = y;
      mass[e * nq + q] = v * rule.weights[q] * m.volume[e];
    }
  });

  out.f.values.assign(m.num_elements(), 0.0);
  parallel_for(m.num_elements(), [&](std::size_t e) {
    const Vec3 x = m.centroid(static_cast<int>(e));
    double acc = 0.0;
    for (int s : m.elements_near(x, delta))
      for (std::size_t q = 0; q < nq; ++q) {
        const double w = mass[s * nq + q];
        if (w != 0.0) acc += w * mollifier(x - points[s * nq + q], delta);
      }
    out.f.values[e] = acc;
  });
  return out;
}

MorreyResult morrey_norm(const Mesh& m, const SampledFunction& f, double lambda, const std::vector<double>& radii,
                         const CenterSet& centers, bool use_closed_form) {
  if (!(lambda > 0.0 && lambda <= 3.0)) throw ConfigError("Morrey exponent must lie in (0, 3]");
  const auto xs = resolve_centers(m, f, centers);
  std::vector<std::vector<double>> per(xs.size());
  parallel_for(xs.size(), [&](std::size_t c) { per[c] = ball_integrals(m, f, xs[c], radii, 0, use_closed_form); });
  MorreyResult out;
  for (std::size_t c = 0; c < xs.size(); ++c)
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double v = per[c][i] / std::pow(radii[i], lambda);
      if (v > out.value) {
        out.value = v;
        out.center = xs[c];
        out.radius = radii[i];
      }
    }
  return out;
}

}  // namespace katolab
