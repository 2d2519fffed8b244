#include "katolab/sampled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "katolab/quadrature.hpp"

namespace katolab {

SampledFunction sample(const Mesh& m, const PointFunction& f, Representative rep,
                       std::vector<Vec3> singular_points) {
  SampledFunction s;
  s.eval = f;
  s.singular_points = std::move(singular_points);
  s.values.resize(m.num_elements());
  const TetRule& rule = tet_rule_degree5();
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.elements[e];
    auto at = [&](const std::array<double, 4>& l) {
      Vec3 x = Vec3::Zero();
      for (int a = 0; a < 4; ++a) x += l[a] * m.nodes[t[a]];
      return x;
    };
    switch (rep) {
      case Representative::Centroid:
        s.values[e] = f(m.centroid(e));
        break;
      case Representative::Mean: {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) acc += rule.weights[q] * f(at(rule.points[q]));
        s.values[e] = acc;
        break;
      }
      case Representative::Lower: {
        double best = std::numeric_limits<double>::infinity();
        double value = 0.0;
        auto consider = [&](double v) {
          if (std::abs(v) < best) {
            best = std::abs(v);
            value = v;
          }
        };
        for (int a = 0; a < 4; ++a) consider(f(m.nodes[t[a]]));
        for (const auto& l : rule.points) consider(f(at(l)));
        s.values[e] = value;
        break;
      }
    }
  }
  return s;
}

SampledFunction from_values(ElementField values) {
  SampledFunction s;
  s.values = std::move(values);
  return s;
}

SampledFunction transform(const SampledFunction& f, const std::function<double(double)>& op) {
  SampledFunction s;
  s.values.resize(f.values.size());
  std::transform(f.values.begin(), f.values.end(), s.values.begin(), op);
  if (f.eval) {
    PointFunction inner = f.eval;
    s.eval = [inner, op](const Vec3& x) { return op(inner(x)); };
  }
  s.singular_points = f.singular_points;
  return s;
}

SampledFunction masked(const SampledFunction& f, const ElementMask& mask) {
  SampledFunction s;
  s.values = f.values;
  for (std::size_t e = 0; e < s.values.size(); ++e)
    if (!mask[e]) s.values[e] = 0.0;
  s.singular_points = f.singular_points;
  return s;
}

}  // namespace katolab
