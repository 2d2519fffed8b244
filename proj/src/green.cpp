#include "katolab/green.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "katolab/errors.hpp"
#include "katolab/parallel.hpp"
#include "katolab/splitting.hpp"

namespace katolab {

namespace {

using Tet = std::array<Vec3, 4>;

// Fraction of the tetrahedron inside the closed ball, from the centroids of
// the 8^levels children of repeated red refinement.
double ball_fraction(const Tet& t, const Vec3& c, double r, int levels) {
  if (levels == 0) return ((t[0] + t[1] + t[2] + t[3]) / 4.0 - c).norm() <= r ? 1.0 : 0.0;
  const Vec3 m01 = (t[0] + t[1]) / 2, m02 = (t[0] + t[2]) / 2, m03 = (t[0] + t[3]) / 2;
  const Vec3 m12 = (t[1] + t[2]) / 2, m13 = (t[1] + t[3]) / 2, m23 = (t[2] + t[3]) / 2;
  const Tet kids[8] = {{t[0], m01, m02, m03}, {m01, t[1], m12, m13}, {m02, m12, t[2], m23}, {m03, m13, m23, t[3]},
                       {m01, m02, m03, m13},  {m01, m02, m12, m13},  {m02, m03, m13, m23}, {m02, m12, m13, m23}};
  double sum = 0.0;
  for (const Tet& k : kids) sum += ball_fraction(k, c, r, levels - 1);
  return sum / 8.0;
}

double extrapolate_pair(double coarse_rho, double fine_rho, double coarse, double fine) {
  const double q = coarse_rho / fine_rho;
  return fine + (fine - coarse) / (q - 1.0);
}

BoundScan make_scan(std::string name, std::vector<double> grid, std::vector<double> constants) {
  BoundScan s;
  s.name = std::move(name);
  s.grid = std::move(grid);
  s.constants = std::move(constants);
  double lo = INFINITY, hi = 0.0;
  for (double c : s.constants) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  s.drift = s.constants.empty() ? 1.0 : (lo > 0.0 ? hi / lo : INFINITY);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

}  // namespace

ElementField green_source(const Mesh& m, const Vec3& y, double rho) {
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  ElementField f(m.num_elements(), 0.0);
  double mass = 0.0;
  for (int e : m.elements_near(y, rho)) {
    const auto& t = m.elements[e];
    const Tet tet{m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]};
    double far = 0.0;
    for (const Vec3& p : tet) far = std::max(far, (p - y).norm());
    const double frac = far <= rho ? 1.0 : ball_fraction(tet, y, rho, 2);
    f[e] = frac;
    mass += frac * m.volume[e];
  }
  if (!(mass > 0.0)) throw ResolutionError("the ball B_rho(y) contains no element centroid");
  for (double& v : f) v /= mass;
  return f;
}

VectorElementField green_regularizer(const Mesh& m, const Vec3& y, double rho) {
  const ElementField f = green_source(m, y, rho);
  const SolveReport w = solve_dirichlet(m, laplace_coefficients(m), &f, nullptr, NodalField::Zero(m.num_nodes()));
  VectorElementField g(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) g[e] = element_gradient(m, w.solution, e);
  return g;
}

std::vector<double> default_rhos(const Mesh& m) { return {8.0 * m.h, 4.0 * m.h, 2.0 * m.h}; }

GreenSample build_green(const Mesh& m, const CoefficientSet& k, const Vec3& y, std::vector<double> rhos,
                        const GreenOptions& opt) {
  if (rhos.empty()) rhos = default_rhos(m);
  std::sort(rhos.begin(), rhos.end(), std::greater<>());
  for (double r : rhos)
    if (r < 2.0 * m.h * (1.0 - 1e-12)) throw ResolutionError("rho below 2h is not resolved by the mesh");
  const CoefficientCheck cc = check_coefficients(m, k);
  // The forward construction needs cd; the adjoint one needs cd for L^t,
  // which is bd for L.
  if (opt.adjoint ? !cc.bd_holds : !cc.cd_holds)
    throw PreconditionError(opt.adjoint ? "the adjoint Green's function needs the bd condition"
                                        : "the Green's function construction needs the cd condition");
  GreenSample s;
  s.y = y;
  s.rhos = rhos;
  s.adjoint = opt.adjoint;
  s.d_y = m.in_domain(y) ? m.distance_to_boundary(y) : 0.0;
  if (!(s.d_y > rhos.front())) throw PreconditionError("the pole must lie farther than max(rho) from the boundary");
  s.regime_ok = s.d_y >= 4.0 * rhos.front();
  s.fields.resize(rhos.size());
  SolveOptions so = opt.solve;
  so.adjoint = opt.adjoint;
  so.check_negativity = false;
  CoefficientSet kk = k;
  kk.mode = NegativityMode::CD;
  parallel_for(rhos.size(), [&](std::size_t i) {
    const ElementField f = green_source(m, y, rhos[i]);
    s.fields[i] = solve_dirichlet(m, kk, &f, nullptr, NodalField::Zero(m.num_nodes()), so).solution;
  });
  s.min_value = INFINITY;
  s.max_value = -INFINITY;
  for (const auto& g : s.fields) {
    s.min_value = std::min(s.min_value, g.minCoeff());
    s.max_value = std::max(s.max_value, g.maxCoeff());
  }
  return s;
}

std::vector<GreenProbe> extrapolate(const Mesh& m, const GreenSample& s, const std::vector<Vec3>& probes) {
  std::vector<GreenProbe> out;
  const std::size_t n = s.rhos.size();
  for (const Vec3& x : probes) {
    GreenProbe p;
    p.x = x;
    p.distance = (x - s.y).norm();
    p.in_regime = p.distance >= 4.0 * s.rhos.front();
    for (const auto& g : s.fields) p.values.push_back(evaluate(m, g, x));
    p.extrapolated = n >= 2 ? extrapolate_pair(s.rhos[n - 2], s.rhos[n - 1], p.values[n - 2], p.values[n - 1])
                            : p.values.back();
    p.observed_order = NAN;
    if (n >= 3) {
      const double d0 = p.values[n - 3] - p.values[n - 2], d1 = p.values[n - 2] - p.values[n - 1];
      if (d0 != 0.0 && d1 != 0.0 && d0 * d1 > 0.0)
        p.observed_order = std::log(std::abs(d0 / d1)) / std::log(s.rhos[n - 2] / s.rhos[n - 1]);
    }
    out.push_back(p);
  }
  return out;
}

GreenBoundsReport check_green_bounds(const Mesh& m, const GreenSample& s, const std::vector<Vec3>& probes,
                                     std::vector<double> radii) {
  const NodalField& G = s.fields.back();
  const double rho = s.rhos.back();
  if (radii.empty())
    for (double r = 4.0 * rho; r < s.d_y; r *= 2.0) radii.push_back(r);
  GreenBoundsReport rep;

  {
    std::vector<double> grid, c;
    for (const auto& p : extrapolate(m, s, probes)) {
      grid.push_back(p.distance);
      c.push_back(p.extrapolated * p.distance);
    }
    rep.pointwise = make_scan("pointwise", grid, c);
  }

  std::vector<double> dist(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) dist[e] = (m.centroid(e) - s.y).norm();
  std::vector<Vec3> grad(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) grad[e] = element_gradient(m, G, e);

  std::vector<double> ext, l1, l2, gl1;
  for (double r : radii) {
    ElementMask outside(m.num_elements()), inside(m.num_elements());
    double g1 = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      outside[e] = dist[e] >= r;
      inside[e] = dist[e] < r;
      if (inside[e]) g1 += m.volume[e] * grad[e].norm();
    }
    ext.push_back(y12_norm(m, G, &outside) * std::sqrt(r));
    l1.push_back(lp_norm(m, G, 1.0, &inside) / (r * r));
    l2.push_back(lp_norm(m, G, 2.0, &inside) / std::sqrt(r));
    gl1.push_back(g1 / r);
  }
  rep.exterior_y12 = make_scan("exterior_y12", radii, ext);
  rep.ball_l1 = make_scan("ball_l1", radii, l1);
  rep.ball_l2 = make_scan("ball_l2", radii, l2);
  rep.grad_ball_l1 = make_scan("grad_ball_l1", radii, gl1);

  std::vector<double> tg, tc, sg, sc;
  for (double r : radii) {
    std::vector<double> shell_g, shell_grad;
    for (int i = 0; i < m.num_nodes(); ++i) {
      const double d = (m.nodes[i] - s.y).norm();
      if (d >= 0.9 * r && d <= 1.1 * r) shell_g.push_back(G[i]);
    }
    for (int e = 0; e < m.num_elements(); ++e)
      if (dist[e] >= 0.9 * r && dist[e] <= 1.1 * r) shell_grad.push_back(grad[e].norm());
    const double t = median(shell_g), tau = median(shell_grad);
    if (std::isfinite(t) && t > 0.0) {
      double vol = 0.0;
      for (int e = 0; e < m.num_elements(); ++e) {
        const auto& el = m.elements[e];
        vol += m.volume[e] * (1.0 - fraction_below({G[el[0]], G[el[1]], G[el[2]], G[el[3]]}, t));
      }
      tg.push_back(t);
      tc.push_back(t * std::cbrt(vol));
    }
    if (std::isfinite(tau) && tau > 0.0) {
      double vol = 0.0;
      for (int e = 0; e < m.num_elements(); ++e)
        if (grad[e].norm() > tau) vol += m.volume[e];
      sg.push_back(tau);
      sc.push_back(tau * std::pow(vol, 2.0 / 3.0));
    }
  }
  rep.level_set = make_scan("level_set", tg, tc);
  rep.grad_level_set = make_scan("grad_level_set", sg, sc);
  return rep;
}

SymmetryReport check_symmetry(const Mesh& m, const CoefficientSet& k, const std::vector<std::pair<Vec3, Vec3>>& pairs,
                              const std::vector<double>& rhos) {
  SymmetryReport rep;
  GreenOptions fwd, adj;
  adj.adjoint = true;
  // <f_rho(., p), G_rho> per rho, extrapolated like the point values.
  const auto averaged = [&](const GreenSample& g, const Vec3& p) {
    std::vector<double> v;
    for (std::size_t i = 0; i < g.rhos.size(); ++i) {
      const ElementField f = green_source(m, p, g.rhos[i]);
      double sum = 0.0;
      for (int e = 0; e < m.num_elements(); ++e)
        if (f[e] != 0.0) sum += f[e] * m.volume[e] * element_mean(m, g.fields[i], e);
      v.push_back(sum);
    }
    const std::size_t n = v.size();
    return n >= 2 ? extrapolate_pair(g.rhos[n - 2], g.rhos[n - 1], v[n - 2], v[n - 1]) : v.back();
  };
  for (const auto& [x, y] : pairs) {
    const GreenSample gy = build_green(m, k, y, rhos, fwd);
    const GreenSample gx = build_green(m, k, x, rhos, adj);
    const double a = averaged(gy, x), b = averaged(gx, y);
    rep.forward.push_back(a);
    rep.transposed.push_back(b);
    rep.max_relative_asymmetry = std::max(rep.max_relative_asymmetry, std::abs(a - b) / std::abs(a));
    const double pa = extrapolate(m, gy, {x}).front().extrapolated;
    const double pb = extrapolate(m, gx, {y}).front().extrapolated;
    rep.pointwise_asymmetry = std::max(rep.pointwise_asymmetry, std::abs(pa - pb) / std::abs(pa));
  }
  return rep;
}

RepresentationReport check_representation(const Mesh& m, const CoefficientSet& k, const ElementField& f,
                                          const std::vector<Vec3>& poles, const std::vector<double>& rhos) {
  RepresentationReport rep;
  SolveOptions so;
  so.adjoint = true;
  so.check_negativity = false;
  CoefficientSet kk = k;
  kk.mode = NegativityMode::CD;
  const NodalField u = solve_dirichlet(m, kk, &f, nullptr, NodalField::Zero(m.num_nodes()), so).solution;
  for (const Vec3& y : poles) {
    const GreenSample g = build_green(m, k, y, rhos);
    std::vector<double> pairing;
    for (const auto& G : g.fields) {
      double sum = 0.0;
      for (int e = 0; e < m.num_elements(); ++e) sum += f[e] * m.volume[e] * element_mean(m, G, e);
      pairing.push_back(sum);
    }
    const std::size_t n = pairing.size();
    const double green = n >= 2 ? extrapolate_pair(g.rhos[n - 2], g.rhos[n - 1], pairing[n - 2], pairing[n - 1])
                                : pairing.back();
    const ElementField fr = green_source(m, y, g.rhos.back());
    double avg = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
      if (fr[e] != 0.0) avg += fr[e] * m.volume[e] * element_mean(m, u, e);
    const double direct = evaluate(m, u, y);
    rep.green_side.push_back(green);
    rep.dual_average.push_back(avg);
    rep.direct_side.push_back(direct);
    const double scale = std::max(std::abs(direct), std::abs(green));
    if (scale > 0.0) rep.max_relative_mismatch = std::max(rep.max_relative_mismatch, std::abs(green - direct) / scale);
  }
  return rep;
}

double check_lower_bound(const Mesh& m, const CoefficientSet& k, const GreenSample& s, const std::vector<Vec3>& probes) {
  for (int e = 0; e < m.num_elements(); ++e)
    if (k.c[e].norm() > 1e-14 || std::abs(k.d[e]) > 1e-14)
      throw PreconditionError("the lower bound applies to operators without c and d terms");
  const double dy = m.distance_to_boundary(s.y);
  double best = INFINITY;
  for (const auto& p : extrapolate(m, s, probes)) {
    const double dx = m.in_domain(p.x) ? m.distance_to_boundary(p.x) : 0.0;
    if (!(2.0 * p.distance < std::min(dx, dy)))
      throw PreconditionError("probe pair too close to the boundary for the lower bound");
    best = std::min(best, p.extrapolated * p.distance);
  }
  return best;
}

nlohmann::json green_probes_to_json(const std::vector<GreenProbe>& probes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : probes)
    out.push_back({{"x", {p.x[0], p.x[1], p.x[2]}},
                   {"distance", p.distance},
                   {"values", p.values},
                   {"extrapolated", p.extrapolated},
                   {"observed_order", std::isfinite(p.observed_order) ? nlohmann::json(p.observed_order) : nullptr},
                   {"in_regime", p.in_regime}});
  return out;
}

nlohmann::json green_bounds_to_json(const GreenBoundsReport& r) {
  nlohmann::json out;
  for (const BoundScan* s : {&r.pointwise, &r.exterior_y12, &r.ball_l1, &r.ball_l2, &r.grad_ball_l1, &r.level_set,
                             &r.grad_level_set})
    out[s->name] = {{"grid", s->grid},
                    {"constants", s->constants},
                    {"drift", std::isfinite(s->drift) ? nlohmann::json(s->drift) : nullptr}};
  return out;
}

}  // namespace katolab
