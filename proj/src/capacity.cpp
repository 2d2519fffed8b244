#include "katolab/capacity.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "katolab/errors.hpp"
#include "katolab/parallel.hpp"

namespace katolab {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

// Stiffness matrix of -Laplace over all nodes.
ColMatrix stiffness(const Mesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * m.elements.size());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto G = m.barycentric_gradients(e);
    const auto& t = m.elements[e];
    const Eigen::Matrix4d K = m.volume[e] * G * G.transpose();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) trip.emplace_back(t[i], t[j], K(i, j));
  }
  ColMatrix K(m.num_nodes(), m.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

}  // namespace

bool DomainGeometry::in_domain(const Vec3& x, double tol) const {
  for (int d = 0; d < 3; ++d)
    if (x[d] <= box.lo[d] + tol || x[d] >= box.hi[d] - tol) return false;
  for (const auto& g : excluded)
    if (g.signed_distance(x) <= tol) return false;
  return true;
}

CapacityResult capacity(const Mesh& m, const NodePredicate& in_E, double tol) {
  CapacityResult out;
  const int n = m.num_nodes();
  // 0: free, 1: in E, 2: boundary (zero trace wins).
  std::vector<char> kind(n, 0);
  for (int i = 0; i < n; ++i) {
    const bool e = in_E(m.nodes[i]);
    if (m.is_boundary[i]) {
      kind[i] = 2;
      if (e) out.degenerate = true;
    } else if (e) {
      kind[i] = 1;
      ++out.constrained_nodes;
    }
  }
  if (out.constrained_nodes == 0) throw ResolutionError("the condenser plate contains no interior mesh node");

  std::vector<int> local(n, -1);
  int nf = 0;
  for (int i = 0; i < n; ++i)
    if (kind[i] == 0) local[i] = nf++;
  const ColMatrix K = stiffness(m);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (int c = 0; c < K.outerSize(); ++c) {
    for (ColMatrix::InnerIterator it(K, c); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (local[r] < 0) continue;
      if (local[c] >= 0)
        trip.emplace_back(local[r], local[c], it.value());
      else if (kind[c] == 1)
        rhs[local[r]] -= it.value();
    }
  }
  ColMatrix A(nf, nf);
  A.setFromTriplets(trip.begin(), trip.end());

  NodalField w = NodalField::Zero(n);
  for (int i = 0; i < n; ++i)
    if (kind[i] == 1) w[i] = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nf);
  if (nf > 0) {
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.compute(A);
    cg.setTolerance(tol);
    const int block = 25;
    cg.setMaxIterations(block);
    const int max_blocks = std::max(40, 4 * nf / block);
    const double bnorm = rhs.norm();
    for (int b = 0; b < max_blocks; ++b) {
      x = cg.solveWithGuess(rhs, x);
      for (int i = 0; i < n; ++i)
        if (local[i] >= 0) w[i] = x[local[i]];
      out.energy_history.push_back(w.dot(K * w));
      if ((A * x - rhs).norm() <= tol * bnorm) break;
      if (b + 1 == max_blocks) throw ConvergenceError("condenser solve did not converge");
    }
  }
  out.minimizer = w;
  out.value = w.dot(K * w);
  if (out.energy_history.empty()) out.energy_history.push_back(out.value);
  return out;
}

CapacityResult capacity(const Mesh& m, const std::vector<Region>& E, double tol) {
  const double eps = 1e-9 * m.h;
  return capacity(
      m,
      [&](const Vec3& x) {
        for (const auto& g : E)
          if (g.signed_distance(x) <= eps) return true;
        return false;
      },
      tol);
}

Mesh condenser_mesh(const Vec3& c, double r, double R, double h) {
  MeshSpec s;
  s.box.lo = c - Vec3::Constant(R);
  s.box.hi = c + Vec3::Constant(R);
  s.h = h;
  s.excluded = {Region::outside_ball(c, R)};
  if (r > 0.0) s.interfaces = {Region::ball(c, r)};
  return build_mesh(s);
}

namespace {

double local_capacity(const DomainGeometry& omega, const Vec3& xi, double s, int resolution) {
  MeshSpec spec;
  const double R = 2.0 * s;
  spec.box.lo = xi - Vec3::Constant(R);
  spec.box.hi = xi + Vec3::Constant(R);
  spec.h = s / resolution;
  spec.excluded = {Region::outside_ball(xi, R)};
  spec.interfaces = {Region::ball(xi, s), Region::box(omega.box.lo, omega.box.hi)};
  for (const auto& g : omega.excluded) spec.interfaces.push_back(g);
  const Mesh m = build_mesh(spec);
  const double tol = 1e-9 * s;
  const auto in_E = [&](const Vec3& x) { return (x - xi).norm() <= s + tol && !omega.in_domain(x, tol); };
  try {
    return capacity(m, in_E, 1e-8).value;
  } catch (const ResolutionError&) {
    // No node of the local mesh lies in the complement.
    return 0.0;
  }
}

}  // namespace

CondenserRatio condenser_ratio(const DomainGeometry& omega, const Vec3& xi, double s, const CondenserOptions& opt) {
  if (!(s > 0.0)) throw ConfigError("condenser radius must be positive");
  if (opt.resolution < 4 || opt.resolution % 2) throw ConfigError("condenser resolution must be even and >= 4");
  CondenserRatio out;
  out.s = s;
  out.raw = local_capacity(omega, xi, s, opt.resolution) / s;
  out.ratio = out.raw;
  if (opt.extrapolate) {
    out.coarse = local_capacity(omega, xi, s, opt.resolution / 2) / s;
    out.ratio = 2.0 * out.raw - out.coarse;
  }
  out.ratio = std::max(0.0, out.ratio);
  return out;
}

double log_trapezoid(const std::vector<double>& s, const std::vector<double>& values) {
  if (s.size() != values.size()) throw ConfigError("grid and values differ in length");
  double sum = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) sum += 0.5 * (values[k - 1] + values[k]) * std::log(s[k] / s[k - 1]);
  return sum;
}

WienerReport wiener_integral(const DomainGeometry& omega, const Vec3& xi, double rho, double r,
                             const WienerOptions& opt) {
  if (!(rho > 0.0) || !(2.0 * rho < r)) throw ConfigError("the Wiener integral needs 0 < 2 rho < r");
  WienerReport out;
  out.xi = xi;
  const double floor = 4.0 * omega.h;
  for (double s = 2.0 * rho; s <= r * (1.0 + 1e-12); s *= 2.0)
    if (s >= floor * (1.0 - 1e-12)) out.radii.push_back(s);
  if (out.radii.size() < 3) throw ResolutionError("fewer than three dyadic levels are resolvable above 4h");
  std::vector<CondenserRatio> ratios(out.radii.size());
  parallel_for(out.radii.size(), [&](std::size_t k) { ratios[k] = condenser_ratio(omega, xi, out.radii[k], opt.condenser); });
  for (const auto& c : ratios) {
    out.cap_ratio.push_back(c.ratio);
    out.raw_ratio.push_back(c.raw);
  }
  out.integral.assign(out.radii.size(), 0.0);
  for (std::size_t k = 1; k < out.radii.size(); ++k)
    out.integral[k] = out.integral[k - 1] + 0.5 * (out.cap_ratio[k - 1] + out.cap_ratio[k]) *
                                                std::log(out.radii[k] / out.radii[k - 1]);
  out.total = out.integral.back();
  const std::size_t n = out.integral.size();
  out.divergent = out.integral[n - 1] - out.integral[n - 2] >= opt.margin &&
                  out.integral[n - 2] - out.integral[n - 3] >= opt.margin;
  return out;
}

CdcReport cdc_check(const DomainGeometry& omega, const std::vector<Vec3>& points, const std::vector<double>& radii,
                    double c_threshold, const CondenserOptions& opt) {
  CdcReport out;
  out.min_ratio = INFINITY;
  for (const Vec3& p : points) {
    std::vector<double> row;
    for (double s : radii) {
      const double v = condenser_ratio(omega, p, s, opt).ratio;
      row.push_back(v);
      out.min_ratio = std::min(out.min_ratio, v);
      if (v < c_threshold) out.holds = false;
    }
    out.ratios.push_back(std::move(row));
  }
  if (!std::isfinite(out.min_ratio)) out.min_ratio = 0.0;
  return out;
}

nlohmann::json wiener_report_to_json(const WienerReport& r) {
  return {{"xi", {r.xi[0], r.xi[1], r.xi[2]}},
          {"radii", r.radii},
          {"cap_ratio", r.cap_ratio},
          {"raw_ratio", r.raw_ratio},
          {"integral", r.integral},
          {"total", r.total},
          {"divergent", r.divergent}};
}

}  // namespace katolab
