#include "katolab/fe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "katolab/errors.hpp"
#include "katolab/quadrature.hpp"

namespace katolab {

namespace {

bool selected(const ElementMask* mask, int e) { return !mask || (*mask)[e]; }

std::array<double, 4> local_values(const Mesh& m, const NodalField& u, int e) {
  const auto& t = m.elements[e];
  return {u[t[0]], u[t[1]], u[t[2]], u[t[3]]};
}

}  // namespace

NodalField interpolate(const Mesh& m, const std::function<double(const Vec3&)>& f) {
  NodalField u(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) u[i] = f(m.nodes[i]);
  return u;
}

Vec3 element_gradient(const Mesh& m, const NodalField& u, int e) {
  const auto G = m.barycentric_gradients(e);
  const auto& t = m.elements[e];
  Vec3 g = Vec3::Zero();
  for (int a = 0; a < 4; ++a) g += u[t[a]] * G.row(a).transpose();
  return g;
}

double element_mean(const Mesh& m, const NodalField& u, int e) {
  const auto& t = m.elements[e];
  return 0.25 * (u[t[0]] + u[t[1]] + u[t[2]] + u[t[3]]);
}

double evaluate(const Mesh& m, const NodalField& u, const Vec3& x) {
  for (int e : m.elements_near(x, 0.0)) {
    const auto& t = m.elements[e];
    Mat3 J;
    J.col(0) = m.nodes[t[1]] - m.nodes[t[0]];
    J.col(1) = m.nodes[t[2]] - m.nodes[t[0]];
    J.col(2) = m.nodes[t[3]] - m.nodes[t[0]];
    const Vec3 l = J.inverse() * (x - m.nodes[t[0]]);
    const double l0 = 1.0 - l.sum();
    const double tol = -1e-10;
    if (l0 >= tol && l[0] >= tol && l[1] >= tol && l[2] >= tol)
      return l0 * u[t[0]] + l[0] * u[t[1]] + l[1] * u[t[2]] + l[2] * u[t[3]];
  }
  throw PreconditionError("evaluation point lies outside the mesh");
}

Eigen::VectorXd lumped_mass(const Mesh& m) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.num_nodes());
  for (int e = 0; e < m.num_elements(); ++e)
    for (int v : m.elements[e]) w[v] += 0.25 * m.volume[e];
  return w;
}

double lp_norm(const Mesh& m, const NodalField& u, double p, const ElementMask* mask) {
  if (std::isinf(p)) {
    double mx = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
      if (selected(mask, e))
        for (int v : m.elements[e]) mx = std::max(mx, std::abs(u[v]));
    return mx;
  }
  if (!(p > 0.0)) throw ConfigError("Lebesgue exponent must be positive");
  const bool exact = std::abs(p - std::round(p)) < 1e-14 && static_cast<int>(std::round(p)) % 2 == 0;
  const TetRule& rule = tet_rule_degree5();
  double acc = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    if (!selected(mask, e)) continue;
    const auto v = local_values(m, u, e);
    if (exact) {
      acc += integrate_linear_power(v, static_cast<int>(std::round(p)), m.volume[e]);
    } else {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        const double val = l[0] * v[0] + l[1] * v[1] + l[2] * v[2] + l[3] * v[3];
        s += rule.weights[q] * std::pow(std::abs(val), p);
      }
      acc += s * m.volume[e];
    }
  }
  return std::pow(acc, 1.0 / p);
}

double grad_l2_norm(const Mesh& m, const NodalField& u, const ElementMask* mask) {
  double acc = 0.0;
  for (int e = 0; e < m.num_elements(); ++e)
    if (selected(mask, e)) acc += element_gradient(m, u, e).squaredNorm() * m.volume[e];
  return std::sqrt(acc);
}

double y12_norm(const Mesh& m, const NodalField& u, const ElementMask* mask) {
  return lp_norm(m, u, 6.0, mask) + grad_l2_norm(m, u, mask);
}

double lp_norm(const Mesh& m, const ElementField& f, double p, const ElementMask* mask) {
  double acc = 0.0;
  if (std::isinf(p)) {
    for (int e = 0; e < m.num_elements(); ++e)
      if (selected(mask, e)) acc = std::max(acc, std::abs(f[e]));
    return acc;
  }
  for (int e = 0; e < m.num_elements(); ++e)
    if (selected(mask, e)) acc += std::pow(std::abs(f[e]), p) * m.volume[e];
  return std::pow(acc, 1.0 / p);
}

double l2_norm(const Mesh& m, const VectorElementField& g, const ElementMask* mask) {
  double acc = 0.0;
  for (int e = 0; e < m.num_elements(); ++e)
    if (selected(mask, e)) acc += g[e].squaredNorm() * m.volume[e];
  return std::sqrt(acc);
}

SobolevEstimate sobolev_constant_estimate(const Mesh& m, int samples, std::uint64_t seed) {
  if (samples <= 0) throw ConfigError("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 lo = m.box.lo;
  const Vec3 ext = m.box.extent();
  const double diam = m.box.diameter();
  SobolevEstimate out;
  for (int s = 0; s < samples; ++s) {
    const int bumps = 1 + static_cast<int>(unit(rng) * 3.0);
    std::vector<Vec3> centers;
    std::vector<double> radii, amps;
    for (int b = 0; b < bumps; ++b) {
      centers.push_back(lo + Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(ext));
      radii.push_back(diam * (0.05 + 0.3 * unit(rng)));
      amps.push_back(0.5 + unit(rng));
    }
    NodalField u(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) {
      double v = 0.0;
      if (!m.is_boundary[i]) {
        for (int b = 0; b < bumps; ++b) {
          const double t = 1.0 - (m.nodes[i] - centers[b]).squaredNorm() / (radii[b] * radii[b]);
          if (t > 0.0) v += amps[b] * t * t;
        }
      }
      u[i] = v;
    }
    const double g = grad_l2_norm(m, u);
    if (g <= 0.0) continue;
    out.constant = std::max(out.constant, lp_norm(m, u, 6.0) / g);
    ++out.samples;
  }
  if (out.samples == 0) throw InsufficientDataError("no admissible sample had a nonzero gradient");
  return out;
}

nlohmann::json fe_function_to_json(const NodalField& u, const std::string& mesh_ref) {
  nlohmann::json j;
  j["mesh_ref"] = mesh_ref;
  j["values"] = std::vector<double>(u.data(), u.data() + u.size());
  return j;
}

NodalField fe_function_from_json(const nlohmann::json& j, const Mesh& m) {
  try {
    const auto v = j.at("values").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != m.num_nodes()) throw ConfigError("FE function length does not match the mesh");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed FE function JSON: ") + e.what());
  }
}

}  // namespace katolab
