#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "katolab/errors.hpp"
#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"
#include "katolab/quadrature.hpp"

using namespace katolab;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Integral of x^a y^b z^c over the reference tetrahedron.
double reference_monomial(int a, int b, int c) {
  return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
}

double edge_extreme(const Mesh& m, bool longest) {
  double best = longest ? 0.0 : 1e300;
  for (const auto& t : m.elements)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        const double l = (m.nodes[t[a]] - m.nodes[t[b]]).norm();
        best = longest ? std::max(best, l) : std::min(best, l);
      }
  return best;
}

}  // namespace

TEST_CASE("quadrature rules integrate monomials exactly up to their degree") {
  for (const TetRule* rule : {&tet_rule_degree2(), &tet_rule_degree5()}) {
    double wsum = 0.0;
    for (double w : rule->weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= rule->degree; ++a)
      for (int b = 0; a + b <= rule->degree; ++b)
        for (int c = 0; a + b + c <= rule->degree; ++c) {
          double s = 0.0;
          for (std::size_t q = 0; q < rule->points.size(); ++q) {
            const auto& l = rule->points[q];
            s += rule->weights[q] * std::pow(l[1], a) * std::pow(l[2], b) * std::pow(l[3], c);
          }
          CHECK(s / 6.0 == doctest::Approx(reference_monomial(a, b, c)).epsilon(1e-12));
        }
    for (const auto& l : rule->points)
      for (double x : l) CHECK(x > 1e-3);
  }
}

TEST_CASE("exact power integration matches brute-force quadrature") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const TetRule& rule = tet_rule_degree5();
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 4> u{U(rng), U(rng), U(rng), U(rng)};
    for (int p = 0; p <= 5; ++p) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& l = rule.points[q];
        s += rule.weights[q] * std::pow(l[0] * u[0] + l[1] * u[1] + l[2] * u[2] + l[3] * u[3], p);
      }
      CHECK(integrate_linear_power(u, p, 2.0) == doctest::Approx(2.0 * s).epsilon(1e-12));
    }
  }
}

TEST_CASE("unit cube meshes have the Kuhn element counts") {
  const Mesh coarse = unit_cube_mesh(1.0);
  CHECK(coarse.num_nodes() == 8);
  CHECK(coarse.num_elements() == 6);
  CHECK(coarse.boundary_nodes.size() == 8);

  const Mesh m = unit_cube_mesh(0.25);
  CHECK(m.num_nodes() == 125);
  CHECK(m.num_elements() == 384);
  CHECK(m.boundary_nodes.size() == 125 - 27);
  CHECK(m.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
  for (double v : m.volume) CHECK(v > 0.0);
  CHECK(edge_extreme(m, false) >= 0.25 * m.h - 1e-14);
  CHECK(edge_extreme(m, true) <= 4.0 * m.h);
}

TEST_CASE("norms of a linear function on the unit cube") {
  const Mesh m = unit_cube_mesh(0.25);
  const NodalField u = interpolate(m, [](const Vec3& x) { return x[0]; });
  CHECK(grad_l2_norm(m, u) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(lp_norm(m, u, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  CHECK(lp_norm(m, u, 6.0) == doctest::Approx(std::pow(1.0 / 7.0, 1.0 / 6.0)).epsilon(1e-13));
  CHECK(lp_norm(m, u, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("excluded ball: interior nodes removed, sphere nodes on the boundary") {
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = 1.0 / 16.0;
  const Vec3 c(0.5, 0.5, 0.5);
  s.excluded.push_back(Region::ball(c, 0.3));
  const Mesh m = build_mesh(s);
  for (const auto& x : m.nodes) CHECK((x - c).norm() >= 0.3 - 1e-9);
  for (int i : m.boundary_nodes) {
    const Vec3& x = m.nodes[i];
    const bool on_box = x.minCoeff() < 1e-12 || x.maxCoeff() > 1.0 - 1e-12;
    const double gap = std::abs((x - c).norm() - 0.3);
    CHECK((on_box || gap <= std::sqrt(3.0) * m.h));
  }
  for (double v : m.volume) CHECK(v > 0.0);
  CHECK(edge_extreme(m, false) >= 0.25 * m.h);
  CHECK(edge_extreme(m, true) <= 4.0 * m.h);
  const double exact = 1.0 - 4.0 / 3.0 * M_PI * 0.027;
  CHECK(m.total_volume() == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("ball domains approximate the ball volume") {
  const Mesh m = ball_mesh(Vec3::Zero(), 1.0, 1.0 / 8.0);
  CHECK(m.total_volume() == doctest::Approx(4.0 / 3.0 * M_PI).epsilon(0.01));
  for (int i : m.boundary_nodes) CHECK(m.nodes[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : m.volume) CHECK(v > 0.0);
  CHECK(edge_extreme(m, false) >= 0.25 * m.h);
  CHECK(edge_extreme(m, true) <= 4.0 * m.h);
}

TEST_CASE("a point region keeps its node as a boundary node") {
  MeshSpec s;
  s.box = Box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  s.h = 0.25;
  s.excluded.push_back(Region::point(Vec3::Zero()));
  const Mesh m = build_mesh(s);
  CHECK(m.num_elements() == 6 * 512);
  const int c = m.nearest_node(Vec3::Zero());
  CHECK(m.nodes[c].norm() < 1e-14);
  CHECK(m.is_boundary[c]);
  CHECK(m.boundary_nodes.size() == 9 * 9 * 9 - 7 * 7 * 7 + 1);
}

TEST_CASE("invalid mesh inputs are configuration errors") {
  CHECK_THROWS_AS(unit_cube_mesh(2.0), ConfigError);
  CHECK_THROWS_AS(unit_cube_mesh(0.0), ConfigError);
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = 0.25;
  s.excluded.push_back(Region::box(Vec3::Constant(-1.0), Vec3::Constant(2.0)));
  CHECK_THROWS_AS(build_mesh(s), EmptyDomainError);
}

TEST_CASE("mesh JSON round trip") {
  const Mesh m = unit_cube_mesh(0.5);
  const Mesh r = mesh_from_json(mesh_to_json(m));
  CHECK(r.num_nodes() == m.num_nodes());
  CHECK(r.num_elements() == m.num_elements());
  CHECK(r.boundary_nodes == m.boundary_nodes);
  CHECK(r.total_volume() == doctest::Approx(1.0));
  nlohmann::json bad = mesh_to_json(m);
  bad["elements"][0][0] = 1000;
  CHECK_THROWS_AS(mesh_from_json(bad), ConfigError);
}

TEST_CASE("Sobolev ratio of a hat function against brute-force sampling") {
  const Mesh m = unit_cube_mesh(0.25);
  const int c = m.nearest_node(Vec3(0.5, 0.5, 0.5));
  NodalField u = NodalField::Zero(m.num_nodes());
  u[c] = 1.0;
  // Oracle: midpoint sums over a uniform barycentric subdivision of each
  // element in the star of the node.
  const int n = 24;
  double l6 = 0.0, g2 = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.elements[e];
    int local = -1;
    for (int a = 0; a < 4; ++a)
      if (t[a] == c) local = a;
    if (local < 0) continue;
    g2 += element_gradient(m, u, e).squaredNorm() * m.volume[e];
    double s = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; i + j < n; ++j)
        for (int k = 0; i + j + k < n; ++k) {
          std::array<double, 4> l{(i + 0.25) / n, (j + 0.25) / n, (k + 0.25) / n, 0.0};
          l[3] = 1.0 - l[0] - l[1] - l[2];
          s += std::pow(l[local], 6);
          ++count;
        }
    l6 += s / count * m.volume[e];
  }
  const double oracle = std::pow(l6, 1.0 / 6.0) / std::sqrt(g2);
  const double computed = lp_norm(m, u, 6.0) / grad_l2_norm(m, u);
  CHECK(computed == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("Sobolev constant estimate is scale invariant") {
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = 0.125;
  const Mesh a = build_mesh(s);
  const Mesh b = scaled(a, 2.0);
  const auto ea = sobolev_constant_estimate(a, 12, 3);
  const auto eb = sobolev_constant_estimate(b, 12, 3);
  CHECK(ea.constant > 0.0);
  CHECK(eb.constant == doctest::Approx(ea.constant).epsilon(0.05));
}

TEST_CASE("fitted interfaces leave no holes inside the domain") {
  // Radius 16 h puts grid nodes exactly on the sphere, the configuration in
  // which projection used to flatten and invert elements.
  for (double h : {1.0 / 16, 1.0 / 32}) {
    MeshSpec s;
    s.box = Box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
    s.h = h;
    s.excluded = {Region::outside_ball(Vec3::Zero(), 1.0)};
    s.interfaces = {Region::ball(Vec3::Zero(), 0.5)};
    const Mesh m = build_mesh(s);
    // Dropped slivers at the outer sphere may expose nodes up to about h
    // inside it, but nothing near the interface.
    int inner = 0, inverted = 0;
    for (int i : m.boundary_nodes) inner += m.nodes[i].norm() < 1.0 - 2.0 * h;
    double vol = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto& t = m.elements[e];
      Mat3 J;
      for (int k = 0; k < 3; ++k) J.col(k) = m.nodes[t[k + 1]] - m.nodes[t[0]];
      inverted += J.determinant() <= 0.0;
      vol += J.determinant() / 6.0;
    }
    CHECK(inner == 0);
    CHECK(inverted == 0);
    CHECK(vol == doctest::Approx(4.0 * M_PI / 3.0).epsilon(0.01));
  }
}
