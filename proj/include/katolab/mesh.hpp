#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace katolab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();

  Vec3 extent() const { return hi - lo; }
  double diameter() const { return extent().norm(); }
  bool contains(const Vec3& x, double tol = 0.0) const;
};

// Closed region removed from the box. Ball::radius == 0 is a single point.
struct Region {
  enum class Kind { Ball, Box, BallExterior };

  Kind kind = Kind::Ball;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  static Region ball(const Vec3& c, double r);
  static Region point(const Vec3& c) { return ball(c, 0.0); }
  static Region box(const Vec3& lo, const Vec3& hi);
  // Everything outside the open ball B(c, r); intersecting the box with it
  // yields a ball-shaped domain.
  static Region outside_ball(const Vec3& c, double r);

  // Negative strictly inside the region, positive outside.
  double signed_distance(const Vec3& x) const;
  // Closest point on the region boundary.
  Vec3 project(const Vec3& x) const;
  // Smallest geometric feature; regions much smaller than h are not fitted.
  double feature_size() const;
};

struct MeshSpec {
  Box box;
  double h = 0.25;
  std::vector<Region> excluded;
  // Surfaces onto which nearby nodes are moved without removing anything,
  // e.g. the boundary of a condenser plate.
  std::vector<Region> interfaces;
  bool fit_boundaries = true;
};

// Tetrahedral P1 mesh built from a Kuhn subdivision of a uniform grid.
class Mesh {
 public:
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> elements;
  std::vector<int> boundary_nodes;
  std::vector<char> is_boundary;
  std::vector<double> volume;
  Box box;
  double h = 0.0;
  std::vector<Region> excluded;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  double total_volume() const;

  Vec3 centroid(int e) const;
  // Rows are the gradients of the four barycentric coordinates.
  Eigen::Matrix<double, 4, 3> barycentric_gradients(int e) const;
  double diameter(int e) const;

  // Elements whose closure may meet the closed ball B(c, r).
  std::vector<int> elements_near(const Vec3& c, double r) const;
  std::vector<int> nodes_in_ball(const Vec3& c, double r) const;
  int nearest_node(const Vec3& x) const;

  // Geometric domain: the open box minus the closed excluded regions.
  bool in_domain(const Vec3& x, double tol = 1e-12) const;
  bool in_complement(const Vec3& x, double tol = 1e-12) const { return !in_domain(x, tol); }
  double distance_to_boundary(const Vec3& x) const;

  // Rebuilds volumes, boundary flags and the spatial index.
  void finalize();

 private:
  Vec3 bin_origin_ = Vec3::Zero();
  double bin_size_ = 1.0;
  std::array<int, 3> bins_{1, 1, 1};
  double max_diameter_ = 0.0;
  std::vector<int> bin_start_;
  std::vector<int> bin_elements_;
  std::vector<int> node_bin_start_;
  std::vector<int> node_bin_items_;

  std::array<int, 3> bin_of(const Vec3& x) const;
};

Mesh build_mesh(const MeshSpec& spec);

// Unit cube [0,1]^3 with spacing h.
Mesh unit_cube_mesh(double h);
// Ball B(c, r) meshed from the box [c - r, c + r]^3 with spacing h.
Mesh ball_mesh(const Vec3& c, double r, double h);

// Scales all coordinates by s about the origin.
Mesh scaled(const Mesh& m, double s);

nlohmann::json mesh_to_json(const Mesh& m);
Mesh mesh_from_json(const nlohmann::json& j);

}  // namespace katolab
