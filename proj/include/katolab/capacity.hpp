#pragma once

#include <functional>
#include <vector>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"

namespace katolab {

struct CapacityResult {
  double value = 0.0;
  NodalField minimizer;
  // Dirichlet energy after each block of CG iterations.
  std::vector<double> energy_history;
  int constrained_nodes = 0;
  // E reaches the boundary of the mesh: the zero trace wins there and the
  // value is only a boundary-layer energy.
  bool degenerate = false;
};

using NodePredicate = std::function<bool(const Vec3&)>;

// Minimizes int |grad w|^2 over zero-trace P1 functions with w = 1 on the
// nodes selected by in_E. Throws ResolutionError if no interior node is
// selected.
CapacityResult capacity(const Mesh& m, const NodePredicate& in_E, double tol = 1e-10);
CapacityResult capacity(const Mesh& m, const std::vector<Region>& E, double tol = 1e-10);

// Mesh of the ball B(c, R) with spacing h and the sphere |x - c| = r fitted.
Mesh condenser_mesh(const Vec3& c, double r, double R, double h);

// Geometry of the domain whose complement feeds the Wiener integrand.
struct DomainGeometry {
  Box box;
  std::vector<Region> excluded;
  double h = 0.0;  // mesh width the domain is resolved at

  bool in_domain(const Vec3& x, double tol = 1e-12) const;
  static DomainGeometry of(const MeshSpec& s) { return {s.box, s.excluded, s.h}; }
  static DomainGeometry of(const Mesh& m) { return {m.box, m.excluded, m.h}; }
};

struct CondenserOptions {
  // Local spacing s / resolution on B_{2s}(xi).
  int resolution = 16;
  // Also solve at s / (resolution / 2) and extrapolate linearly to spacing 0.
  bool extrapolate = true;
};

struct CondenserRatio {
  double s = 0.0;
  double ratio = 0.0;  // extrapolated (or raw) Cap / s, clamped at 0
  double raw = 0.0;    // Cap / s at the finest local spacing
  double coarse = 0.0;
};

// Cap(closed B_s(xi) minus the domain, B_{2s}(xi)) / s.
CondenserRatio condenser_ratio(const DomainGeometry& omega, const Vec3& xi, double s, const CondenserOptions& opt = {});

struct WienerReport {
  Vec3 xi = Vec3::Zero();
  std::vector<double> radii;      // increasing dyadic s grid
  std::vector<double> cap_ratio;
  std::vector<double> raw_ratio;
  std::vector<double> integral;   // cumulative integral from radii[0] to radii[k]
  double total = 0.0;
  bool divergent = false;
};

struct WienerOptions {
  CondenserOptions condenser;
  // Divergent when each of the last two dyadic increments is at least this.
  double margin = 0.1;
};

// Trapezoid rule in log s.
double log_trapezoid(const std::vector<double>& s, const std::vector<double>& values);

// Integral of the capacity ratio over s in [2 rho, r] on the dyadic grid
// 2 rho 2^k. Levels below 4h are not resolvable; fewer than three resolvable
// levels is a ResolutionError.
WienerReport wiener_integral(const DomainGeometry& omega, const Vec3& xi, double rho, double r,
                             const WienerOptions& opt = {});

struct CdcReport {
  bool holds = true;
  std::vector<std::vector<double>> ratios;  // per point, per radius
  double min_ratio = 0.0;
};

CdcReport cdc_check(const DomainGeometry& omega, const std::vector<Vec3>& points, const std::vector<double>& radii,
                    double c_threshold, const CondenserOptions& opt = {});

nlohmann::json wiener_report_to_json(const WienerReport& r);

}  // namespace katolab
