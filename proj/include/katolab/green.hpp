#pragma once

#include <string>
#include <vector>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"
#include "katolab/solver.hpp"

namespace katolab {

// f_rho(., y) = chi_{Omega_rho(y)} / mass, with element volume fractions from
// two levels of red refinement and the mass taken discretely so that
// int f_rho = 1 exactly.
ElementField green_source(const Mesh& m, const Vec3& y, double rho);

// g_rho = grad w_rho with -Laplace w_rho = f_rho, zero trace.
VectorElementField green_regularizer(const Mesh& m, const Vec3& y, double rho);

struct GreenSample {
  Vec3 y = Vec3::Zero();
  std::vector<double> rhos;  // decreasing
  std::vector<NodalField> fields;
  double d_y = 0.0;
  // d_y >= 4 max(rho): the regime in which extrapolation is justified.
  bool regime_ok = false;
  bool adjoint = false;
  double min_value = 0.0;  // smallest nodal value over all fields
  double max_value = 0.0;
};

struct GreenOptions {
  bool adjoint = false;
  SolveOptions solve;
};

// Solves L G_rho = f_rho (or L^t) for each rho. Needs cd negativity, rho >= 2h
// and B_rho(y) inside the domain.
GreenSample build_green(const Mesh& m, const CoefficientSet& k, const Vec3& y, std::vector<double> rhos,
                        const GreenOptions& opt = {});
std::vector<double> default_rhos(const Mesh& m);

struct GreenProbe {
  Vec3 x = Vec3::Zero();
  double distance = 0.0;
  std::vector<double> values;  // per rho
  double extrapolated = 0.0;
  // log(|d_0| / |d_1|) / log(rho ratio) from the last three values; NaN
  // when the differences do not shrink monotonically.
  double observed_order = 0.0;
  bool in_regime = false;  // |x - y| >= 4 max(rho)
};

// First-order Richardson extrapolation from the two smallest rho.
std::vector<GreenProbe> extrapolate(const Mesh& m, const GreenSample& s, const std::vector<Vec3>& probes);

struct BoundScan {
  std::string name;
  std::vector<double> grid;       // r or t
  std::vector<double> constants;  // measured value / model
  double drift = 0.0;             // max / min of the constants
};

struct GreenBoundsReport {
  BoundScan pointwise;     // G |x - y|
  BoundScan exterior_y12;  // ||G||_{Y^{1,2}(Omega \ B_r)} r^{1/2}
  BoundScan ball_l1;       // ||G||_{L^1(B_r)} / r^2
  BoundScan ball_l2;       // ||G||_{L^2(B_r)} / r^{1/2}
  BoundScan grad_ball_l1;  // ||grad G||_{L^1(B_r)} / r
  BoundScan level_set;     // t |{G > t}|^{1/3}
  BoundScan grad_level_set;  // t |{|grad G| > t}|^{2/3}
};

// Implied constants of the Green's function bounds on the finest field. Radii
// default to the dyadic grid 4 rho_min 2^k below d_y; levels to the median of
// G on the matching shells.
GreenBoundsReport check_green_bounds(const Mesh& m, const GreenSample& s, const std::vector<Vec3>& probes,
                                     std::vector<double> radii = {});

struct SymmetryReport {
  // |G(x,y) - G^t(y,x)| / G(x,y) with both sides averaged over B_rho at the
  // evaluation point, extrapolated in rho. The discrete identity behind it is
  // exact, so this measures solver accuracy.
  double max_relative_asymmetry = 0.0;
  // The same comparison from point evaluations; carries discretization error.
  double pointwise_asymmetry = 0.0;
  std::vector<double> forward, transposed;
};

// G(x, y) from L with pole y against G^t(y, x) from L^t with pole x.
SymmetryReport check_symmetry(const Mesh& m, const CoefficientSet& k, const std::vector<std::pair<Vec3, Vec3>>& pairs,
                              const std::vector<double>& rhos);

struct RepresentationReport {
  std::vector<double> green_side;   // int G_rho(x, y) f(x) dx, extrapolated in rho
  std::vector<double> direct_side;  // u(y) with L^t u = f
  std::vector<double> dual_average; // mean of u over Omega_rho(y), finest rho
  double max_relative_mismatch = 0.0;
};

RepresentationReport check_representation(const Mesh& m, const CoefficientSet& k, const ElementField& f,
                                          const std::vector<Vec3>& poles, const std::vector<double>& rhos);

// min over probes of G(x, y) |x - y| for operators -div(A grad u + b u).
// Probes must satisfy 2 |x - y| < dist({x, y}, boundary).
double check_lower_bound(const Mesh& m, const CoefficientSet& k, const GreenSample& s, const std::vector<Vec3>& probes);

nlohmann::json green_probes_to_json(const std::vector<GreenProbe>& p);
nlohmann::json green_bounds_to_json(const GreenBoundsReport& r);

}  // namespace katolab
