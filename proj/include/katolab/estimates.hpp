#pragma once

#include <optional>
#include <string>
#include <vector>

#include "katolab/capacity.hpp"
#include "katolab/fe.hpp"
#include "katolab/kato.hpp"
#include "katolab/mesh.hpp"
#include "katolab/solver.hpp"

namespace katolab {

struct Ball {
  Vec3 center = Vec3::Zero();
  double r = 0.0;
};

// Kato moduli of the data and the lower-order coefficients, in the plain
// (epsilon -> 0) form. Empty profiles stand for zero data.
struct DataModuli {
  KatoProfile f, g2, b2, d;
  double sup_u = 0.0;

  // Linear interpolation through (0, 0) and the samples, constant beyond the
  // last sample.
  static double at(const KatoProfile& p, double r);
  double k(double r) const;   // theta(|f|, r) + theta(|g|^2, r)^{1/2}
  double k1(double r) const;  // theta(|f|, r) + sup|u| theta(|d|, r)
  double k2(double r) const;  // theta(|g|^2, r)^{1/2} + sup|u| theta(|b|^2, r)^{1/2}
  double k3(double r) const;  // theta(|b|^2, r)^{1/2} + theta(|d|, r)
  double ktilde(double r) const { return k1(r) + k2(r); }
};

// Profiles on the given radii. Zero fields are skipped.
DataModuli data_moduli(const Mesh& m, const CoefficientSet& k, const ElementField* f, const VectorElementField* g,
                       const NodalField* u, const std::vector<double>& radii, const CenterSet& centers = {});

struct ConditionReport {
  bool bd_sign = false;     // div b + d <= 0 on hats
  bool bd_reverse = false;  // div b + d >= 0
  bool cd_sign = false;     // -div c + d <= 0
  bool cd_reverse = false;
  double dini_bc2 = 0.0;  // Dini constants (q = 2), +inf when divergent
  double dini_b2 = 0.0;
  double dini_d = 0.0;
  double c_lorentz = 0.0;  // ||c||_{L^{3,3}}
  bool N = false, P = false, D = false;
};

// Coarser center lattice used for the moduli inside the checks.
inline const CenterSet kCheckCenters = [] {
  CenterSet c;
  c.max_centers = 64;
  return c;
}();

// Conditions (N), (P) and (D) for the coefficient set. The profiles are taken
// on a geometric grid from 2h up to the largest given radius (half the box
// diameter when none are given), ratio at most 2.
ConditionReport check_conditions(const Mesh& m, const CoefficientSet& k, const std::vector<double>& radii = {},
                                 const CenterSet& centers = kCheckCenters);

struct EstimateReport {
  std::string name;
  double measured_constant = 0.0;  // max over the scan
  std::vector<double> scale_grid;
  std::vector<double> scale_scan;
  std::vector<double> refinement_scan;
  bool inconclusive = false;
  nlohmann::json details = nlohmann::json::object();

  double scale_drift() const;
  double refinement_drift() const;
};

// max / min of positive values; 1 for fewer than two values, +inf if the
// smallest value is not positive.
double drift(const std::vector<double>& v);

// Refinement scan from the same check run on a mesh and its refinement: the
// measured constants of both.
EstimateReport with_refinement(EstimateReport coarse, const EstimateReport& fine);

// P1 cutoff equal to 1 on B_{sigma r}, 0 outside B_r, linear in |x - c|.
NodalField cutoff(const Mesh& m, const Ball& b, double sigma = 0.5);

enum class SolutionKind { Solution, Subsolution, Supersolution };

// Hat-residual classification of u for L u = f - div g with the shared
// tolerance policy.
struct SolutionStatus {
  bool sub = false;
  bool super = false;
  double max_residual = 0.0;  // relative to the hat scale
};
SolutionStatus classify_solution(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                 const VectorElementField* g);

struct CaccioppoliOptions {
  // Balls centered on the boundary, u vanishing on the boundary inside the
  // ball; otherwise every ball must lie in the domain.
  bool boundary = false;
};

// ||eta grad u||^2 / (||u grad eta||^2 + ||f eta||_{L^{6/5}}^2 + ||g eta||^2)
// per ball. u must be a solution or a nonnegative subsolution.
EstimateReport caccioppoli_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                 const VectorElementField* g, const std::vector<Ball>& balls,
                                 const CaccioppoliOptions& opt = {});

enum class RefinedCase {
  Subsolution,     // div b + d <= 0, subsolution, beta > 0, ubar = u+ + k
  Supersolution,   // div b + d <= 0, supersolution, beta > 0, ubar = u- + k
  NonnegativeSuper // div b + d >= 0, nonnegative supersolution, beta < 0, ubar = u + k
};

struct RefinedConstants {
  double C0 = 1.0, C1 = 1.0, C2 = 1.0;
};
// Constants of the refined inequality for the given beta, with kappa the
// number of splitting pieces.
RefinedConstants refined_constants(double beta, int kappa = 1);

// ||eta ubar^{(beta-1)/2} grad u||^2 against
// C0 ||ubar^{(beta+1)/2} grad eta||^2 + int (C1 |f|/ubar + C2 |g|^2/ubar^2) ubar^{beta+1} eta^2
// on interior balls.
EstimateReport refined_caccioppoli_check(const Mesh& m, const CoefficientSet& k, const NodalField& u,
                                         const ElementField* f, const VectorElementField* g,
                                         const std::vector<Ball>& balls, double beta, RefinedCase c,
                                         double shift);

struct BoundednessOptions {
  std::vector<double> sigmas{0.25, 0.5};
  std::vector<double> ps{1.0, 2.0};
  // Throw if neither (N) nor (D) holds. Counterexamples switch this off.
  bool require_conditions = true;
  std::optional<DataModuli> moduli;
};

// sup_{B_{sigma r}} u+ / ((1 - sigma)^{-n/p} ((avg_{B_r} (u+)^p)^{1/p} + k(r))),
// maximized over sigma and p, per interior ball. u must be a subsolution.
EstimateReport local_boundedness_check(const Mesh& m, const CoefficientSet& k, const NodalField& u,
                                       const ElementField* f, const VectorElementField* g,
                                       const std::vector<Ball>& balls, const BoundednessOptions& opt = {});

struct HarnackOptions {
  std::vector<std::pair<double, double>> sp{{0.5, 1.0}, {1.0, 2.0}};
  bool require_conditions = true;
  std::optional<DataModuli> moduli;
};

// (avg_{B_r} u^p)^{1/p} / (inf_{B_{r/2}} u + k(r/2)), maximized over (s, p),
// per interior ball. The reverse Hoelder ratio
// (avg_{B_{r/2}} u^p)^{1/p} / ((avg_{B_r} u^s)^{1/s} + k(r)) goes to details.
// u must be a nonnegative supersolution.
EstimateReport weak_harnack_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                  const VectorElementField* g, const std::vector<Ball>& balls,
                                  const HarnackOptions& opt = {});

struct HolderOptions {
  int levels = 5;
  std::optional<DataModuli> moduli;
};

// Oscillation of u over B_{2^{-m} r}(x), m = 0..levels-1 (levels below 2h
// are dropped). scale_scan holds the oscillations, measured_constant the
// fitted exponent alpha capped at 1 (the raw slope is in details), along
// with the per-level ratios and the ktilde
// correction. Inconclusive when an oscillation is below the noise floor.
EstimateReport holder_decay_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const Vec3& x, double r,
                                  const ElementField* f = nullptr, const VectorElementField* g = nullptr,
                                  const HolderOptions& opt = {});

struct OscillationOptions {
  CondenserOptions condenser;
  std::optional<DataModuli> moduli;
};

// For each rho in rhos (each <= r/2): osc_{B_rho} u over the closure,
// osc_{boundary in B_rho} phi and the Wiener integral from 2 rho to r. Reports
// the constant C' each rho requires in
//   osc u <= (1 + k3(r)) exp(-W / C') (osc_{B_r} u + k(r)) + osc phi
// (0 when the boundary data alone bound the oscillation, +inf when no C'
// works), the decay factors osc(rho/2) / osc(rho), and whether a single C'
// serves all rho within x2.
EstimateReport boundary_oscillation_check(const DomainGeometry& omega, const Mesh& m, const CoefficientSet& k,
                                          const NodalField& u, const NodalField& phi, const Vec3& xi,
                                          const std::vector<double>& rhos, double r,
                                          const OscillationOptions& opt = {});

// Closed-form counterexamples on B(0, 1/e).
struct ExampleC1Report {
  double delta = 0.0;
  double h = 0.0;
  std::vector<double> theta_radii;
  std::vector<double> theta_b2;  // theta(|b|^2, r), sup over centers
  bool theta_to_zero = false;    // decreasing toward r -> 0 and below 1/2 its largest value
  bool dini_divergent = false;
  std::vector<double> shell_radii;  // r_k; shells r_k / 2 <= |x| <= r_k
  std::vector<double> shell_sup;
  double growth_exponent = 0.0;  // slope of log sup vs log |ln(r_k / 2)|
  // Shell sups strictly increasing toward the center with a positive growth
  // exponent: the witness that u is unbounded near 0.
  bool sup_unbounded = false;
  double center_value = 0.0;  // discrete u at the center node, grows like |ln h|^delta
  double max_solution_error = 0.0;  // relative to |ln|x||^delta at nodes with |x| >= 4h
  EstimateReport boundedness;
};

// -div(grad u + b u) = 0 with b = delta x / (|x|^2 |ln|x||); u = |ln|x||^delta.
ExampleC1Report example_c1(double delta, double h);

constexpr double kResidualExclusion = 0.125;

struct ExampleDReport {
  std::vector<double> h;
  // Relative hat residual of the interpolant of |ln|x|| on hats centered at
  // |x| >= kResidualExclusion; residual_near covers every hat not touching
  // the origin.
  std::vector<double> residual;
  std::vector<double> residual_near;
  double residual_reduction = 0.0;  // residual[0] / residual.back()
  bool d_nonnegative = false;
  bool kato_divergent = false;
  std::vector<double> kato_partial;
  std::vector<double> shell_radii;
  std::vector<double> shell_sup;  // on the finest mesh
  double growth_exponent = 0.0;   // slope of log sup vs log |ln(r_k / 2)|, 1 expected
};

// -Laplace u - d u = 0 with d = 1 / (|x|^2 |ln|x||); u = |ln|x||.
ExampleDReport example_d(const std::vector<double>& hs);

nlohmann::json estimate_report_to_json(const EstimateReport& r);
nlohmann::json example_c1_to_json(const ExampleC1Report& r);
nlohmann::json example_d_to_json(const ExampleDReport& r);

}  // namespace katolab
