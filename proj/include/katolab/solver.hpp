#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"
#include "katolab/sampled.hpp"

namespace katolab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class NegativityMode { BD, CD, None };

// Elementwise constant coefficients of
//   L u = -div(A grad u + b u) - c . grad u - d u.
struct CoefficientSet {
  std::vector<Mat3> A;
  std::vector<Vec3> b, c;
  std::vector<double> d;
  double lambda = 1.0;
  double Lambda = 1.0;
  NegativityMode mode = NegativityMode::BD;
};

struct CoefficientFunctions {
  std::function<Mat3(const Vec3&)> A;
  std::function<Vec3(const Vec3&)> b, c;
  std::function<double(const Vec3&)> d;
};

// -Laplacian.
CoefficientSet laplace_coefficients(const Mesh& m, NegativityMode mode = NegativityMode::BD);
// Element means over the degree 5 rule; missing functions are zero, a
// missing A is the identity.
CoefficientSet sample_coefficients(const Mesh& m, const CoefficientFunctions& f, double lambda, double Lambda,
                                   NegativityMode mode);

struct CoefficientCheck {
  double ellipticity_margin = 0.0;  // min over elements and probes of xi.A xi - lambda |xi|^2
  double boundedness_margin = 0.0;  // min of Lambda - |A xi . eta|
  double bd_functional = 0.0;       // max over interior hats of int (d phi - b . grad phi), relative
  double cd_functional = 0.0;       // max over interior hats of int (d phi + c . grad phi), relative
  bool bd_holds = false;
  bool cd_holds = false;
};

// Hat values of phi -> int (d phi - b . grad phi) (bd) or int (d phi + c . grad phi)
// (cd); boundary entries are zero.
Eigen::VectorXd negativity_functional(const Mesh& m, const CoefficientSet& k, NegativityMode mode);

// Discrete hat-function version of the negativity conditions plus sampled
// ellipticity. Throws PreconditionError naming the element on non-finite
// coefficients.
CoefficientCheck check_coefficients(const Mesh& m, const CoefficientSet& k, double tol = 1e-10);
// Throws if the ellipticity bounds or the declared negativity mode fail.
void validate_coefficients(const Mesh& m, const CoefficientSet& k);

// Matrix of L(u, phi) over all nodes: row i is the test hat, column j the
// trial hat. adjoint = true assembles L^t independently.
SparseMatrix assemble(const Mesh& m, const CoefficientSet& k, bool adjoint = false);
SparseMatrix assemble_mass(const Mesh& m);

// Load vector int f phi_i + g . grad phi_i for elementwise f, g.
Eigen::VectorXd load_vector(const Mesh& m, const ElementField* f, const VectorElementField* g);

struct HatResiduals {
  Eigen::VectorXd residual;  // L(u, phi_i) - F(phi_i), zero on boundary nodes
  double scale = 0.0;        // max_i sum_j |K_ij u_j| + |F_i|
};
HatResiduals hat_residuals(const Mesh& m, const SparseMatrix& K, const NodalField& u, const Eigen::VectorXd& F);

// Shared tolerance policy for (sub/super)solution tests.
constexpr double kResidualTolerance = 1e-8;

struct SolveOptions {
  double tol = 1e-10;
  bool adjoint = false;
  int max_shifts = 6;
  int max_fixed_point = 200;
  // Skip the direct solve and go straight to the shifted iteration.
  bool force_shift = false;
  std::optional<NodalField> initial_guess;
  bool check_negativity = true;
};

struct SolveReport {
  NodalField solution;
  double residual = 0.0;
  double y12_norm = 0.0;
  double data_norm = 0.0;
  double ratio = 0.0;
  double shift_sigma = 0.0;
  int iterations = 0;
  std::string method;
  std::vector<double> residual_history;
};

// Solves L u = f - div g with u = boundary_data on the boundary nodes.
SolveReport solve_dirichlet(const Mesh& m, const CoefficientSet& k, const ElementField* f,
                            const VectorElementField* g, const NodalField& boundary_data,
                            const SolveOptions& opt = {});

// Sparse solve K_II x = r over interior nodes with the same fallback chain.
Eigen::VectorXd solve_interior(const SparseMatrix& K_II, const Eigen::VectorXd& rhs, double tol,
                               const Eigen::VectorXd* guess, std::string* method, int* iterations);

// Violation of the weak maximum principle for a discrete subsolution of
// L u = 0: max(0, max u - max_boundary u+) in bd mode, max(0, max u) in cd
// mode (where u+ must vanish on the boundary).
double check_max_principle(const Mesh& m, const CoefficientSet& k, const NodalField& u);

// v <= u + 1e-8 scale node-wise for a supersolution u and subsolution v of
// the same data with (v - u)+ vanishing on the boundary.
bool comparison(const Mesh& m, const CoefficientSet& k, const NodalField& u, const NodalField& v,
                const ElementField* f = nullptr, const VectorElementField* g = nullptr);

nlohmann::json solve_report_to_json(const SolveReport& r);

}  // namespace katolab
