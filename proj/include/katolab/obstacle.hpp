#pragma once

#include <optional>
#include <vector>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"
#include "katolab/solver.hpp"

namespace katolab {

// Find u >= psi with u = phi on the boundary and
//   L(u, v - u) >= F(v - u) for every admissible v.
struct ObstacleProblem {
  CoefficientSet coeffs;
  NodalField psi;
  NodalField phi;
  std::optional<ElementField> f;
  std::optional<VectorElementField> g;
};

struct ObstacleOptions {
  double tol = 1e-8;
  // Over-relaxation; 0 picks 2 / (1 + sin(pi h / L)) with L the largest box side.
  double omega = 0.0;
  int max_sweeps = 20000;
  bool reverse_order = false;
  // Sweeps between divergence checks of the complementarity residual.
  int divergence_window = 50;
};

struct ComplementarityReport {
  // max over interior nodes of |min(u - psi, rho)|, (psi - u)+ and (-rho)+,
  // with rho_i = (K u - F)_i / K_ii the hat residual in units of u.
  double max_violation = 0.0;
  double min_residual = 0.0;
  std::vector<char> active_set;
  int active_count = 0;
};

struct ObstacleResult {
  NodalField solution;
  ComplementarityReport report;
  int sweeps = 0;
  double omega = 0.0;
  std::vector<double> history;
};

// Projected SOR on the zero-trace shift u = u0 + phi.
ObstacleResult solve_obstacle(const Mesh& m, const ObstacleProblem& p, const ObstacleOptions& opt = {});

ComplementarityReport check_complementarity(const Mesh& m, const ObstacleProblem& p, const NodalField& u,
                                            double tol = 1e-8);

// Most negative scaled hat residual of L(min(u, v)) - F. Both inputs must be
// discrete supersolutions within the shared residual tolerance.
double min_supersolution_check(const Mesh& m, const ObstacleProblem& p, const NodalField& u, const NodalField& v);

nlohmann::json obstacle_result_to_json(const ObstacleResult& r);

}  // namespace katolab
