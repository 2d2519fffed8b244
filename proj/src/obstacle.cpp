#include "katolab/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "katolab/errors.hpp"

namespace katolab {

namespace {

void validate(const Mesh& m, const ObstacleProblem& p) {
  if (p.psi.size() != m.num_nodes() || p.phi.size() != m.num_nodes())
    throw ConfigError("obstacle and boundary data must be nodal fields on the mesh");
  if (p.coeffs.mode == NegativityMode::None) throw PreconditionError("the obstacle problem needs bd or cd negativity");
  for (int i : m.boundary_nodes)
    if (p.phi[i] < p.psi[i] - 1e-12 * std::max(1.0, std::abs(p.psi[i])))
      throw PreconditionError("boundary data lie below the obstacle at node " + std::to_string(i));
}

Eigen::VectorXd load(const Mesh& m, const ObstacleProblem& p) {
  return load_vector(m, p.f ? &*p.f : nullptr, p.g ? &*p.g : nullptr);
}

ComplementarityReport complementarity(const Mesh& m, const SparseMatrix& K, const Eigen::VectorXd& F,
                                      const NodalField& psi, const NodalField& u, double tol) {
  ComplementarityReport r;
  r.active_set.assign(m.num_nodes(), 0);
  r.min_residual = INFINITY;
  const Eigen::VectorXd res = K * u - F;
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_boundary[i]) continue;
    const double rho = res[i] / K.coeff(i, i);
    const double gap = u[i] - psi[i];
    r.max_violation = std::max({r.max_violation, std::abs(std::min(gap, rho)), -gap, -rho});
    r.min_residual = std::min(r.min_residual, rho);
    if (gap <= tol) {
      r.active_set[i] = 1;
      ++r.active_count;
    }
  }
  if (!std::isfinite(r.min_residual)) r.min_residual = 0.0;
  return r;
}

}  // namespace

ComplementarityReport check_complementarity(const Mesh& m, const ObstacleProblem& p, const NodalField& u, double tol) {
  validate(m, p);
  if (u.size() != m.num_nodes()) throw ConfigError("field does not match the node count");
  return complementarity(m, assemble(m, p.coeffs), load(m, p), p.psi, u, tol);
}

ObstacleResult solve_obstacle(const Mesh& m, const ObstacleProblem& p, const ObstacleOptions& opt) {
  validate(m, p);
  validate_coefficients(m, p.coeffs);
  const SparseMatrix K = assemble(m, p.coeffs);
  const Eigen::VectorXd F = load(m, p);

  // Zero-trace shift: u0 = u - phi, obstacle psi - phi, load F - K phi.
  const Eigen::VectorXd F0 = F - K * p.phi;
  const NodalField psi0 = p.psi - p.phi;

  std::vector<int> order;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.is_boundary[i]) order.push_back(i);
  if (opt.reverse_order) std::reverse(order.begin(), order.end());
  Eigen::VectorXd diag(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) {
    diag[i] = K.coeff(i, i);
    if (!m.is_boundary[i] && !(diag[i] > 0.0))
      throw PreconditionError("nonpositive diagonal entry at node " + std::to_string(i));
  }

  ObstacleResult out;
  double omega = opt.omega;
  if (omega <= 0.0) {
    const double L = m.box.extent().maxCoeff();
    omega = 2.0 / (1.0 + std::sin(M_PI * m.h / L));
  }
  if (!(omega > 0.0 && omega < 2.0)) throw ConfigError("relaxation parameter must lie in (0, 2)");

  auto run = [&](double w, NodalField& u0) -> bool {
    out.history.clear();
    const int check_every = 10;
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
      for (int i : order) {
        double s = F0[i];
        for (SparseMatrix::InnerIterator it(K, i); it; ++it)
          if (!m.is_boundary[it.col()]) s -= it.value() * u0[it.col()];
        u0[i] = std::max(psi0[i], u0[i] + w * s / diag[i]);
      }
      if (sweep % check_every) continue;
      const double v = complementarity(m, K, F0, psi0, u0, opt.tol).max_violation;
      out.history.push_back(v);
      out.sweeps = sweep;
      if (!std::isfinite(v)) return false;
      if (v <= opt.tol) return true;
      const std::size_t back = static_cast<std::size_t>(std::max(1, opt.divergence_window / check_every));
      if (out.history.size() > back && v > out.history[out.history.size() - 1 - back]) return false;
    }
    return false;
  };

  NodalField u0 = NodalField::Zero(m.num_nodes());
  for (int i : order) u0[i] = std::max(0.0, psi0[i]);
  NodalField start = u0;
  bool ok = run(omega, u0);
  if (!ok && omega != 1.0) {
    // Fall back to plain projected Gauss-Seidel.
    omega = 1.0;
    u0 = start;
    ok = run(omega, u0);
  }
  if (!ok) {
    std::ostringstream msg;
    msg << "projected SOR did not converge after " << out.sweeps << " sweeps; complementarity history:";
    const std::size_t n = out.history.size();
    for (std::size_t i = n > 10 ? n - 10 : 0; i < n; ++i) msg << ' ' << out.history[i];
    throw ConvergenceError(msg.str());
  }
  out.omega = omega;
  out.solution = u0 + p.phi;
  for (int i : m.boundary_nodes) out.solution[i] = p.phi[i];
  out.report = complementarity(m, K, F, p.psi, out.solution, opt.tol);
  return out;
}

double min_supersolution_check(const Mesh& m, const ObstacleProblem& p, const NodalField& u, const NodalField& v) {
  validate(m, p);
  if (u.size() != m.num_nodes() || v.size() != m.num_nodes()) throw ConfigError("field does not match the node count");
  const SparseMatrix K = assemble(m, p.coeffs);
  const Eigen::VectorXd F = load(m, p);
  for (const NodalField* w : {&u, &v}) {
    const HatResiduals r = hat_residuals(m, K, *w, F);
    Eigen::Index worst = 0;
    if (r.residual.minCoeff(&worst) < -kResidualTolerance * r.scale)
      throw PreconditionError("input is not a discrete supersolution at node " + std::to_string(worst));
  }
  const NodalField w = u.cwiseMin(v);
  const Eigen::VectorXd res = K * w - F;
  double worst = INFINITY;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.is_boundary[i]) worst = std::min(worst, res[i] / K.coeff(i, i));
  return std::isfinite(worst) ? worst : 0.0;
}

nlohmann::json obstacle_result_to_json(const ObstacleResult& r) {
  std::vector<int> active;
  for (std::size_t i = 0; i < r.report.active_set.size(); ++i)
    if (r.report.active_set[i]) active.push_back(static_cast<int>(i));
  return {{"solution", std::vector<double>(r.solution.data(), r.solution.data() + r.solution.size())},
          {"active_set", active},
          {"complementarity",
           {{"max_violation", r.report.max_violation},
            {"min_residual", r.report.min_residual},
            {"active_count", r.report.active_count}}},
          {"sweeps", r.sweeps},
          {"omega", r.omega},
          {"history", r.history}};
}

}  // namespace katolab
