#include "katolab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "katolab/errors.hpp"
#include "katolab/parallel.hpp"
#include "katolab/quadrature.hpp"

namespace katolab {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

std::vector<Vec3> probe_directions() {
  std::vector<Vec3> out;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k)
        if (i || j || k) out.push_back(Vec3(i, j, k).normalized());
  return out;
}

void require_sizes(const Mesh& m, const CoefficientSet& k) {
  const std::size_t ne = m.elements.size();
  if (k.A.size() != ne || k.b.size() != ne || k.c.size() != ne || k.d.size() != ne)
    throw ConfigError("coefficient fields do not match the element count");
}

void require_finite(const CoefficientSet& k) {
  for (std::size_t e = 0; e < k.A.size(); ++e) {
    if (!k.A[e].allFinite() || !k.b[e].allFinite() || !k.c[e].allFinite() || !std::isfinite(k.d[e])) {
      std::ostringstream msg;
      msg << "non-finite coefficient on element " << e;
      throw PreconditionError(msg.str());
    }
  }
}

std::vector<int> interior_nodes(const Mesh& m) {
  std::vector<int> idx;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!m.is_boundary[i]) idx.push_back(i);
  return idx;
}

// Splits K into the interior block and the interior-boundary coupling.
void partition(const SparseMatrix& K, const std::vector<int>& local, ColMatrix& KII, ColMatrix& KIB,
               int n_interior, int n_boundary, const std::vector<int>& boundary_local) {
  std::vector<Triplet> ti, tb;
  for (int r = 0; r < K.outerSize(); ++r) {
    const int lr = local[r];
    if (lr < 0) continue;
    for (SparseMatrix::InnerIterator it(K, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (local[c] >= 0)
        ti.emplace_back(lr, local[c], it.value());
      else
        tb.emplace_back(lr, boundary_local[c], it.value());
    }
  }
  KII.resize(n_interior, n_interior);
  KII.setFromTriplets(ti.begin(), ti.end());
  KIB.resize(n_interior, n_boundary);
  KIB.setFromTriplets(tb.begin(), tb.end());
}

double relative_residual(const ColMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double r = (A * x - b).norm();
  return nb > 0.0 ? r / nb : r;
}

// Quantile of |b + c|^2 at the given fraction of the volume.
double drift_tail(const Mesh& m, const CoefficientSet& k, double fraction) {
  std::vector<std::pair<double, double>> v(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) v[e] = {(k.b[e] + k.c[e]).squaredNorm(), m.volume[e]};
  std::sort(v.begin(), v.end());
  const double total = m.total_volume();
  double acc = 0.0;
  for (const auto& [z, w] : v) {
    acc += w;
    if (acc >= fraction * total) return z;
  }
  return v.empty() ? 0.0 : v.back().first;
}

}  // namespace

CoefficientSet laplace_coefficients(const Mesh& m, NegativityMode mode) {
  CoefficientSet k;
  const int ne = m.num_elements();
  k.A.assign(ne, Mat3::Identity());
  k.b.assign(ne, Vec3::Zero());
  k.c.assign(ne, Vec3::Zero());
  k.d.assign(ne, 0.0);
  k.lambda = 1.0;
  k.Lambda = 1.0;
  k.mode = mode;
  return k;
}

CoefficientSet sample_coefficients(const Mesh& m, const CoefficientFunctions& f, double lambda, double Lambda,
                                   NegativityMode mode) {
  CoefficientSet k = laplace_coefficients(m, mode);
  k.lambda = lambda;
  k.Lambda = Lambda;
  const TetRule& rule = tet_rule_degree5();
  parallel_for(m.elements.size(), [&](std::size_t e) {
    const auto& t = m.elements[e];
    Mat3 A = Mat3::Zero();
    Vec3 b = Vec3::Zero(), c = Vec3::Zero();
    double d = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const Vec3 x = l[0] * m.nodes[t[0]] + l[1] * m.nodes[t[1]] + l[2] * m.nodes[t[2]] + l[3] * m.nodes[t[3]];
      const double w = rule.weights[q];
      A += w * (f.A ? f.A(x) : Mat3::Identity());
      if (f.b) b += w * f.b(x);
      if (f.c) c += w * f.c(x);
      if (f.d) d += w * f.d(x);
    }
    k.A[e] = A;
    k.b[e] = b;
    k.c[e] = c;
    k.d[e] = d;
  });
  require_finite(k);
  return k;
}

Eigen::VectorXd negativity_functional(const Mesh& m, const CoefficientSet& k, NegativityMode mode) {
  require_sizes(m, k);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.num_nodes());
  if (mode == NegativityMode::None) return out;
  const double sign = mode == NegativityMode::BD ? -1.0 : 1.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto G = m.barycentric_gradients(e);
    const double V = m.volume[e];
    const Vec3& w = mode == NegativityMode::BD ? k.b[e] : k.c[e];
    for (int a = 0; a < 4; ++a) {
      const int i = m.elements[e][a];
      if (!m.is_boundary[i]) out[i] += k.d[e] * V / 4.0 + sign * V * w.dot(G.row(a).transpose());
    }
  }
  return out;
}

CoefficientCheck check_coefficients(const Mesh& m, const CoefficientSet& k, double tol) {
  require_sizes(m, k);
  require_finite(k);
  CoefficientCheck out;
  const auto probes = probe_directions();
  out.ellipticity_margin = INFINITY;
  out.boundedness_margin = INFINITY;
  for (int e = 0; e < m.num_elements(); ++e) {
    for (const Vec3& xi : probes) {
      const Vec3 Axi = k.A[e] * xi;
      out.ellipticity_margin = std::min(out.ellipticity_margin, xi.dot(Axi) - k.lambda);
      for (const Vec3& eta : probes)
        out.boundedness_margin = std::min(out.boundedness_margin, k.Lambda - std::abs(Axi.dot(eta)));
    }
  }
  Eigen::VectorXd bd = Eigen::VectorXd::Zero(m.num_nodes()), cd = bd, bd_scale = bd, cd_scale = bd;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto G = m.barycentric_gradients(e);
    const double V = m.volume[e];
    for (int a = 0; a < 4; ++a) {
      const int i = m.elements[e][a];
      const Vec3 g = G.row(a).transpose();
      const double dphi = k.d[e] * V / 4.0;
      bd[i] += dphi - V * k.b[e].dot(g);
      cd[i] += dphi + V * k.c[e].dot(g);
      bd_scale[i] += std::abs(dphi) + V * std::abs(k.b[e].dot(g));
      cd_scale[i] += std::abs(dphi) + V * std::abs(k.c[e].dot(g));
    }
  }
  out.bd_functional = -INFINITY;
  out.cd_functional = -INFINITY;
  out.bd_holds = out.cd_holds = true;
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_boundary[i]) continue;
    const double rb = bd_scale[i] > 0.0 ? bd[i] / bd_scale[i] : 0.0;
    const double rc = cd_scale[i] > 0.0 ? cd[i] / cd_scale[i] : 0.0;
    out.bd_functional = std::max(out.bd_functional, rb);
    out.cd_functional = std::max(out.cd_functional, rc);
    if (rb > tol) out.bd_holds = false;
    if (rc > tol) out.cd_holds = false;
  }
  if (!std::isfinite(out.bd_functional)) out.bd_functional = 0.0;
  if (!std::isfinite(out.cd_functional)) out.cd_functional = 0.0;
  return out;
}

void validate_coefficients(const Mesh& m, const CoefficientSet& k) {
  const CoefficientCheck c = check_coefficients(m, k);
  const double slack = 1e-12 * std::max(1.0, k.Lambda);
  if (!(k.lambda > 0.0) || !(k.Lambda >= k.lambda)) throw ConfigError("ellipticity bounds need 0 < lambda <= Lambda");
  if (c.ellipticity_margin < -slack) throw ConfigError("coefficient matrix violates the lower ellipticity bound");
  if (c.boundedness_margin < -slack) throw ConfigError("coefficient matrix violates the upper bound Lambda");
  if (k.mode == NegativityMode::BD && !c.bd_holds) {
    std::ostringstream msg;
    msg << "bd negativity fails on a hat function (relative value " << c.bd_functional << ")";
    throw PreconditionError(msg.str());
  }
  if (k.mode == NegativityMode::CD && !c.cd_holds) {
    std::ostringstream msg;
    msg << "cd negativity fails on a hat function (relative value " << c.cd_functional << ")";
    throw PreconditionError(msg.str());
  }
}

SparseMatrix assemble(const Mesh& m, const CoefficientSet& k, bool adjoint) {
  require_sizes(m, k);
  require_finite(k);
  const int ne = m.num_elements();
  std::vector<Eigen::Matrix4d> local(ne);
  parallel_for(ne, [&](std::size_t e) {
    const auto G = m.barycentric_gradients(e);
    const double V = m.volume[e];
    const Mat3 A = adjoint ? Mat3(k.A[e].transpose()) : k.A[e];
    Eigen::Matrix4d K;
    for (int i = 0; i < 4; ++i) {
      const Vec3 gi = G.row(i).transpose();
      for (int j = 0; j < 4; ++j) {
        const Vec3 gj = G.row(j).transpose();
        const double mass = k.d[e] * (i == j ? 2.0 : 1.0) / 20.0;
        double v = (A * gj).dot(gi) - mass;
        if (adjoint)
          v += -k.c[e].dot(gi) / 4.0 + k.b[e].dot(gj) / 4.0;
        else
          v += k.b[e].dot(gi) / 4.0 - k.c[e].dot(gj) / 4.0;
        K(i, j) = V * v;
      }
    }
    local[e] = K;
  });
  std::vector<Triplet> trip;
  trip.reserve(16 * static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.elements[e];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) trip.emplace_back(t[i], t[j], local[e](i, j));
  }
  SparseMatrix K(m.num_nodes(), m.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMatrix assemble_mass(const Mesh& m) {
  std::vector<Triplet> trip;
  trip.reserve(16 * m.elements.size());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.elements[e];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) trip.emplace_back(t[i], t[j], m.volume[e] * (i == j ? 2.0 : 1.0) / 20.0);
  }
  SparseMatrix M(m.num_nodes(), m.num_nodes());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd load_vector(const Mesh& m, const ElementField* f, const VectorElementField* g) {
  if (f && f->size() != m.elements.size()) throw ConfigError("f does not match the element count");
  if (g && g->size() != m.elements.size()) throw ConfigError("g does not match the element count");
  Eigen::VectorXd F = Eigen::VectorXd::Zero(m.num_nodes());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& t = m.elements[e];
    const double V = m.volume[e];
    if (f) {
      if (!std::isfinite((*f)[e])) throw PreconditionError("non-finite f on element " + std::to_string(e));
      for (int a = 0; a < 4; ++a) F[t[a]] += (*f)[e] * V / 4.0;
    }
    if (g) {
      if (!(*g)[e].allFinite()) throw PreconditionError("non-finite g on element " + std::to_string(e));
      const auto G = m.barycentric_gradients(e);
      for (int a = 0; a < 4; ++a) F[t[a]] += V * (*g)[e].dot(G.row(a).transpose());
    }
  }
  return F;
}

HatResiduals hat_residuals(const Mesh& m, const SparseMatrix& K, const NodalField& u, const Eigen::VectorXd& F) {
  HatResiduals out;
  out.residual = K * u - F;
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_boundary[i]) {
      out.residual[i] = 0.0;
      continue;
    }
    double s = std::abs(F[i]);
    for (SparseMatrix::InnerIterator it(K, i); it; ++it) s += std::abs(it.value() * u[it.col()]);
    out.scale = std::max(out.scale, s);
  }
  return out;
}

Eigen::VectorXd solve_interior(const SparseMatrix& K_II, const Eigen::VectorXd& rhs, double tol,
                               const Eigen::VectorXd* guess, std::string* method, int* iterations) {
  const ColMatrix A = K_II;
  if (rhs.size() == 0) return rhs;
  Eigen::BiCGSTAB<ColMatrix, Eigen::DiagonalPreconditioner<double>> it;
  it.setTolerance(0.1 * tol);
  it.setMaxIterations(std::max<Eigen::Index>(1000, 4 * rhs.size()));
  it.compute(A);
  if (it.info() == Eigen::Success) {
    Eigen::VectorXd x = guess ? Eigen::VectorXd(it.solveWithGuess(rhs, *guess)) : Eigen::VectorXd(it.solve(rhs));
    if (x.allFinite() && relative_residual(A, x, rhs) <= tol) {
      if (method) *method = "bicgstab";
      if (iterations) *iterations = static_cast<int>(it.iterations());
      return x;
    }
  }
  Eigen::SparseLU<ColMatrix> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw ConvergenceError("sparse LU factorization failed");
  Eigen::VectorXd x = lu.solve(rhs);
  // One step of iterative refinement.
  x += lu.solve(rhs - A * x);
  const double r = relative_residual(A, x, rhs);
  if (!x.allFinite() || r > tol) {
    std::ostringstream msg;
    msg << "direct solve stagnated at relative residual " << r;
    throw ConvergenceError(msg.str());
  }
  if (method) *method = "sparse_lu";
  if (iterations) *iterations = 1;
  return x;
}

SolveReport solve_dirichlet(const Mesh& m, const CoefficientSet& k, const ElementField* f,
                            const VectorElementField* g, const NodalField& boundary_data, const SolveOptions& opt) {
  if (k.mode == NegativityMode::None)
    throw PreconditionError("the Dirichlet solver needs the bd or cd negativity condition");
  if (boundary_data.size() != m.num_nodes()) throw ConfigError("boundary data does not match the node count");
  if (!(opt.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (opt.check_negativity) validate_coefficients(m, k);

  const SparseMatrix K = assemble(m, k, opt.adjoint);
  const Eigen::VectorXd F = load_vector(m, f, g);

  const std::vector<int> inner = interior_nodes(m);
  const int ni = static_cast<int>(inner.size());
  std::vector<int> local(m.num_nodes(), -1), blocal(m.num_nodes(), -1);
  for (int a = 0; a < ni; ++a) local[inner[a]] = a;
  int nb = 0;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (local[i] < 0) blocal[i] = nb++;
  Eigen::VectorXd uB(nb);
  for (int i = 0; i < m.num_nodes(); ++i)
    if (blocal[i] >= 0) uB[blocal[i]] = boundary_data[i];

  ColMatrix KII, KIB;
  partition(K, local, KII, KIB, ni, nb, blocal);
  Eigen::VectorXd rhs(ni);
  for (int a = 0; a < ni; ++a) rhs[a] = F[inner[a]];
  if (nb > 0) rhs -= KIB * uB;

  Eigen::VectorXd guess;
  if (opt.initial_guess) {
    if (opt.initial_guess->size() != m.num_nodes()) throw ConfigError("initial guess does not match the node count");
    guess.resize(ni);
    for (int a = 0; a < ni; ++a) guess[a] = (*opt.initial_guess)[inner[a]];
  }

  SolveReport rep;
  Eigen::VectorXd x;
  bool solved = false;
  if (!opt.force_shift) {
    try {
      x = solve_interior(KII, rhs, opt.tol, opt.initial_guess ? &guess : nullptr, &rep.method, &rep.iterations);
      solved = true;
    } catch (const ConvergenceError&) {
    }
  }

  if (!solved) {
    // Shifted operator L_sigma = L + sigma J with the fixed-point correction
    // u <- L_sigma^{-1}(F + sigma J u).
    const SparseMatrix Mfull = assemble_mass(m);
    ColMatrix MII, MIB;
    partition(Mfull, local, MII, MIB, ni, nb, blocal);
    const double zeta2 = drift_tail(m, k, 0.99);
    const double diam = m.box.diameter();
    double sigma = std::max(2.0 * zeta2 / k.lambda, k.lambda / (diam * diam));
    Eigen::VectorXd u = opt.initial_guess ? guess : Eigen::VectorXd::Zero(ni);
    for (int shift = 0; shift < opt.max_shifts && !solved; ++shift, sigma *= 2.0) {
      const ColMatrix Ls = KII + sigma * MII;
      Eigen::SparseLU<ColMatrix> lu;
      lu.compute(Ls);
      if (lu.info() != Eigen::Success) continue;
      Eigen::VectorXd v = u;
      for (int it = 0; it < opt.max_fixed_point; ++it) {
        Eigen::VectorXd next = lu.solve(rhs + sigma * (MII * v));
        const double update = (next - v).norm() / std::max(next.norm(), 1e-300);
        v = std::move(next);
        ++rep.iterations;
        const double r = relative_residual(KII, v, rhs);
        rep.residual_history.push_back(r);
        if (!v.allFinite()) break;
        if (update <= 1e-10 || r <= opt.tol) {
          if (r <= opt.tol) {
            x = v;
            solved = true;
            rep.shift_sigma = sigma;
            rep.method = "shifted_fixed_point";
          }
          break;
        }
      }
    }
    if (!solved) {
      std::ostringstream msg;
      msg << "Dirichlet solve did not converge after " << rep.iterations << " shifted iterations; residual history:";
      const std::size_t n = rep.residual_history.size();
      for (std::size_t i = n > 10 ? n - 10 : 0; i < n; ++i) msg << ' ' << rep.residual_history[i];
      throw ConvergenceError(msg.str());
    }
  }

  rep.residual = relative_residual(KII, x, rhs);
  rep.solution = boundary_data;
  for (int a = 0; a < ni; ++a) rep.solution[inner[a]] = x[a];

  rep.y12_norm = y12_norm(m, rep.solution);
  const SobolevExponents se;
  rep.data_norm = (f ? lp_norm(m, *f, se.two_lower()) : 0.0) + (g ? l2_norm(m, *g) : 0.0);
  if (nb > 0 && uB.cwiseAbs().maxCoeff() > 0.0) {
    // Boundary data enter through their discrete harmonic extension.
    const SparseMatrix S = assemble(m, laplace_coefficients(m));
    ColMatrix SII, SIB;
    partition(S, local, SII, SIB, ni, nb, blocal);
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-10);
    cg.compute(SII);
    const Eigen::VectorXd e = ni > 0 ? Eigen::VectorXd(cg.solve(-(SIB * uB))) : Eigen::VectorXd();
    NodalField ext = boundary_data;
    for (int a = 0; a < ni; ++a) ext[inner[a]] = e[a];
    rep.data_norm += y12_norm(m, ext);
  }
  rep.ratio = rep.data_norm > 0.0 ? rep.y12_norm / rep.data_norm : 0.0;
  return rep;
}

double check_max_principle(const Mesh& m, const CoefficientSet& k, const NodalField& u) {
  if (u.size() != m.num_nodes()) throw ConfigError("field does not match the node count");
  const SparseMatrix K = assemble(m, k);
  const HatResiduals r = hat_residuals(m, K, u, Eigen::VectorXd::Zero(m.num_nodes()));
  Eigen::Index worst = 0;
  const double max_r = r.residual.size() ? r.residual.maxCoeff(&worst) : 0.0;
  if (max_r > kResidualTolerance * r.scale) {
    std::ostringstream msg;
    msg << "field is not a discrete subsolution: hat residual " << max_r << " at node " << worst;
    throw PreconditionError(msg.str());
  }
  const double umax = u.maxCoeff();
  if (k.mode == NegativityMode::CD) return std::max(0.0, umax);
  double bmax = 0.0;
  for (int i : m.boundary_nodes) bmax = std::max(bmax, u[i]);
  return std::max(0.0, umax - bmax);
}

bool comparison(const Mesh& m, const CoefficientSet& k, const NodalField& u, const NodalField& v,
                const ElementField* f, const VectorElementField* g) {
  if (u.size() != m.num_nodes() || v.size() != m.num_nodes()) throw ConfigError("field does not match the node count");
  const SparseMatrix K = assemble(m, k);
  const Eigen::VectorXd F = load_vector(m, f, g);
  const HatResiduals ru = hat_residuals(m, K, u, F);
  const HatResiduals rv = hat_residuals(m, K, v, F);
  Eigen::Index worst = 0;
  if (ru.residual.minCoeff(&worst) < -kResidualTolerance * ru.scale)
    throw PreconditionError("u is not a discrete supersolution at node " + std::to_string(worst));
  if (rv.residual.maxCoeff(&worst) > kResidualTolerance * rv.scale)
    throw PreconditionError("v is not a discrete subsolution at node " + std::to_string(worst));
  const double tol = kResidualTolerance * std::max({u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff(), 1e-300});
  for (int i : m.boundary_nodes)
    if (v[i] - u[i] > tol) throw PreconditionError("(v - u)+ does not vanish at boundary node " + std::to_string(i));
  return ((v - u).array() <= tol).all();
}

nlohmann::json solve_report_to_json(const SolveReport& r) {
  return {{"solution", std::vector<double>(r.solution.data(), r.solution.data() + r.solution.size())},
          {"residual", r.residual},
          {"y12_norm", r.y12_norm},
          {"data_norm", r.data_norm},
          {"ratio", r.ratio},
          {"shift_sigma", r.shift_sigma},
          {"iterations", r.iterations},
          {"method", r.method},
          {"residual_history", r.residual_history}};
}

}  // namespace katolab
