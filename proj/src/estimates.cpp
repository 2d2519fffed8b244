#include "katolab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "katolab/errors.hpp"
#include "katolab/lorentz.hpp"
#include "katolab/parallel.hpp"
#include "katolab/quadrature.hpp"
#include "katolab/sampled.hpp"

namespace katolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const SobolevExponents kExp;

std::array<double, 4> vertex_values(const Mesh& m, const NodalField& u, int e) {
  const auto& t = m.elements[e];
  return {u[t[0]], u[t[1]], u[t[2]], u[t[3]]};
}

// int_e F(u, eta) with u, eta linear on the element.
template <class F>
double integrate(const Mesh& m, int e, const std::array<double, 4>& u, const std::array<double, 4>& eta, F&& fn) {
  const TetRule& rule = tet_rule_degree5();
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    double uq = 0.0, eq = 0.0;
    for (int a = 0; a < 4; ++a) {
      uq += l[a] * u[a];
      eq += l[a] * eta[a];
    }
    acc += rule.weights[q] * fn(uq, eq);
  }
  return acc * m.volume[e];
}

std::vector<int> elements_in_ball(const Mesh& m, const Ball& b) {
  std::vector<int> out;
  for (int e : m.elements_near(b.center, b.r))
    if ((m.centroid(e) - b.center).norm() <= b.r) out.push_back(e);
  return out;
}

std::vector<int> nodes_in(const Mesh& m, const Ball& b) { return m.nodes_in_ball(b.center, b.r * (1.0 + 1e-12)); }

// (avg_{B} |F(u)|^p)^{1/p} over elements with centroid in B.
template <class F>
double ball_average(const Mesh& m, const NodalField& u, const Ball& b, double p, F&& transform) {
  double num = 0.0, vol = 0.0;
  const std::array<double, 4> none{};
  for (int e : elements_in_ball(m, b)) {
    num += integrate(m, e, vertex_values(m, u, e), none,
                     [&](double uq, double) { return std::pow(std::abs(transform(uq)), p); });
    vol += m.volume[e];
  }
  if (vol == 0.0) throw ResolutionError("ball contains no element centroid");
  return std::pow(num / vol, 1.0 / p);
}

void require_interior(const Mesh& m, const Ball& b) {
  if (!(b.r > 0.0)) throw ConfigError("ball radius must be positive");
  if (!m.in_domain(b.center) || m.distance_to_boundary(b.center) < b.r * (1.0 - 1e-9))
    throw PreconditionError("ball is not contained in the domain");
}

bool is_zero(const ElementField* f) {
  if (!f) return true;
  for (double v : *f)
    if (v != 0.0) return false;
  return true;
}

bool is_zero(const VectorElementField* g) {
  if (!g) return true;
  for (const Vec3& v : *g)
    if (v.squaredNorm() != 0.0) return false;
  return true;
}

KatoProfile profile_of(const Mesh& m, const ElementField& v, const std::vector<double>& radii, const CenterSet& c) {
  bool zero = true;
  for (double x : v)
    if (x != 0.0) zero = false;
  if (zero) return {};
  KatoOptions opt;
  opt.radii = radii;
  std::sort(opt.radii.begin(), opt.radii.end());
  opt.centers = c;
  return kato_modulus(m, from_values(v), opt);
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return NAN;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double max_of(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, x);
  return out;
}

DataModuli moduli_for(const Mesh& m, const CoefficientSet& k, const ElementField* f, const VectorElementField* g,
                      const NodalField& u, const std::vector<double>& radii, const std::optional<DataModuli>& given,
                      bool need_coefficients) {
  if (given) return *given;
  if (!need_coefficients && is_zero(f) && is_zero(g)) return {};
  CoefficientSet data_only = k;
  if (!need_coefficients) {
    std::fill(data_only.b.begin(), data_only.b.end(), Vec3::Zero());
    std::fill(data_only.d.begin(), data_only.d.end(), 0.0);
  }
  return data_moduli(m, data_only, f, g, &u, radii, kCheckCenters);
}

double rel(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs > 0.0 ? kInf : 0.0;
}

}  // namespace

double DataModuli::at(const KatoProfile& p, double r) {
  if (p.r.empty() || r <= 0.0) return 0.0;
  if (r <= p.r.front()) return p.theta.front() * r / p.r.front();
  for (std::size_t i = 1; i < p.r.size(); ++i)
    if (r <= p.r[i]) {
      const double w = (r - p.r[i - 1]) / (p.r[i] - p.r[i - 1]);
      return (1 - w) * p.theta[i - 1] + w * p.theta[i];
    }
  return p.theta.back();
}

double DataModuli::k(double r) const { return at(f, r) + std::sqrt(at(g2, r)); }
double DataModuli::k1(double r) const { return at(f, r) + sup_u * at(d, r); }
double DataModuli::k2(double r) const { return std::sqrt(at(g2, r)) + sup_u * std::sqrt(at(b2, r)); }
double DataModuli::k3(double r) const { return std::sqrt(at(b2, r)) + at(d, r); }

DataModuli data_moduli(const Mesh& m, const CoefficientSet& k, const ElementField* f, const VectorElementField* g,
                       const NodalField* u, const std::vector<double>& radii, const CenterSet& centers) {
  DataModuli out;
  const int ne = m.num_elements();
  ElementField af(ne, 0.0), ag(ne, 0.0), ab(ne, 0.0), ad(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    if (f) af[e] = std::abs((*f)[e]);
    if (g) ag[e] = (*g)[e].squaredNorm();
    ab[e] = k.b[e].squaredNorm();
    ad[e] = std::abs(k.d[e]);
  }
  out.f = profile_of(m, af, radii, centers);
  out.g2 = profile_of(m, ag, radii, centers);
  out.b2 = profile_of(m, ab, radii, centers);
  out.d = profile_of(m, ad, radii, centers);
  if (u) out.sup_u = u->cwiseAbs().maxCoeff();
  return out;
}

static void negativity_signs(const Mesh& m, const CoefficientSet& k, ConditionReport& out) {
  // int (d phi - b . grad phi) = int (div b + d) phi, and
  // int (d phi + c . grad phi) = int (-div c + d) phi on hats.
  const auto signs = [&](NegativityMode mode, bool& le, bool& ge) {
    const Eigen::VectorXd v = negativity_functional(m, k, mode);
    const double scale = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    le = scale == 0.0 || v.maxCoeff() <= 1e-10 * scale;
    ge = scale == 0.0 || v.minCoeff() >= -1e-10 * scale;
  };
  signs(NegativityMode::BD, out.bd_sign, out.bd_reverse);
  signs(NegativityMode::CD, out.cd_sign, out.cd_reverse);
}

ConditionReport check_conditions(const Mesh& m, const CoefficientSet& k, const std::vector<double>& radii_in,
                                 const CenterSet& centers) {
  ConditionReport out;
  negativity_signs(m, k, out);
  // Geometric grid from 2h to the largest requested radius with at least
  // four points, as the Dini constant needs.
  const double top = radii_in.empty() ? 0.5 * m.box.diameter() : *std::max_element(radii_in.begin(), radii_in.end());
  if (!(top > 0.0)) throw ConfigError("radii must be positive");
  const double lo = std::min(2.0 * m.h, 0.125 * top);
  const int count = std::max(4, 1 + static_cast<int>(std::ceil(std::log2(top / lo))));
  std::vector<double> radii(count);
  for (int i = 0; i < count; ++i) radii[i] = lo * std::pow(top / lo, static_cast<double>(i) / (count - 1));
  const int ne = m.num_elements();
  ElementField bc2(ne), b2(ne), d(ne), c(ne);
  for (int e = 0; e < ne; ++e) {
    bc2[e] = (k.b[e] + k.c[e]).squaredNorm();
    b2[e] = k.b[e].squaredNorm();
    d[e] = std::abs(k.d[e]);
    c[e] = k.c[e].norm();
  }
  const auto dini = [&](const ElementField& v) {
    const KatoProfile p = profile_of(m, v, radii, centers);
    if (p.r.empty()) return 0.0;
    return dini_constant(p, 2.0).constant;
  };
  out.dini_bc2 = dini(bc2);
  out.dini_b2 = dini(b2);
  out.dini_d = dini(d);
  out.c_lorentz = lorentz_norm(m, c, 3.0, 3.0);
  // The first alternative only needs |b + c|^2 in the Kato class, which
  // bounded element data always are.
  out.N = out.bd_sign || (out.cd_sign && std::isfinite(out.dini_bc2));
  out.P = out.bd_reverse || (out.cd_reverse && std::isfinite(out.dini_bc2));
  out.D = std::isfinite(out.dini_b2) && std::isfinite(out.dini_d) && std::isfinite(out.c_lorentz);
  return out;
}

double drift(const std::vector<double>& v) {
  if (v.size() < 2) return 1.0;
  double lo = kInf, hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return lo > 0.0 ? hi / lo : kInf;
}

double EstimateReport::scale_drift() const { return drift(scale_scan); }
double EstimateReport::refinement_drift() const { return drift(refinement_scan); }

EstimateReport with_refinement(EstimateReport coarse, const EstimateReport& fine) {
  coarse.refinement_scan = {coarse.measured_constant, fine.measured_constant};
  coarse.details["refined"] = estimate_report_to_json(fine);
  return coarse;
}

NodalField cutoff(const Mesh& m, const Ball& b, double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw ConfigError("cutoff needs 0 <= sigma < 1");
  NodalField eta(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) {
    const double t = (m.nodes[i] - b.center).norm();
    eta[i] = std::clamp((b.r - t) / ((1.0 - sigma) * b.r), 0.0, 1.0);
  }
  return eta;
}

SolutionStatus classify_solution(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                 const VectorElementField* g) {
  const SparseMatrix K = assemble(m, k);
  const Eigen::VectorXd F = load_vector(m, f, g);
  const HatResiduals r = hat_residuals(m, K, u, F);
  SolutionStatus s;
  const double tol = kResidualTolerance * std::max(r.scale, 1e-300);
  s.sub = r.residual.size() == 0 || r.residual.maxCoeff() <= tol;
  s.super = r.residual.size() == 0 || r.residual.minCoeff() >= -tol;
  s.max_residual = r.scale > 0.0 ? r.residual.cwiseAbs().maxCoeff() / r.scale : 0.0;
  return s;
}

EstimateReport caccioppoli_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                 const VectorElementField* g, const std::vector<Ball>& balls,
                                 const CaccioppoliOptions& opt) {
  const SolutionStatus st = classify_solution(m, k, u, f, g);
  const double umax = std::max(1e-300, u.cwiseAbs().maxCoeff());
  if (!(st.sub && st.super) && !(st.sub && u.minCoeff() >= -1e-8 * umax))
    throw PreconditionError("u is neither a solution nor a nonnegative subsolution");
  EstimateReport rep;
  rep.name = opt.boundary ? "boundary_caccioppoli" : "caccioppoli";
  rep.details["lhs"] = nlohmann::json::array();
  rep.details["rhs"] = nlohmann::json::array();
  for (const Ball& b : balls) {
    if (opt.boundary) {
      if (!(b.r > 0.0)) throw ConfigError("ball radius must be positive");
      for (int i : nodes_in(m, b))
        if (m.is_boundary[i] && std::abs(u[i]) > 1e-12 * umax)
          throw PreconditionError("u does not vanish on the boundary inside the ball");
    } else {
      require_interior(m, b);
    }
    const NodalField eta = cutoff(m, b);
    double lhs = 0.0, r_u = 0.0, r_f = 0.0, r_g = 0.0;
    for (int e : m.elements_near(b.center, b.r)) {
      const auto ev = vertex_values(m, eta, e);
      if (std::max({ev[0], ev[1], ev[2], ev[3]}) == 0.0) continue;
      const auto uv = vertex_values(m, u, e);
      const double eta2 = integrate_linear_power(ev, 2, m.volume[e]);
      lhs += element_gradient(m, u, e).squaredNorm() * eta2;
      r_u += element_gradient(m, eta, e).squaredNorm() * integrate_linear_power(uv, 2, m.volume[e]);
      if (f) {
        const double fe = std::abs((*f)[e]);
        r_f += integrate(m, e, uv, ev, [&](double, double t) { return std::pow(fe * t, kExp.two_lower()); });
      }
      if (g) r_g += (*g)[e].squaredNorm() * eta2;
    }
    const double rhs = r_u + std::pow(r_f, 2.0 / kExp.two_lower()) + r_g;
    rep.scale_grid.push_back(b.r);
    rep.scale_scan.push_back(rel(lhs, rhs));
    rep.details["lhs"].push_back(lhs);
    rep.details["rhs"].push_back(rhs);
  }
  rep.measured_constant = max_of(rep.scale_scan);
  return rep;
}

RefinedConstants refined_constants(double beta, int kappa) {
  if (beta == 0.0 || !std::isfinite(beta)) throw ConfigError("beta must be finite and nonzero");
  RefinedConstants c;
  const double a = std::abs(beta);
  if (beta == -1.0 || a == 1.0) return c;
  if (a > 1.0) {
    c.C0 = 1.0 / ((beta + 1) * (beta + 1));
    c.C1 = 1.0 / std::abs(beta + 1);
    c.C2 = 1.0 + std::pow(std::abs(beta - 1) / std::abs(beta + 1), 2);
  } else {
    c.C0 = std::pow(4.0, kappa) / (a * a);
    c.C1 = c.C2 = std::pow(2.0, kappa) / a;
  }
  return c;
}

EstimateReport refined_caccioppoli_check(const Mesh& m, const CoefficientSet& k, const NodalField& u,
                                         const ElementField* f, const VectorElementField* g,
                                         const std::vector<Ball>& balls, double beta, RefinedCase c, double shift) {
  if (!(shift > 0.0)) throw ConfigError("the shift k must be positive");
  const RefinedConstants C = refined_constants(beta);
  ConditionReport cond;
  negativity_signs(m, k, cond);
  const SolutionStatus st = classify_solution(m, k, u, f, g);
  const double umax = std::max(1e-300, u.cwiseAbs().maxCoeff());
  switch (c) {
    case RefinedCase::Subsolution:
      if (!(beta > 0.0 && cond.bd_sign && st.sub))
        throw PreconditionError("the subsolution case needs beta > 0, div b + d <= 0 and a subsolution");
      break;
    case RefinedCase::Supersolution:
      if (!(beta > 0.0 && cond.bd_sign && st.super))
        throw PreconditionError("the supersolution case needs beta > 0, div b + d <= 0 and a supersolution");
      break;
    case RefinedCase::NonnegativeSuper:
      if (!(beta < 0.0 && cond.bd_reverse && st.super && u.minCoeff() >= -1e-8 * umax))
        throw PreconditionError(
            "the nonnegative case needs beta < 0, div b + d >= 0 and a nonnegative supersolution");
      break;
  }
  // ubar and the factor d ubar / d u at a value of u.
  const auto ubar = [&](double v) {
    switch (c) {
      case RefinedCase::Subsolution: return std::max(v, 0.0) + shift;
      case RefinedCase::Supersolution: return std::max(-v, 0.0) + shift;
      default: return std::max(v, 0.0) + shift;
    }
  };
  const auto active = [&](double v) {
    switch (c) {
      case RefinedCase::Subsolution: return v > 0.0;
      case RefinedCase::Supersolution: return v < 0.0;
      default: return true;
    }
  };
  EstimateReport rep;
  rep.name = "refined_caccioppoli";
  rep.details = {{"beta", beta}, {"C0", C.C0}, {"C1", C.C1}, {"C2", C.C2}, {"shift", shift}};
  for (const Ball& b : balls) {
    require_interior(m, b);
    const NodalField eta = cutoff(m, b);
    double lhs = 0.0, rhs = 0.0;
    for (int e : m.elements_near(b.center, b.r)) {
      const auto ev = vertex_values(m, eta, e);
      if (std::max({ev[0], ev[1], ev[2], ev[3]}) == 0.0) continue;
      const auto uv = vertex_values(m, u, e);
      const double gu = element_gradient(m, u, e).squaredNorm();
      const double ge = element_gradient(m, eta, e).squaredNorm();
      const double fe = f ? std::abs((*f)[e]) : 0.0;
      const double g2 = g ? (*g)[e].squaredNorm() : 0.0;
      lhs += integrate(m, e, uv, ev, [&](double v, double t) {
        return active(v) ? t * t * std::pow(ubar(v), beta - 1.0) * gu : 0.0;
      });
      rhs += integrate(m, e, uv, ev, [&](double v, double t) {
        const double w = ubar(v);
        return C.C0 * std::pow(w, beta + 1.0) * ge + (C.C1 * fe * std::pow(w, beta) + C.C2 * g2 * std::pow(w, beta - 1.0)) * t * t;
      });
    }
    rep.scale_grid.push_back(b.r);
    rep.scale_scan.push_back(rel(lhs, rhs));
  }
  rep.measured_constant = max_of(rep.scale_scan);
  return rep;
}

EstimateReport local_boundedness_check(const Mesh& m, const CoefficientSet& k, const NodalField& u,
                                       const ElementField* f, const VectorElementField* g,
                                       const std::vector<Ball>& balls, const BoundednessOptions& opt) {
  if (!classify_solution(m, k, u, f, g).sub) throw PreconditionError("u is not a subsolution");
  std::vector<double> radii;
  for (const Ball& b : balls) radii.push_back(b.r);
  if (opt.require_conditions) {
    const ConditionReport cond = check_conditions(m, k, radii);
    if (!cond.N && !cond.D) throw PreconditionError("neither condition (N) nor (D) holds");
  }
  const DataModuli mod = moduli_for(m, k, f, g, u, radii, opt.moduli, false);
  EstimateReport rep;
  rep.name = "local_boundedness";
  rep.details["sup"] = nlohmann::json::array();
  for (const Ball& b : balls) {
    require_interior(m, b);
    double best = 0.0;
    nlohmann::json sups = nlohmann::json::array();
    for (double sigma : opt.sigmas) {
      if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("sigma must lie in (0, 1)");
      double sup = 0.0;
      for (int i : nodes_in(m, {b.center, sigma * b.r})) sup = std::max(sup, u[i]);
      sups.push_back(sup);
      for (double p : opt.ps) {
        if (!(p > 0.0)) throw ConfigError("p must be positive");
        const double avg = ball_average(m, u, b, p, [](double v) { return std::max(v, 0.0); });
        const double rhs = std::pow(1.0 - sigma, -kExp.n / p) * (avg + mod.k(b.r));
        best = std::max(best, rel(sup, rhs));
      }
    }
    rep.scale_grid.push_back(b.r);
    rep.scale_scan.push_back(best);
    rep.details["sup"].push_back(sups);
  }
  rep.measured_constant = max_of(rep.scale_scan);
  return rep;
}

EstimateReport weak_harnack_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const ElementField* f,
                                  const VectorElementField* g, const std::vector<Ball>& balls,
                                  const HarnackOptions& opt) {
  const double umax = std::max(1e-300, u.cwiseAbs().maxCoeff());
  if (u.minCoeff() < -1e-8 * umax) throw PreconditionError("u takes negative values");
  if (!classify_solution(m, k, u, f, g).super) throw PreconditionError("u is not a supersolution");
  std::vector<double> radii;
  for (const Ball& b : balls) radii.push_back(b.r);
  if (opt.require_conditions) {
    const ConditionReport cond = check_conditions(m, k, radii);
    if (!cond.P && !cond.D) throw PreconditionError("neither condition (P) nor (D) holds");
  }
  const DataModuli mod = moduli_for(m, k, f, g, u, radii, opt.moduli, false);
  EstimateReport rep;
  rep.name = "weak_harnack";
  rep.details["reverse_holder"] = nlohmann::json::array();
  for (const Ball& b : balls) {
    require_interior(m, b);
    double inf = kInf;
    for (int i : nodes_in(m, {b.center, 0.5 * b.r})) inf = std::min(inf, u[i]);
    if (!std::isfinite(inf)) throw ResolutionError("half ball contains no node");
    double best = 0.0, reverse = 0.0;
    for (const auto& [s, p] : opt.sp) {
      if (!(0.0 < s && s < p && p < kExp.chi())) throw ConfigError("exponents need 0 < s < p < n / (n - 2)");
      const auto id = [](double v) { return v; };
      const double avg_p = ball_average(m, u, b, p, id);
      best = std::max(best, rel(avg_p, inf + mod.k(0.5 * b.r)));
      const double half_p = ball_average(m, u, {b.center, 0.5 * b.r}, p, id);
      const double avg_s = ball_average(m, u, b, s, id);
      reverse = std::max(reverse, rel(half_p, avg_s + mod.k(b.r)));
    }
    rep.scale_grid.push_back(b.r);
    rep.scale_scan.push_back(best);
    rep.details["reverse_holder"].push_back(reverse);
  }
  rep.measured_constant = max_of(rep.scale_scan);
  return rep;
}

EstimateReport holder_decay_check(const Mesh& m, const CoefficientSet& k, const NodalField& u, const Vec3& x, double r,
                                  const ElementField* f, const VectorElementField* g, const HolderOptions& opt) {
  require_interior(m, {x, r});
  EstimateReport rep;
  rep.name = "holder_decay";
  std::vector<double> radii;
  for (int l = 0; l < opt.levels; ++l) {
    const double rl = r * std::pow(0.5, l);
    if (rl < 2.0 * m.h) break;
    radii.push_back(rl);
  }
  if (radii.size() < 2) throw ResolutionError("fewer than two oscillation levels above 2h");
  double sup = 0.0;
  for (int i : nodes_in(m, {x, r})) sup = std::max(sup, std::abs(u[i]));
  const double floor = 1e-12 * std::max(1.0, sup);
  std::vector<double> lr, lo;
  for (double rl : radii) {
    double hi = -kInf, lw = kInf;
    for (int i : nodes_in(m, {x, rl})) {
      hi = std::max(hi, u[i]);
      lw = std::min(lw, u[i]);
    }
    const double osc = hi - lw;
    rep.scale_grid.push_back(rl);
    rep.scale_scan.push_back(osc);
    if (!(osc > floor)) rep.inconclusive = true;
    lr.push_back(std::log(rl));
    lo.push_back(std::log(std::max(osc, 1e-300)));
  }
  std::vector<double> half;
  for (double rl : radii) half.push_back(0.5 * rl);
  DataModuli mod = moduli_for(m, k, f, g, u, half, opt.moduli, true);
  mod.sup_u = sup;
  nlohmann::json ratios = nlohmann::json::array(), corr = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < radii.size(); ++l)
    ratios.push_back(rep.scale_scan[l] > 0.0 ? rep.scale_scan[l + 1] / rep.scale_scan[l] : 0.0);
  for (double rl : radii) corr.push_back(mod.ktilde(0.5 * rl));
  const double slope = rep.inconclusive ? NAN : fitted_slope(lr, lo);
  rep.details = {{"ratios", ratios}, {"ktilde", corr}, {"fitted_slope", slope}};
  // Exponents above 1 only say the function is smoother than Lipschitz here.
  rep.measured_constant = rep.inconclusive ? NAN : std::min(slope, 1.0);
  return rep;
}

EstimateReport boundary_oscillation_check(const DomainGeometry& omega, const Mesh& m, const CoefficientSet& k,
                                          const NodalField& u, const NodalField& phi, const Vec3& xi,
                                          const std::vector<double>& rhos_in, double r,
                                          const OscillationOptions& opt) {
  if (rhos_in.empty()) throw ConfigError("no radii given");
  std::vector<double> rhos = rhos_in;
  std::sort(rhos.begin(), rhos.end(), std::greater<>());
  for (double rho : rhos)
    if (!(rho > 0.0 && rho <= 0.5 * r * (1 + 1e-12))) throw ConfigError("radii must satisfy 0 < rho <= r / 2");
  const auto osc = [&](double rad, bool boundary_only, const NodalField& v) {
    double hi = -kInf, lo = kInf;
    for (int i : nodes_in(m, {xi, rad})) {
      if (boundary_only && !m.is_boundary[i]) continue;
      hi = std::max(hi, v[i]);
      lo = std::min(lo, v[i]);
    }
    return hi >= lo ? hi - lo : 0.0;
  };
  // Wiener integrand on the dyadic grid 2 rho_min 2^j up to r.
  std::vector<double> s;
  for (double t = 2.0 * rhos.back(); t <= r * (1 + 1e-12); t *= 2.0) s.push_back(t);
  std::vector<double> cap(s.size());
  parallel_for(s.size(), [&](std::size_t j) { cap[j] = condenser_ratio(omega, xi, s[j], opt.condenser).ratio; });
  const auto wiener_from = [&](double lo) {
    std::vector<double> ss, cc;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j] >= lo * (1 - 1e-12)) {
        ss.push_back(s[j]);
        cc.push_back(cap[j]);
      }
    return log_trapezoid(ss, cc);
  };
  const DataModuli mod = moduli_for(m, k, nullptr, nullptr, u, {r}, opt.moduli, true);
  const double outer = (1.0 + mod.k3(r)) * (osc(r, false, u) + mod.k(r));

  EstimateReport rep;
  rep.name = "boundary_oscillation";
  std::vector<double> need, oscphi, W, decay;
  for (double rho : rhos) {
    const double ou = osc(rho, false, u), op = osc(rho, true, phi), w = wiener_from(2.0 * rho);
    double c = 0.0;
    const double excess = ou - op;
    if (excess > 1e-12 * std::max(1.0, outer)) {
      const double q = outer > 0.0 ? excess / outer : kInf;
      c = q < 1.0 ? (w > 0.0 ? w / -std::log(q) : 0.0) : kInf;
    }
    rep.scale_grid.push_back(rho);
    rep.scale_scan.push_back(ou);
    oscphi.push_back(op);
    W.push_back(w);
    need.push_back(c);
  }
  for (std::size_t i = 0; i + 1 < rhos.size(); ++i)
    decay.push_back(rep.scale_scan[i] > 0.0 ? rep.scale_scan[i + 1] / rep.scale_scan[i] : 0.0);
  std::vector<double> positive;
  bool all_finite = true;
  for (double c : need) {
    if (!std::isfinite(c)) all_finite = false;
    if (c > 0.0 && std::isfinite(c)) positive.push_back(c);
  }
  rep.measured_constant = 0.0;
  for (double c : need) rep.measured_constant = std::max(rep.measured_constant, c);
  rep.details = {{"osc_phi", oscphi},
                 {"wiener", W},
                 {"required_C", nlohmann::json::array()},
                 {"decay", decay},
                 {"capacity_radii", s},
                 {"capacity_ratio", cap},
                 {"outer", outer},
                 {"single_constant", all_finite && drift(positive) <= 2.0}};
  for (double c : need) rep.details["required_C"].push_back(std::isfinite(c) ? nlohmann::json(c) : nullptr);
  return rep;
}

namespace {

const double kR = std::exp(-1.0);

double log_abs(const Vec3& x) { return std::abs(std::log(x.norm())); }

// sup of u over the shells r_k / 2 <= |x| <= r_k, r_k = R 2^{-k}, k >= 1,
// while the inner radius is at least 2h; slope of log sup against
// log |ln(r_k / 2)|.
void shell_fit(const Mesh& m, const NodalField& u, std::vector<double>& radii, std::vector<double>& sups,
               double& slope) {
  std::vector<double> x, y;
  for (double rk = kR; 0.5 * rk >= 2.0 * m.h; rk *= 0.5) {
    double sup = -kInf;
    for (int i = 0; i < m.num_nodes(); ++i) {
      const double t = m.nodes[i].norm();
      if (t >= 0.5 * rk && t <= rk) sup = std::max(sup, u[i]);
    }
    radii.push_back(rk);
    sups.push_back(sup);
    x.push_back(std::log(std::abs(std::log(0.5 * rk))));
    y.push_back(std::log(sup));
  }
  slope = fitted_slope(x, y);
}

}  // namespace

ExampleC1Report example_c1(double delta, double h) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  ExampleC1Report rep;
  rep.delta = delta;
  rep.h = h;
  const Mesh m = ball_mesh(Vec3::Zero(), kR, h);
  const auto b = [delta](const Vec3& x) {
    const double r2 = x.squaredNorm();
    if (r2 == 0.0) return Vec3(Vec3::Zero());
    return Vec3(delta * x / (r2 * log_abs(x)));
  };
  const PointFunction b2 = [&](const Vec3& x) { return b(x).squaredNorm(); };

  // The closed form is integrated in spherical coordinates, so the radii
  // need not be resolved by the mesh.
  for (int j = 6; j >= 1; --j) rep.theta_radii.push_back(kR * std::pow(0.5, j));
  KatoOptions ko;
  ko.radii = rep.theta_radii;
  const SampledFunction sb2 = sample(m, b2, Representative::Mean, {Vec3::Zero()});
  KatoProfile prof = kato_modulus(m, sb2, ko);
  rep.theta_b2 = prof.theta;
  rep.theta_to_zero = rep.theta_b2.size() >= 2 && rep.theta_b2.front() < 0.5 * rep.theta_b2.back();
  for (std::size_t i = 1; i < rep.theta_b2.size(); ++i)
    if (rep.theta_b2[i] < rep.theta_b2[i - 1]) rep.theta_to_zero = false;
  // The supremum sits at the singular point; the closed form there extends
  // the profile below the mesh.
  prof.model = [&](double t) { return ball_integral(m, sb2, Vec3::Zero(), t, 1, true); };
  rep.dini_divergent = dini_constant(prof, 2.0).divergent;

  CoefficientFunctions cf;
  cf.b = b;
  const CoefficientSet k = sample_coefficients(m, cf, 1.0, 1.0, NegativityMode::CD);
  NodalField bd = NodalField::Zero(m.num_nodes());
  for (int i : m.boundary_nodes) bd[i] = std::pow(log_abs(m.nodes[i]), delta);
  const NodalField u = solve_dirichlet(m, k, nullptr, nullptr, bd).solution;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.nodes[i].norm() >= 4.0 * h) {
      const double exact = std::pow(log_abs(m.nodes[i]), delta);
      rep.max_solution_error = std::max(rep.max_solution_error, std::abs(u[i] - exact) / exact);
    }
  shell_fit(m, u, rep.shell_radii, rep.shell_sup, rep.growth_exponent);
  rep.sup_unbounded = rep.shell_sup.size() >= 2 && rep.growth_exponent > 0.0;
  for (std::size_t i = 0; i + 1 < rep.shell_sup.size(); ++i)
    if (!(rep.shell_sup[i + 1] > rep.shell_sup[i])) rep.sup_unbounded = false;
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.nodes[i].squaredNorm() == 0.0) rep.center_value = u[i];

  std::vector<Ball> balls;
  for (double r : rep.shell_radii) balls.push_back({Vec3::Zero(), r});
  BoundednessOptions bo;
  bo.require_conditions = false;
  bo.moduli = DataModuli{};
  rep.boundedness = local_boundedness_check(m, k, u, nullptr, nullptr, balls, bo);
  return rep;
}

ExampleDReport example_d(const std::vector<double>& hs) {
  if (hs.empty()) throw ConfigError("no mesh widths given");
  ExampleDReport rep;
  rep.h = hs;
  const PointFunction d = [](const Vec3& x) {
    const double r2 = x.squaredNorm();
    return r2 == 0.0 ? 0.0 : (kExp.n - 2) / (r2 * log_abs(x));
  };
  rep.d_nonnegative = true;
  for (double h : hs) {
    const Mesh m = ball_mesh(Vec3::Zero(), kR, h);
    CoefficientFunctions cf;
    cf.d = d;
    const CoefficientSet k = sample_coefficients(m, cf, 1.0, 1.0, NegativityMode::None);
    for (double v : k.d)
      if (v < 0.0) rep.d_nonnegative = false;
    // The origin carries a placeholder value; hats touching it are masked.
    const NodalField u = interpolate(m, [](const Vec3& x) { return x.squaredNorm() == 0.0 ? 0.0 : log_abs(x); });
    const SparseMatrix K = assemble(m, k);
    const HatResiduals r = hat_residuals(m, K, u, Eigen::VectorXd::Zero(m.num_nodes()));
    double scale = 0.0, far = 0.0, near = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i) {
      if (m.is_boundary[i]) continue;
      bool touches = false;
      double s = 0.0;
      for (SparseMatrix::InnerIterator it(K, i); it; ++it) {
        if (m.nodes[it.col()].squaredNorm() == 0.0) touches = true;
        s += std::abs(it.value() * u[it.col()]);
      }
      if (touches) continue;
      scale = std::max(scale, s);
      near = std::max(near, std::abs(r.residual[i]));
      if (m.nodes[i].norm() >= kResidualExclusion) far = std::max(far, std::abs(r.residual[i]));
    }
    rep.residual.push_back(far / scale);
    rep.residual_near.push_back(near / scale);
    if (h == hs.back()) {
      const PointDivergence pd = kato_point_divergence(m, d, Vec3::Zero(), 0.5 * kR);
      rep.kato_divergent = pd.divergent;
      rep.kato_partial = pd.partial;
      shell_fit(m, u, rep.shell_radii, rep.shell_sup, rep.growth_exponent);
    }
  }
  rep.residual_reduction = rep.residual.front() / rep.residual.back();
  return rep;
}

nlohmann::json estimate_report_to_json(const EstimateReport& r) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json scan = nlohmann::json::array(), ref = nlohmann::json::array();
  for (double v : r.scale_scan) scan.push_back(num(v));
  for (double v : r.refinement_scan) ref.push_back(num(v));
  return {{"name", r.name},
          {"measured_constant", num(r.measured_constant)},
          {"scale_grid", r.scale_grid},
          {"scale_scan", scan},
          {"refinement_scan", ref},
          {"scale_drift", num(r.scale_drift())},
          {"refinement_drift", num(r.refinement_drift())},
          {"inconclusive", r.inconclusive},
          {"details", r.details}};
}

nlohmann::json example_c1_to_json(const ExampleC1Report& r) {
  return {{"delta", r.delta},
          {"h", r.h},
          {"theta_radii", r.theta_radii},
          {"theta_b2", r.theta_b2},
          {"theta_to_zero", r.theta_to_zero},
          {"dini_divergent", r.dini_divergent},
          {"shell_radii", r.shell_radii},
          {"shell_sup", r.shell_sup},
          {"growth_exponent", r.growth_exponent},
          {"sup_unbounded", r.sup_unbounded},
          {"center_value", r.center_value},
          {"max_solution_error", r.max_solution_error},
          {"boundedness", estimate_report_to_json(r.boundedness)}};
}

nlohmann::json example_d_to_json(const ExampleDReport& r) {
  return {{"h", r.h},
          {"residual", r.residual},
          {"residual_near", r.residual_near},
          {"residual_exclusion", kResidualExclusion},
          {"residual_reduction", r.residual_reduction},
          {"d_nonnegative", r.d_nonnegative},
          {"kato_divergent", r.kato_divergent},
          {"kato_partial", r.kato_partial},
          {"shell_radii", r.shell_radii},
          {"shell_sup", r.shell_sup},
          {"growth_exponent", r.growth_exponent}};
}

}  // namespace katolab
