#include "katolab/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "katolab/errors.hpp"
#include "katolab/lorentz.hpp"
#include "katolab/parallel.hpp"

namespace katolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tet_volume6(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  J.col(2) = d - a;
  return std::abs(J.determinant());
}

std::array<double, 4> local(const Mesh& m, const NodalField& u, int e) {
  const auto& t = m.elements[e];
  return {u[t[0]], u[t[1]], u[t[2]], u[t[3]]};
}

bool flat(const std::array<double, 4>& v) { return v[0] == v[1] && v[0] == v[2] && v[0] == v[3]; }

}  // namespace

double fraction_below(const std::array<double, 4>& values, double s) {
  std::array<double, 4> v = values;
  std::sort(v.begin(), v.end());
  if (s >= v[3]) return 1.0;
  if (s <= v[0]) return 0.0;
  if (s <= v[1]) return std::pow(s - v[0], 3) / ((v[1] - v[0]) * (v[2] - v[0]) * (v[3] - v[0]));
  if (s >= v[2]) return 1.0 - std::pow(v[3] - s, 3) / ((v[3] - v[0]) * (v[3] - v[1]) * (v[3] - v[2]));
  // Two vertices below: a prism in reference coordinates.
  const Vec3 A(0, 0, 0), B(1, 0, 0), C(0, 1, 0), D(0, 0, 1);
  const Vec3 ac = A + (s - v[0]) / (v[2] - v[0]) * (C - A);
  const Vec3 ad = A + (s - v[0]) / (v[3] - v[0]) * (D - A);
  const Vec3 bc = B + (s - v[1]) / (v[2] - v[1]) * (C - B);
  const Vec3 bd = B + (s - v[1]) / (v[3] - v[1]) * (D - B);
  return tet_volume6(A, ac, ad, B) + tet_volume6(ac, ad, B, bd) + tet_volume6(ac, B, bc, bd);
}

double band_fraction(const std::array<double, 4>& values, double k, double t) {
  // {k < u <= t} and {-t <= u < -k}; level sets carry no volume.
  const std::array<double, 4> neg{-values[0], -values[1], -values[2], -values[3]};
  const double top_pos = std::isinf(t) ? 1.0 : fraction_below(values, t);
  const double top_neg = std::isinf(t) ? 1.0 : fraction_below(neg, t);
  const double f = (top_pos - fraction_below(values, k)) + (top_neg - fraction_below(neg, k));
  return std::clamp(f, 0.0, 1.0);
}

double truncate_band(double u, double k, double t) {
  const double sigma = u < 0.0 ? -1.0 : 1.0;
  const double a = std::abs(u);
  if (a <= k) return 0.0;
  if (!std::isinf(t) && a > t) return (t - k) * sigma;
  return u - k * sigma;
}

namespace {

using BandFunctional = std::function<double(double k, double t)>;

// Solves h(k, t) = target for k in [0, t) by bisection on the functional.
double find_level(const BandFunctional& h, double t, double target) {
  double lo = 0.0, hi = t;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = h(mid, t);
    if (std::abs(v - target) <= 1e-13 * target) return mid;
    if (v > target) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-15 * t) break;
  }
  return 0.5 * (lo + hi);
}

SplitResult stopping_time(const Mesh& m, const NodalField& u, const BandFunctional& h, double target) {
  if (u.size() != m.num_nodes()) throw ConfigError("u does not match the mesh");
  SplitResult s;
  s.target = target;
  const double umax = u.cwiseAbs().maxCoeff();
  s.levels.push_back(kInf);
  double t = kInf;
  while (true) {
    const double rest = h(0.0, t);
    // Equality up to round-off closes the last band.
    if (rest <= target * (1.0 + 1e-10)) {
      s.band_value.push_back(rest);
      break;
    }
    const double k = find_level(h, std::isinf(t) ? umax : t, target);
    s.levels.push_back(k);
    s.band_value.push_back(h(k, t));
    t = k;
    if (s.levels.size() > 100000) throw ConvergenceError("splitting produced too many bands");
  }
  s.levels.push_back(0.0);
  s.kappa = static_cast<int>(s.levels.size()) - 1;

  auto band_of = [&](double a) {
    for (int i = 1; i <= s.kappa; ++i)
      if (a > s.levels[i]) return i;
    return s.kappa;
  };
  s.band.assign(m.num_elements(), 0);
  s.flagged.assign(m.num_elements(), 0);
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto v = local(m, u, e);
    if (flat(v)) continue;
    const double mean = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    s.band[e] = band_of(std::abs(mean));
    bool straddle = false;
    bool pos = false, neg = false;
    for (double x : v) {
      if (band_of(std::abs(x)) != s.band[e]) straddle = true;
      (x < 0.0 ? neg : pos) = true;
    }
    if (pos && neg && s.band[e] < s.kappa) straddle = true;
    if (straddle) {
      s.flagged[e] = 1;
      s.flagged_volume += m.volume[e];
    }
  }
  for (int i = 1; i <= s.kappa; ++i) {
    NodalField p(m.num_nodes());
    for (int n = 0; n < m.num_nodes(); ++n) p[n] = truncate_band(u[n], s.levels[i], s.levels[i - 1]);
    s.pieces.push_back(std::move(p));
  }
  return s;
}

std::vector<std::array<double, 4>> all_local(const Mesh& m, const NodalField& u) {
  std::vector<std::array<double, 4>> out(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) out[e] = local(m, u, e);
  return out;
}

}  // namespace

SplitResult split_lorentz(const Mesh& m, const NodalField& u, const SampledFunction& h, double p, double q, double a) {
  if (!(p > 1.0 && p <= q && std::isfinite(q))) throw ConfigError("splitting needs 1 < p <= q < inf");
  if (!(a > 0.0)) throw ConfigError("splitting threshold a must be positive");
  if (static_cast<int>(h.values.size()) != m.num_elements()) throw ConfigError("h does not match the mesh");
  const auto vals = all_local(m, u);
  // Elements sorted by |h| once; each evaluation is then a single sweep.
  std::vector<int> order(m.num_elements());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return std::abs(h.values[x]) > std::abs(h.values[y]); });
  BandFunctional fn = [&](double k, double t) {
    double acc = 0.0, D = 0.0;
    for (std::size_t i = 0; i < order.size();) {
      const double level = std::abs(h.values[order[i]]);
      if (level <= 0.0) break;
      while (i < order.size() && std::abs(h.values[order[i]]) == level) {
        const int e = order[i++];
        if (!flat(vals[e])) D += m.volume[e] * band_fraction(vals[e], k, t);
      }
      const double next = i < order.size() ? std::abs(h.values[order[i]]) : 0.0;
      if (D > 0.0) acc += std::pow(D, q / p) * (std::pow(level, q) - std::pow(next, q)) / q;
    }
    return acc;
  };
  SplitResult s = stopping_time(m, u, fn, std::pow(a, q));
  const double norm = lorentz_norm(m, h.values, p, q);
  s.kappa_bound = std::pow(norm / a, q) + 1.0;
  return s;
}

SplitResult split_kato(const Mesh& m, const NodalField& u, const SampledFunction& h, double a,
                       const KatoSplitOptions& opt) {
  if (!(a > 0.0)) throw ConfigError("splitting threshold a must be positive");
  if (static_cast<int>(h.values.size()) != m.num_elements()) throw ConfigError("h does not match the mesh");
  const auto vals = all_local(m, u);
  const auto centers = resolve_centers(m, h, opt.centers);
  const Eigen::MatrixXd P = riesz_potential_matrix(m, centers);
  Eigen::VectorXd absh(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) absh[e] = std::abs(h.values[e]);

  BandFunctional fn = [&](double k, double t) {
    Eigen::VectorXd w(m.num_elements());
    for (int e = 0; e < m.num_elements(); ++e)
      w[e] = flat(vals[e]) || absh[e] == 0.0 ? 0.0 : absh[e] * band_fraction(vals[e], k, t);
    return (P * w).maxCoeff();
  };
  SplitResult s = stopping_time(m, u, fn, a * a);

  if (s.kappa > 1) {
    std::vector<double> radii = opt.radii;
    if (radii.empty())
      for (double r = 2.0 * m.h; r < m.box.diameter(); r *= 2.0) radii.push_back(r);
    KatoOptions ko;
    ko.radii = radii;
    ko.centers = opt.centers;
    const KatoProfile prof = kato_modulus(m, h, ko);
    const double want = a * a / 4.0;
    // theta is non-decreasing with theta(0) = 0; interpolate linearly.
    std::optional<double> r0;
    double r_prev = 0.0, th_prev = 0.0;
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
      if (prof.theta[i] >= want) {
        const double span = prof.theta[i] - th_prev;
        const double f = span > 0.0 ? (want - th_prev) / span : 1.0;
        r0 = r_prev + f * (prof.r[i] - r_prev);
        break;
      }
      r_prev = prof.r[i];
      th_prev = prof.theta[i];
    }
    if (!r0) {
      std::ostringstream msg;
      msg << "theta(h, r) = a^2/4 = " << want << " is not attained on the profile:";
      for (std::size_t i = 0; i < prof.r.size(); ++i) msg << " (" << prof.r[i] << ", " << prof.theta[i] << ")";
      throw PreconditionError(msg.str());
    }
    s.r0 = r0;
    double l1 = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) l1 += absh[e] * m.volume[e];
    s.kappa_bound = 1.0 + 2.0 * l1 / (a * a * *r0);
  }
  return s;
}

bool SplitCheck::passes(double tol) const {
  return kappa_ok && band_functional <= 1e-10 && last_band_excess <= 1e-10 && support <= tol && gradient <= tol &&
         magnitude <= tol && sign <= tol && sum <= tol && identity7 <= tol && identity8 <= tol;
}

SplitCheck check_split(const Mesh& m, const NodalField& u, const SplitResult& s) {
  SplitCheck c;
  for (int i = 0; i + 1 < s.kappa; ++i)
    c.band_functional = std::max(c.band_functional, std::abs(s.band_value[i] - s.target) / s.target);
  c.last_band_excess = std::max(0.0, s.band_value.back() - s.target) / s.target;
  c.kappa_ok = s.kappa <= std::floor(s.kappa_bound + 1e-12);

  NodalField total = NodalField::Zero(m.num_nodes());
  for (const auto& p : s.pieces) total += p;
  for (int n = 0; n < m.num_nodes(); ++n) {
    c.sum = std::max(c.sum, std::abs(total[n] - u[n]));
    for (const auto& p : s.pieces) {
      c.magnitude = std::max(c.magnitude, std::abs(p[n]) - std::abs(u[n]));
      c.sign = std::max(c.sign, -u[n] * p[n]);
    }
  }

  for (int e = 0; e < m.num_elements(); ++e) {
    if (s.flagged[e]) continue;
    const Vec3 gu = element_gradient(m, u, e);
    std::vector<Vec3> g(s.kappa);
    for (int i = 0; i < s.kappa; ++i) g[i] = element_gradient(m, s.pieces[i], e);
    for (int i = 0; i < s.kappa; ++i) {
      if (s.band[e] == i + 1) c.gradient = std::max(c.gradient, (gu - g[i]).norm());
      else c.support = std::max(c.support, g[i].norm());
    }
    for (int v : m.elements[e]) {
      Vec3 prefix = Vec3::Zero();
      for (int i = 0; i < s.kappa; ++i) {
        prefix += g[i];
        c.identity7 = std::max(c.identity7, (s.pieces[i][v] * gu - s.pieces[i][v] * prefix).norm());
        double suffix = 0.0;
        for (int j = i; j < s.kappa; ++j) suffix += s.pieces[j][v];
        c.identity8 = std::max(c.identity8, (u[v] * g[i] - suffix * g[i]).norm());
      }
    }
  }
  return c;
}

nlohmann::json split_result_to_json(const SplitResult& s, bool with_pieces) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json levels = nlohmann::json::array();
  for (double k : s.levels) levels.push_back(num(k));
  nlohmann::json j = {{"levels", levels},
                      {"kappa", s.kappa},
                      {"band_value", s.band_value},
                      {"target", s.target},
                      {"kappa_bound", num(s.kappa_bound)},
                      {"flagged_volume", s.flagged_volume},
                      {"band", s.band},
                      {"r0", s.r0 ? nlohmann::json(*s.r0) : nlohmann::json(nullptr)}};
  if (with_pieces) {
    j["pieces"] = nlohmann::json::array();
    for (const NodalField& u : s.pieces) j["pieces"].push_back(std::vector<double>(u.data(), u.data() + u.size()));
  }
  return j;
}

nlohmann::json split_check_to_json(const SplitCheck& c) {
  return {{"band_functional", c.band_functional}, {"last_band_excess", c.last_band_excess},
          {"support", c.support},                 {"gradient", c.gradient},
          {"magnitude", c.magnitude},             {"sign", c.sign},
          {"sum", c.sum},                         {"identity7", c.identity7},
          {"identity8", c.identity8},             {"kappa_ok", c.kappa_ok}};
}

}  // namespace katolab
