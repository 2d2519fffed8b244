#include "katolab/kato.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "katolab/errors.hpp"
#include "katolab/parallel.hpp"
#include "katolab/quadrature.hpp"

namespace katolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tet {
  Vec3 v[4];
};

double tet_volume(const Tet& t) {
  Mat3 J;
  J.col(0) = t.v[1] - t.v[0];
  J.col(1) = t.v[2] - t.v[0];
  J.col(2) = t.v[3] - t.v[0];
  return std::abs(J.determinant()) / 6.0;
}

// Red refinement into eight children of equal volume.
std::array<Tet, 8> refine(const Tet& t) {
  const Vec3& a = t.v[0];
  const Vec3& b = t.v[1];
  const Vec3& c = t.v[2];
  const Vec3& d = t.v[3];
  const Vec3 ab = 0.5 * (a + b), ac = 0.5 * (a + c), ad = 0.5 * (a + d);
  const Vec3 bc = 0.5 * (b + c), bd = 0.5 * (b + d), cd = 0.5 * (c + d);
  return {Tet{{a, ab, ac, ad}}, Tet{{ab, b, bc, bd}}, Tet{{ac, bc, c, cd}}, Tet{{ad, bd, cd, d}},
          Tet{{ab, ac, ad, bd}}, Tet{{ab, ac, bc, bd}}, Tet{{ac, ad, bd, cd}}, Tet{{ac, bc, bd, cd}}};
}

double kernel(double dist, int k) { return k == 0 ? 1.0 : 1.0 / dist; }

constexpr int kSingularDepth = 5;
constexpr int kCutDepth = 3;

// Integral of |x - y|^{-k} over the whole tetrahedron.
double full_integral(const Tet& t, const Vec3& x, int k, int depth) {
  const Vec3 c = 0.25 * (t.v[0] + t.v[1] + t.v[2] + t.v[3]);
  double R = 0.0;
  for (const auto& v : t.v) R = std::max(R, (v - c).norm());
  if (k > 0 && depth < kSingularDepth && (x - c).norm() < 2.5 * R) {
    double s = 0.0;
    for (const auto& child : refine(t)) s += full_integral(child, x, k, depth + 1);
    return s;
  }
  const TetRule& rule = tet_rule_degree5();
  const double vol = tet_volume(t);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    const Vec3 y = l[0] * t.v[0] + l[1] * t.v[1] + l[2] * t.v[2] + l[3] * t.v[3];
    s += rule.weights[q] * kernel((y - x).norm(), k);
  }
  return s * vol;
}

// Adds weight * int_{t cap B_{r_i}(x)} |x - y|^{-k} into acc[i] for i in
// [lo, hi).
void ball_pieces(const Tet& t, const Vec3& x, const std::vector<double>& radii, std::size_t lo, std::size_t hi,
                 int k, int depth, double weight, std::vector<double>& acc) {
  if (lo >= hi) return;
  const Vec3 c = 0.25 * (t.v[0] + t.v[1] + t.v[2] + t.v[3]);
  double R = 0.0, dmax = 0.0;
  for (const auto& v : t.v) {
    R = std::max(R, (v - c).norm());
    dmax = std::max(dmax, (v - x).norm());
  }
  const double dmin = std::max(0.0, (c - x).norm() - R);
  // Radii are sorted: [lo, a) miss the element, [b, hi) contain it.
  std::size_t a = lo;
  while (a < hi && radii[a] <= dmin) ++a;
  std::size_t b = a;
  while (b < hi && radii[b] < dmax) ++b;
  if (b < hi) {
    const double full = weight * full_integral(t, x, k, depth);
    for (std::size_t i = b; i < hi; ++i) acc[i] += full;
  }
  if (a >= b) return;
  // Refine cut pieces until they are small relative to the smallest cutting
  // radius.
  if (depth < kCutDepth && 2.0 * R > radii[a] / 8.0) {
    for (const auto& child : refine(t)) ball_pieces(child, x, radii, a, b, k, depth + 1, weight, acc);
    return;
  }
  const TetRule& rule = tet_rule_degree5();
  const double vol = tet_volume(t);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& l = rule.points[q];
    const Vec3 y = l[0] * t.v[0] + l[1] * t.v[1] + l[2] * t.v[2] + l[3] * t.v[3];
    const double dist = (y - x).norm();
    const double val = weight * rule.weights[q] * vol * kernel(dist, k);
    for (std::size_t i = a; i < b; ++i)
      if (dist <= radii[i]) acc[i] += val;
  }
}

Tet element_tet(const Mesh& m, int e) {
  const auto& t = m.elements[e];
  return Tet{{m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]}};
}

// Angular rule: Gauss-Legendre in cos(polar angle) times a uniform azimuth.
struct SphereRule {
  std::vector<Vec3> dirs;
  std::vector<double> w;  // sums to 4 pi
};

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

const SphereRule& sphere_rule() {
  static const SphereRule rule = [] {
    SphereRule s;
    std::vector<double> x, w;
    const int nt = 16, np = 32;
    gauss_legendre(nt, x, w);
    for (int i = 0; i < nt; ++i) {
      const double st = std::sqrt(1.0 - x[i] * x[i]);
      for (int j = 0; j < np; ++j) {
        const double ph = 2.0 * M_PI * (j + 0.5) / np;
        s.dirs.emplace_back(st * std::cos(ph), st * std::sin(ph), x[i]);
        s.w.push_back(w[i] * 2.0 * M_PI / np);
      }
    }
    return s;
  }();
  return rule;
}

const std::vector<double>& gl8_x() {
  static const std::vector<double> x = [] {
    std::vector<double> a, b;
    gauss_legendre(8, a, b);
    return a;
  }();
  return x;
}
const std::vector<double>& gl8_w() {
  static const std::vector<double> w = [] {
    std::vector<double> a, b;
    gauss_legendre(8, a, b);
    return b;
  }();
  return w;
}

// Spherical mean integrand s^{2-k} int_{S^2} |f(x + s w)| chi_Omega dw.
double shell_density(const Mesh& m, const PointFunction& f, const Vec3& x, double s, int k) {
  const SphereRule& sr = sphere_rule();
  double acc = 0.0;
  for (std::size_t i = 0; i < sr.dirs.size(); ++i) {
    const Vec3 y = x + s * sr.dirs[i];
    if (!m.in_domain(y, 0.0)) continue;
    const double v = std::abs(f(y));
    if (std::isfinite(v)) acc += sr.w[i] * v;
  }
  return acc * (k == 0 ? s * s : s);
}

// Gauss-Legendre over [a, b] in the variable u = log s.
double log_panel(const Mesh& m, const PointFunction& f, const Vec3& x, double a, double b, int k) {
  const auto& gx = gl8_x();
  const auto& gw = gl8_w();
  const double la = std::log(a), lb = std::log(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double u = 0.5 * (la + lb) + 0.5 * (lb - la) * gx[i];
    const double s = std::exp(u);
    acc += gw[i] * shell_density(m, f, x, s, k) * s;
  }
  return 0.5 * (lb - la) * acc;
}

bool near_singular(const SampledFunction& f, const Vec3& x, double scale) {
  for (const auto& p : f.singular_points)
    if ((p - x).norm() <= 1e-9 * std::max(1.0, scale)) return true;
  return false;
}

std::vector<double> closed_form_integrals(const Mesh& m, const SampledFunction& f, const Vec3& x,
                                          const std::vector<double>& radii, int k) {
  std::vector<double> out(radii.size(), 0.0);
  const bool singular = near_singular(f, x, radii.back());
  // Inner ball [0, r_0]: dyadic shells, then log-length doubling panels.
  double inner = 0.0;
  double hi = radii.front();
  for (int j = 0; j < 60; ++j) {
    const double lo = 0.5 * hi;
    const double piece = log_panel(m, f.eval, x, lo, hi, k);
    inner += piece;
    hi = lo;
    if (!singular && j > 4 && std::abs(piece) <= 1e-15 * std::abs(inner)) break;
  }
  if (singular) {
    double len = 2.0;
    while (std::log(hi) - len > -690.0) {
      const double lo = hi * std::exp(-len);
      inner += log_panel(m, f.eval, x, lo, hi, k);
      hi = lo;
      len *= 2.0;
    }
  }
  double acc = inner;
  out[0] = acc;
  for (std::size_t i = 1; i < radii.size(); ++i) {
    double a = radii[i - 1];
    const double b = radii[i];
    while (a < b) {
      const double c = std::min(b, 2.0 * a);
      acc += log_panel(m, f.eval, x, a, c, k);
      a = c;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<double> element_integrals(const Mesh& m, const SampledFunction& f, const Vec3& x,
                                      const std::vector<double>& radii, int k) {
  std::vector<double> out(radii.size(), 0.0);
  for (int e : m.elements_near(x, radii.back())) {
    const double w = std::abs(f.values[e]);
    if (w == 0.0) continue;
    ball_pieces(element_tet(m, e), x, radii, 0, radii.size(), k, 0, w, out);
  }
  return out;
}

void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw ConfigError("radius list is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) throw ConfigError("radii must be positive and finite");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw ConfigError("radii must be strictly increasing");
  }
}

}  // namespace

std::vector<double> ball_integrals(const Mesh& m, const SampledFunction& f, const Vec3& x,
                                   const std::vector<double>& radii, int kernel_power, bool use_closed_form) {
  check_radii(radii);
  if (kernel_power != 0 && kernel_power != 1) throw ConfigError("kernel power must be 0 or 1");
  if (use_closed_form && f.has_closed_form()) return closed_form_integrals(m, f, x, radii, kernel_power);
  if (static_cast<int>(f.values.size()) != m.num_elements())
    throw ConfigError("sampled function does not match the mesh");
  return element_integrals(m, f, x, radii, kernel_power);
}

double ball_integral(const Mesh& m, const SampledFunction& f, const Vec3& x, double r, int kernel_power,
                     bool use_closed_form) {
  return ball_integrals(m, f, x, {r}, kernel_power, use_closed_form).front();
}

std::vector<Vec3> resolve_centers(const Mesh& m, const SampledFunction& f, const CenterSet& c) {
  std::vector<Vec3> out;
  switch (c.kind) {
    case CenterSet::Kind::AllNodes:
      out = m.nodes;
      break;
    case CenterSet::Kind::Explicit:
      out = c.points;
      break;
    case CenterSet::Kind::Lattice: {
      int stride = c.stride;
      if (stride <= 0) {
        stride = 1;
        while (static_cast<double>(m.num_nodes()) / std::pow(stride, 3) > c.max_centers) ++stride;
      }
      for (const auto& x : m.nodes) {
        bool on = true;
        for (int d = 0; d < 3 && on; ++d) {
          const double g = (x[d] - m.box.lo[d]) / m.h;
          const long gi = std::lround(g);
          on = std::abs(g - gi) < 1e-6 && gi % stride == 0;
        }
        if (on) out.push_back(x);
      }
      break;
    }
  }
  if (c.include_singular_points)
    for (const auto& p : f.singular_points) out.push_back(p);
  if (out.empty()) throw InsufficientDataError("no centers for the Kato modulus");
  return out;
}

void KatoProfile::lift() {
  if (r.empty()) throw InsufficientDataError("empty Kato profile");
  eps = theta.back() / (100.0 * r.back());
  theta_prime.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) theta_prime[i] = theta[i] + eps * r[i];
}

double KatoProfile::doubling_constant() const {
  double best = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(r[j] - 0.5 * r[i]) <= 1e-9 * r[i] && theta[j] > 0.0) {
        best = std::max(best, theta[i] / theta[j]);
        ++pairs;
      }
  if (pairs == 0) throw InsufficientDataError("no dyadic radius pairs in the profile");
  return best;
}

double KatoProfile::inverse_prime(double value) const {
  if (theta_prime.size() != r.size()) throw InsufficientDataError("profile has not been lifted");
  if (!(value >= 0.0)) throw PreconditionError("inverse requested for a negative value");
  if (value > theta_prime.back()) throw InsufficientDataError("value exceeds the sampled range of theta'");
  double r0 = 0.0, v0 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (theta_prime[i] >= value) {
      const double t = (value - v0) / (theta_prime[i] - v0);
      return r0 + t * (r[i] - r0);
    }
    r0 = r[i];
    v0 = theta_prime[i];
  }
  return r.back();
}

KatoProfile kato_modulus(const Mesh& m, const SampledFunction& f, const KatoOptions& opt) {
  check_radii(opt.radii);
  const auto centers = resolve_centers(m, f, opt.centers);
  std::vector<std::vector<double>> per(centers.size());
  parallel_for(centers.size(), [&](std::size_t c) {
    per[c] = ball_integrals(m, f, centers[c], opt.radii, 1, opt.use_closed_form);
  });
  KatoProfile p;
  p.r = opt.radii;
  p.theta.assign(p.r.size(), 0.0);
  p.argmax.assign(p.r.size(), centers.front());
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c)
      if (per[c][i] > p.theta[i]) {
        p.theta[i] = per[c][i];
        p.argmax[i] = centers[c];
      }
    if (i > 0 && p.theta[i] < p.theta[i - 1]) {
      p.theta[i] = p.theta[i - 1];
      p.argmax[i] = p.argmax[i - 1];
    }
  }
  p.lift();
  return p;
}

KatoProfile profile_from_samples(std::vector<double> r, std::vector<double> theta) {
  check_radii(r);
  if (theta.size() != r.size()) throw ConfigError("profile sample lengths differ");
  KatoProfile p;
  p.r = std::move(r);
  p.theta = std::move(theta);
  p.argmax.assign(p.r.size(), Vec3::Zero());
  p.lift();
  return p;
}

namespace {

// sup over r in grid of a log-t panel rule for
// int_{t_0}^{r} (theta(t)/theta(r))^{1/q} dt/t, plus an optional power-law
// tail below t_0.
double dini_sup(const std::vector<double>& t, const std::vector<double>& th, double q,
                const std::optional<double>& tail_exponent, std::vector<double>* partial) {
  double best = 0.0;
  if (partial) partial->assign(t.size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(th[i] > 0.0)) continue;
    double acc = 0.0;
    for (std::size_t j = 1; j <= i; ++j) {
      const double ga = std::pow(std::max(th[j - 1], 0.0) / th[i], 1.0 / q);
      const double gb = std::pow(std::max(th[j], 0.0) / th[i], 1.0 / q);
      const double du = std::log(t[j] / t[j - 1]);
      // Exponential interpolation in log t, exact for power laws; falls back
      // to the trapezoid when either end vanishes or the ends agree.
      if (ga > 0.0 && gb > 0.0 && std::abs(gb - ga) > 1e-12 * gb)
        acc += (gb - ga) / std::log(gb / ga) * du;
      else
        acc += 0.5 * (ga + gb) * du;
    }
    if (tail_exponent && *tail_exponent > 0.0) acc += std::pow(th[0] / th[i], 1.0 / q) * q / *tail_exponent;
    if (partial) (*partial)[i] = acc;
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace

DiniResult dini_constant(const KatoProfile& p, double q) {
  if (!(q >= 1.0)) throw ConfigError("Dini exponent q must be >= 1");
  if (p.r.size() < 4) throw InsufficientDataError("Dini constant needs at least four radii");
  DiniResult res;
  const double base = dini_sup(p.r, p.theta, q, p.power_law_exponent, &res.partial);
  res.constant = base;
  if (p.power_law_exponent) return res;

  const double L = std::log(p.r.back() / p.r.front());
  const double step = L / (p.r.size() - 1);
  std::vector<double> levels;
  if (p.model) {
    std::vector<double> t = p.r, th = p.theta;
    levels.push_back(base);
    double lo = p.r.front();
    for (int k = 1; k <= 3; ++k) {
      const double new_lo = p.r.front() * std::exp(-L * (std::pow(2.0, k) - 1.0));
      const int count = std::min(400, std::max(4, static_cast<int>(std::ceil(std::log(lo / new_lo) / step))));
      std::vector<double> et, eth;
      for (int i = count; i >= 1; --i) {
        const double ti = lo * std::exp(-std::log(lo / new_lo) * i / count);
        et.push_back(ti);
        eth.push_back(p.model(ti));
      }
      t.insert(t.begin(), et.begin(), et.end());
      th.insert(th.begin(), eth.begin(), eth.end());
      // A model need not be monotone numerically; keep the running max.
      for (std::size_t i = 1; i < th.size(); ++i) th[i] = std::max(th[i], th[i - 1]);
      levels.push_back(dini_sup(t, th, q, std::nullopt, nullptr));
      lo = new_lo;
    }
  } else {
    // Read the given grid as the result of three doublings.
    for (int k = 3; k >= 0; --k) {
      const double cut = p.r.back() * std::exp(-L / std::pow(2.0, k));
      std::vector<double> t, th;
      for (std::size_t i = 0; i < p.r.size(); ++i)
        if (p.r[i] >= cut * (1.0 - 1e-12)) {
          t.push_back(p.r[i]);
          th.push_back(p.theta[i]);
        }
      levels.push_back(t.size() >= 2 ? dini_sup(t, th, q, std::nullopt, nullptr) : 0.0);
    }
  }
  bool growing = true;
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (!(levels[k] >= 1.1 * levels[k - 1] && levels[k] > 0.0)) growing = false;
  if (growing) {
    res.divergent = true;
    res.constant = kInf;
  } else {
    res.constant = levels.back();
  }
  return res;
}

PointDivergence kato_point_divergence(const Mesh& m, const PointFunction& f, const Vec3& x, double r) {
  if (!(r > 0.0)) throw ConfigError("radius must be positive");
  PointDivergence out;
  const double L0 = 16.0;
  double acc = 0.0;
  double hi = r;
  for (int k = 0; k <= 3; ++k) {
    const double target = r * std::exp(-L0 * std::pow(2.0, k));
    while (hi > target * (1.0 + 1e-12)) {
      const double lo = std::max(target, hi * std::exp(-1.0));
      acc += log_panel(m, f, x, lo, hi, 1);
      hi = lo;
    }
    out.partial.push_back(acc);
  }
  out.divergent = true;
  for (std::size_t k = 1; k < out.partial.size(); ++k)
    if (!(out.partial[k] >= 1.1 * out.partial[k - 1] && out.partial[k] > 0.0)) out.divergent = false;
  return out;
}

Eigen::MatrixXd riesz_potential_matrix(const Mesh& m, const std::vector<Vec3>& centers) {
  Eigen::MatrixXd P(centers.size(), m.num_elements());
  parallel_for(centers.size(), [&](std::size_t c) {
    for (int e = 0; e < m.num_elements(); ++e) P(c, e) = full_integral(element_tet(m, e), centers[c], 1, 0);
  });
  return P;
}

RatioLemmaResult ratio_lemma_check(const Modulus& omega, double r, int samples, double t_min_factor) {
  if (!(r > 0.0) || samples < 2) throw ConfigError("ratio check needs r > 0 and at least two samples");
  RatioLemmaResult res;
  const double a = std::log(r * t_min_factor), b = std::log(r);
  for (int i = 0; i < samples; ++i) {
    // Samples stay strictly below r.
    const double t = std::exp(a + (b - a) * i / samples);
    const double num = omega(t), den = omega(2.0 * t);
    if (!(den > 0.0)) throw PreconditionError("modulus must be positive");
    res.t.push_back(t);
    res.ratio.push_back(num / den);
    res.sup_ratio = std::max(res.sup_ratio, num / den);
  }
  return res;
}

double invert_modulus(const Modulus& omega, double value) {
  if (!(value > 0.0)) throw PreconditionError("modulus inverse needs a positive value");
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (omega(lo) > value) {
    lo *= 0.5;
    if (++guard > 2000 || lo == 0.0) throw ConvergenceError("modulus inverse: no lower bracket");
  }
  guard = 0;
  while (omega(hi) < value) {
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) throw ConvergenceError("modulus inverse: no upper bracket");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (omega(mid) < value) lo = mid;
    else hi = mid;
    if (hi / lo - 1.0 < 1e-15) break;
  }
  return std::sqrt(lo * hi);
}

DiniSumResult dini_sum_check(const Modulus& omega, double q, double tau, double c, const Modulus& omega_inverse) {
  if (!(q >= 1.0)) throw ConfigError("q must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("c must lie in (0, 1)");
  auto inv = [&](double v) { return omega_inverse ? omega_inverse(v) : invert_modulus(omega, v); };
  DiniSumResult res;

  double sum = 0.0;
  for (int k = 1;; ++k) {
    const double logb = std::log(c) + k * q * std::log(tau);
    if (logb < -690.0) break;
    const double b = std::exp(logb);
    const double term = std::pow(b, 1.0 / q) * std::log(inv(b));
    sum += term;
    if (k > 5 && std::abs(term) <= 1e-17 * std::max(1.0, std::abs(sum))) break;
  }
  res.lhs = -sum;
  res.a0 = std::pow(c, 1.0 / q) * std::log(inv(c));

  // int_0^T omega^{1/q} dt/t in u = log t, panels of unit length downward.
  const double T = inv(1.0);
  auto panel = [&](double ua, double ub) {
    const auto& gx = gl8_x();
    const auto& gw = gl8_w();
    double acc = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double u = 0.5 * (ua + ub) + 0.5 * (ub - ua) * gx[i];
      acc += gw[i] * std::pow(omega(std::exp(u)), 1.0 / q);
    }
    return 0.5 * (ub - ua) * acc;
  };
  // Divergence probe: log length 32, 64, 128, 256 below T.
  std::vector<double> probes;
  double integral = 0.0;
  double u = std::log(T);
  const double L0 = 32.0;
  for (int k = 0; k <= 3; ++k) {
    const double stop = std::log(T) - L0 * std::pow(2.0, k);
    while (u > stop + 1e-12) {
      const double ua = std::max(stop, u - 1.0);
      integral += panel(ua, u);
      u = ua;
    }
    probes.push_back(integral);
  }
  bool growing = true;
  for (std::size_t k = 1; k < probes.size(); ++k)
    if (!(probes[k] >= 1.1 * probes[k - 1])) growing = false;
  if (growing) {
    res.divergent = true;
    res.rhs = kInf;
    res.rhs_with_a0 = kInf;
    res.holds = true;
    res.holds_with_a0 = true;
    return res;
  }
  while (u > -690.0) {
    const double piece = panel(std::max(-690.0, u - 1.0), u);
    integral += piece;
    u -= 1.0;
    if (piece <= 1e-17 * integral) break;
  }
  res.rhs = integral / (1.0 - tau);
  res.rhs_with_a0 = (integral - tau * res.a0) / (1.0 - tau);
  const double slack = 1e-9 * std::max(1.0, std::abs(res.rhs));
  res.holds = res.lhs <= res.rhs + slack;
  res.holds_with_a0 = res.lhs <= res.rhs_with_a0 + slack;
  return res;
}

nlohmann::json kato_profile_to_json(const KatoProfile& p) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"radii", p.r}, {"theta", p.theta}, {"theta_prime", p.theta_prime}, {"epsilon", p.eps}};
  j["dini_constant"] = nullptr;
  j["dini_divergent"] = false;
  j["doubling_constant"] = nullptr;
  if (p.r.size() >= 4) {
    const DiniResult d = dini_constant(p, 2.0);
    j["dini_constant"] = num(d.constant);
    j["dini_divergent"] = d.divergent;
  }
  try {
    j["doubling_constant"] = num(p.doubling_constant());
  } catch (const InsufficientDataError&) {
  }
  return j;
}

}  // namespace katolab
