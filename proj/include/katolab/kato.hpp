#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "katolab/mesh.hpp"
#include "katolab/sampled.hpp"

namespace katolab {

// int_{B_r(x)} |f(y)| |x - y|^{-k} dy for k in {0, 1}. Elementwise data is
// integrated with adaptive subdivision of elements cut by the sphere or close
// to x. With a closed form the integral is taken in spherical coordinates
// about x, clipped to the geometric domain of the mesh.
double ball_integral(const Mesh& m, const SampledFunction& f, const Vec3& x, double r, int kernel_power,
                     bool use_closed_form = true);

// Same, for several sorted radii at once.
std::vector<double> ball_integrals(const Mesh& m, const SampledFunction& f, const Vec3& x,
                                   const std::vector<double>& radii, int kernel_power, bool use_closed_form = true);

struct CenterSet {
  enum class Kind { AllNodes, Lattice, Explicit };
  Kind kind = Kind::Lattice;
  // Lattice: nodes whose grid indices are multiples of stride; 0 picks the
  // stride so that at most max_centers nodes are used.
  int stride = 0;
  int max_centers = 512;
  std::vector<Vec3> points;
  bool include_singular_points = true;
};

std::vector<Vec3> resolve_centers(const Mesh& m, const SampledFunction& f, const CenterSet& c);

struct KatoOptions {
  std::vector<double> radii;  // strictly increasing, positive
  CenterSet centers;
  bool use_closed_form = true;
};

struct KatoProfile {
  std::vector<double> r;
  std::vector<double> theta;        // sup over centers, running max in r
  std::vector<double> theta_prime;  // theta + eps r
  std::vector<Vec3> argmax;
  double eps = 0.0;
  // Optional evaluator of theta at arbitrary radii, used to extend the
  // sample grid toward zero.
  std::function<double(double)> model;
  // Declared power-law behaviour theta ~ c t^exponent near zero.
  std::optional<double> power_law_exponent;

  // Fills theta_prime and eps from theta.
  void lift();
  double doubling_constant() const;
  // Radius where theta_prime equals value; theta_prime(0) = 0.
  double inverse_prime(double value) const;
};

// Modulus sup_x int_{B_r(x)} |f(y)| / |x - y| dy on the requested radii.
KatoProfile kato_modulus(const Mesh& m, const SampledFunction& f, const KatoOptions& opt);

// Profile from known samples (for closed-form moduli and tests).
KatoProfile profile_from_samples(std::vector<double> r, std::vector<double> theta);

struct DiniResult {
  double constant = 0.0;
  bool divergent = false;
  std::vector<double> partial;  // int_0^{r_i} (theta(t)/theta(r_i))^{1/q} dt/t
};

// C = sup_r int_0^r (theta(t)/theta(r))^{1/q} dt/t. The sample grid is
// extended toward zero three times, each time doubling its logarithmic
// length; if every extension raises the constant by at least 10% the result
// is reported as divergent (constant = +inf).
DiniResult dini_constant(const KatoProfile& p, double q);

// Radial Kato integral at a singular point: int_{B_r(x)} |f| / |x - y| with
// the inner cutoff pushed toward x in three log-doublings. Reports divergence
// when each step adds at least 10%.
struct PointDivergence {
  std::vector<double> partial;
  bool divergent = false;
};
PointDivergence kato_point_divergence(const Mesh& m, const PointFunction& f, const Vec3& x, double r);

// Potential matrix P(c, e) = int_e 1/|x_c - y| dy.
Eigen::MatrixXd riesz_potential_matrix(const Mesh& m, const std::vector<Vec3>& centers);

// Lemma-style checks on scalar moduli.
using Modulus = std::function<double(double)>;

struct RatioLemmaResult {
  double sup_ratio = 0.0;
  std::vector<double> t;
  std::vector<double> ratio;
};
// sup over sampled t < r of omega(t) / omega(2t).
RatioLemmaResult ratio_lemma_check(const Modulus& omega, double r, int samples = 200, double t_min_factor = 1e-12);

struct DiniSumResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  // Telescoping sum_{k>=0} (tau a_k - a_{k+1}) equals
  // (tau - 1) sum_{k>=1} a_k + tau a_0, so the bound that always follows is
  // rhs - tau a_0 / (1 - tau).
  double a0 = 0.0;
  double rhs_with_a0 = 0.0;
  bool holds_with_a0 = false;
  bool divergent = false;
};
// -sum_{k>=1} b_k^{1/q} log omega^{-1}(b_k) against
// (1-tau)^{-1} int_0^{omega^{-1}(1)} omega(t)^{1/q} dt/t with b_k = c tau^{kq}.
DiniSumResult dini_sum_check(const Modulus& omega, double q, double tau, double c,
                             const Modulus& omega_inverse = nullptr);

// Increasing modulus inverse by bracketing and bisection in log t.
double invert_modulus(const Modulus& omega, double value);

// Radii, theta, theta_prime and eps, plus the Dini constant (q = 2) and the
// doubling constant when they can be computed.
nlohmann::json kato_profile_to_json(const KatoProfile& p);

}  // namespace katolab
