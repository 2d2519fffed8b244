#pragma once

#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "katolab/fe.hpp"
#include "katolab/kato.hpp"
#include "katolab/mesh.hpp"
#include "katolab/sampled.hpp"

namespace katolab {

// Volume fraction of a tetrahedron where the linear interpolant of the
// vertex values satisfies u <= s.
double fraction_below(const std::array<double, 4>& values, double s);
// Volume fraction where k < |u| <= t (t may be +inf).
double band_fraction(const std::array<double, 4>& values, double k, double t);

// F_{k,t}(u) with sigma(0) = 1.
double truncate_band(double u, double k, double t);

struct SplitResult {
  // k_0 = +inf > k_1 > ... > k_kappa = 0.
  std::vector<double> levels;
  // Per element: band index i in 1..kappa, or 0 where grad u = 0.
  std::vector<int> band;
  // Elements whose vertex values fall in more than one band.
  std::vector<char> flagged;
  double flagged_volume = 0.0;
  std::vector<NodalField> pieces;
  int kappa = 1;
  // Band functional h(k_i, k_{i-1}) per band.
  std::vector<double> band_value;
  // a^q (Lorentz) or a^2 (Kato).
  double target = 0.0;
  // Upper bound on kappa implied by the data.
  double kappa_bound = 1.0;
  // Kato splitting: radius with theta(h, r0) = a^2 / 4, when needed.
  std::optional<double> r0;
};

// Stopping-time split with h(k,t) = int_0^inf s^q d_{h chi_{Omega(k,t)}}(s)^{q/p} ds/s.
SplitResult split_lorentz(const Mesh& m, const NodalField& u, const SampledFunction& h, double p, double q, double a);

struct KatoSplitOptions {
  CenterSet centers;
  // Radii of the theta(h, .) profile used for r0; empty picks a dyadic grid
  // from 2h up to the box diameter.
  std::vector<double> radii;
};

// Stopping-time split with h(k,t) = theta_Omega(|h| chi_{Omega(k,t)}), the
// sup over centers of the full-domain Riesz potential.
SplitResult split_kato(const Mesh& m, const NodalField& u, const SampledFunction& h, double a,
                       const KatoSplitOptions& opt = {});

struct SplitCheck {
  double band_functional = 0.0;  // max relative |h(k_i, k_{i-1}) - target| over interior bands
  double last_band_excess = 0.0;  // max(0, h(0, k_{kappa-1}) - target) / target
  double support = 0.0;           // (2): max |grad u_i| outside band i, unflagged elements
  double gradient = 0.0;          // (3): max |grad u - grad u_i| on band i, unflagged elements
  double magnitude = 0.0;         // (4): max (|u_i| - |u|)+
  double sign = 0.0;              // (5): max (-u u_i)+
  double sum = 0.0;               // (6): max |sum u_i - u|
  double identity7 = 0.0;
  double identity8 = 0.0;
  bool kappa_ok = false;
  bool passes(double tol) const;
};

SplitCheck check_split(const Mesh& m, const NodalField& u, const SplitResult& s);

// Levels, kappa, band values and the per-element bands; pieces only on request.
nlohmann::json split_result_to_json(const SplitResult& s, bool with_pieces = false);
nlohmann::json split_check_to_json(const SplitCheck& c);

}  // namespace katolab
