#include "katolab/quadrature.hpp"

#include <cmath>

namespace katolab {

const TetRule& tet_rule_degree2() {
  static const TetRule rule = [] {
    TetRule r;
    const double a = (5.0 - std::sqrt(5.0)) / 20.0;
    const double b = 1.0 - 3.0 * a;
    for (int i = 0; i < 4; ++i) {
      std::array<double, 4> p{a, a, a, a};
      p[i] = b;
      r.points.push_back(p);
      r.weights.push_back(0.25);
    }
    r.degree = 2;
    return r;
  }();
  return rule;
}

const TetRule& tet_rule_degree5() {
  static const TetRule rule = [] {
    TetRule r;
    // Walkington's 14 point rule; weights below are for a reference volume
    // of 1/6 and are rescaled to sum to one.
    const double w_edge = 0.007091003462846911;
    const double w_a = 0.01224884051939366;
    const double w_b = 0.01878132095300264;
    const double e = 0.0455037041256496;
    const double f = 0.5 - e;
    const double a = 0.0927352503108912;
    const double b = 0.3108859192633006;
    const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& pr : pairs) {
      std::array<double, 4> p{e, e, e, e};
      p[pr[0]] = f;
      p[pr[1]] = f;
      r.points.push_back(p);
      r.weights.push_back(6.0 * w_edge);
    }
    for (double c : {a, b}) {
      for (int i = 0; i < 4; ++i) {
        std::array<double, 4> p{c, c, c, c};
        p[i] = 1.0 - 3.0 * c;
        r.points.push_back(p);
        r.weights.push_back(6.0 * (c == a ? w_a : w_b));
      }
    }
    r.degree = 5;
    return r;
  }();
  return rule;
}

double integrate_linear_power(const std::array<double, 4>& u, int p, double volume) {
  // The integral of lambda^alpha is 3! alpha! / (|alpha| + 3)! times the
  // volume, so the multinomial expansion collapses to 3! p! / (p + 3)! times
  // the complete homogeneous symmetric polynomial h_p(u).
  std::vector<double> hp(p + 1, 0.0);
  hp[0] = 1.0;
  for (double x : u) {
    // h_k <- sum_{i=0..k} x^i h_{k-i}; descending k reads only old values.
    for (int k = p; k >= 1; --k) {
      double acc = 0.0;
      double xp = 1.0;
      for (int i = 0; i <= k; ++i) {
        acc += xp * hp[k - i];
        xp *= x;
      }
      hp[k] = acc;
    }
  }
  double factor = 1.0;
  for (int i = 1; i <= p; ++i) factor *= static_cast<double>(i) / (i + 3);
  return volume * factor * hp[p];
}

}  // namespace katolab
