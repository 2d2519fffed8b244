#include "katolab/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "katolab/errors.hpp"

namespace katolab {

double Distribution::operator()(double t) const {
  if (infinite) return std::numeric_limits<double>::infinity();
  // First level <= t marks the end of the superlevel set.
  double d = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (levels[j] > t) d = measure[j];
    else break;
  }
  return d;
}

double Distribution::rearrangement(double s) const {
  for (std::size_t j = 0; j < levels.size(); ++j)
    if (measure[j] > s) return levels[j];
  return 0.0;
}

Distribution distribution(const ElementField& f, const std::vector<double>& weights) {
  Distribution d;
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  for (double v : f)
    if (!std::isfinite(v)) d.infinite = true;
  if (d.infinite) return d;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(f[a]) > std::abs(f[b]); });
  double acc = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double level = std::abs(f[order[i]]);
    if (level <= 0.0) break;
    while (i < order.size() && std::abs(f[order[i]]) == level) acc += weights[order[i++]];
    if (acc <= 0.0) continue;
    d.levels.push_back(level);
    d.measure.push_back(acc);
  }
  return d;
}

Distribution distribution(const Mesh& m, const ElementField& f, const std::vector<double>* weights) {
  return distribution(f, weights ? *weights : m.volume);
}

double lorentz_functional(const Distribution& d, double p, double q) {
  if (d.infinite) return std::numeric_limits<double>::infinity();
  // Between consecutive levels d is constant, so each piece integrates to
  // D^{q/p} (a_j^q - a_{j+1}^q) / q.
  double acc = 0.0;
  for (std::size_t j = 0; j < d.levels.size(); ++j) {
    const double upper = d.levels[j];
    const double lower = j + 1 < d.levels.size() ? d.levels[j + 1] : 0.0;
    acc += std::pow(d.measure[j], q / p) * (std::pow(upper, q) - std::pow(lower, q)) / q;
  }
  return acc;
}

double lorentz_norm(const Distribution& d, double p, double q) {
  if (!(p > 0.0) || std::isinf(p)) throw ConfigError("Lorentz exponent p must lie in (0, inf)");
  if (!(q > 0.0)) throw ConfigError("Lorentz exponent q must lie in (0, inf]");
  if (d.infinite) return std::numeric_limits<double>::infinity();
  if (std::isinf(q)) {
    // t d(t)^{1/p} increases on each constancy interval; the sup is the
    // left limit at each level.
    double best = 0.0;
    for (std::size_t j = 0; j < d.levels.size(); ++j)
      best = std::max(best, d.levels[j] * std::pow(d.measure[j], 1.0 / p));
    return best;
  }
  return std::pow(p * lorentz_functional(d, p, q), 1.0 / q);
}

double lorentz_norm(const Mesh& m, const ElementField& f, double p, double q) {
  return lorentz_norm(distribution(m, f), p, q);
}

nlohmann::json lorentz_norm_to_json(const LorentzNorm& n) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"p", n.p}, {"q", num(n.q)}, {"value", num(n.value)}, {"divergent", !std::isfinite(n.value)}};
}

}  // namespace katolab
