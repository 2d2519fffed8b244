#pragma once

#include <vector>

#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"

namespace katolab {

// Distribution function of an elementwise constant |f|:
// d(t) = measure[j] for levels[j+1] <= t < levels[j], zero for t >= levels[0].
struct Distribution {
  std::vector<double> levels;   // distinct |f| values > 0, descending
  std::vector<double> measure;  // |{|f| >= levels[j]}|, increasing
  bool infinite = false;        // some value is not finite

  double operator()(double t) const;
  // Decreasing rearrangement f*(s) = inf{t : d(t) <= s}.
  double rearrangement(double s) const;
  double total_measure() const { return measure.empty() ? 0.0 : measure.back(); }
};

// weights, if given, replace the element volumes (fractional measures).
Distribution distribution(const Mesh& m, const ElementField& f, const std::vector<double>* weights = nullptr);
Distribution distribution(const ElementField& f, const std::vector<double>& weights);

// Lorentz quasi-norm
//   q <  inf: p^{1/q} ( int_0^inf (t d(t)^{1/p})^q dt/t )^{1/q}
//   q == inf: sup_t t d(t)^{1/p}
// evaluated exactly from the breakpoints. Returns +inf for non-finite data.
double lorentz_norm(const Distribution& d, double p, double q);
double lorentz_norm(const Mesh& m, const ElementField& f, double p, double q);

// int_0^inf s^q d(s)^{q/p} ds/s, i.e. ||f||_{L^{p,q}}^q / p.
double lorentz_functional(const Distribution& d, double p, double q);

struct LorentzNorm {
  double p = 0.0, q = 0.0;
  double value = 0.0;  // +inf for divergent data
};
nlohmann::json lorentz_norm_to_json(const LorentzNorm& n);

}  // namespace katolab
