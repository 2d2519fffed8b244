#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "katolab/mesh.hpp"

namespace katolab {

struct SobolevExponents {
  int n = 3;
  double two_star() const { return 2.0 * n / (n - 2.0); }
  double two_lower() const { return 2.0 * n / (n + 2.0); }
  double chi() const { return n / (n - 2.0); }
};

// P1 nodal field.
using NodalField = Eigen::VectorXd;
// Elementwise constant scalar field.
using ElementField = std::vector<double>;
using VectorElementField = std::vector<Vec3>;
// Optional element subset; nullptr means the whole mesh.
using ElementMask = std::vector<char>;

NodalField interpolate(const Mesh& m, const std::function<double(const Vec3&)>& f);
Vec3 element_gradient(const Mesh& m, const NodalField& u, int e);
double element_mean(const Mesh& m, const NodalField& u, int e);

// Value of u at x; throws PreconditionError if x lies outside the mesh.
double evaluate(const Mesh& m, const NodalField& u, const Vec3& x);

// Integral of each hat function.
Eigen::VectorXd lumped_mass(const Mesh& m);

// ||u||_{L^p} for a P1 field. Even integer exponents are integrated exactly,
// other exponents with the degree 5 rule; p = inf is the nodal maximum.
double lp_norm(const Mesh& m, const NodalField& u, double p, const ElementMask* mask = nullptr);
double grad_l2_norm(const Mesh& m, const NodalField& u, const ElementMask* mask = nullptr);
// ||u||_{L^6} + ||grad u||_{L^2} in three dimensions.
double y12_norm(const Mesh& m, const NodalField& u, const ElementMask* mask = nullptr);

double lp_norm(const Mesh& m, const ElementField& f, double p, const ElementMask* mask = nullptr);
double l2_norm(const Mesh& m, const VectorElementField& g, const ElementMask* mask = nullptr);

struct SobolevEstimate {
  double constant = 0.0;
  int samples = 0;
};

// Largest ||u||_{L^6} / ||grad u||_{L^2} over a seeded family of zero-trace
// bump combinations. The family is defined in box-relative coordinates, so
// the estimate is invariant under scaling of the mesh.
SobolevEstimate sobolev_constant_estimate(const Mesh& m, int samples, std::uint64_t seed);

nlohmann::json fe_function_to_json(const NodalField& u, const std::string& mesh_ref);
NodalField fe_function_from_json(const nlohmann::json& j, const Mesh& m);

}  // namespace katolab
