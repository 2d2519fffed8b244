#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "katolab/errors.hpp"
#include "katolab/estimates.hpp"

using namespace katolab;

namespace {

Mesh cube(double h) {
  MeshSpec s;
  s.box = Box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  s.h = h;
  return build_mesh(s);
}

NodalField solve(const Mesh& m, const CoefficientSet& k, const std::function<double(const Vec3&)>& phi,
                 const ElementField* f = nullptr) {
  return solve_dirichlet(m, k, f, nullptr, interpolate(m, phi)).solution;
}

// Inward drift: div b = -3/2, so div b + d <= 0.
CoefficientSet inward_drift(const Mesh& m) {
  CoefficientFunctions cf;
  cf.b = [](const Vec3& x) { return Vec3(-0.5 * x); };
  return sample_coefficients(m, cf, 1.0, 1.0, NegativityMode::BD);
}

std::vector<Ball> centered(std::initializer_list<double> radii) {
  std::vector<Ball> out;
  for (double r : radii) out.push_back({Vec3::Zero(), r});
  return out;
}

double saddle(const Vec3& x) { return x[0] * x[0] - x[1] * x[1]; }

}  // namespace

TEST_CASE("drift ratio of a scan") {
  CHECK(drift({2.0, 1.0, 4.0}) == doctest::Approx(4.0));
  CHECK(drift({3.0}) == 1.0);
  CHECK(std::isinf(drift({1.0, 0.0})));
}

TEST_CASE("cutoff profile") {
  const Mesh m = cube(1.0 / 8);
  const NodalField eta = cutoff(m, {Vec3::Zero(), 0.5});
  for (int i = 0; i < m.num_nodes(); ++i) {
    const double t = m.nodes[i].norm();
    if (t <= 0.25) CHECK(eta[i] == 1.0);
    if (t >= 0.5) CHECK(eta[i] == 0.0);
    if (t > 0.25 && t < 0.5) CHECK(eta[i] == doctest::Approx((0.5 - t) / 0.25));
  }
}

TEST_CASE("conditions on model operators") {
  const Mesh m = cube(1.0 / 8);
  const ConditionReport lap = check_conditions(m, laplace_coefficients(m), {});
  CHECK(lap.bd_sign);
  CHECK(lap.bd_reverse);
  CHECK(lap.N);
  CHECK(lap.P);
  CHECK(lap.D);
  const ConditionReport in = check_conditions(m, inward_drift(m), {});
  CHECK(in.bd_sign);
  CHECK_FALSE(in.bd_reverse);
  CHECK(in.N);
  // c = d = 0: the cd functional vanishes for any b.
  CHECK(in.cd_sign);
  CHECK(in.cd_reverse);
}

TEST_CASE("solution classification") {
  const Mesh m = cube(1.0 / 8);
  const CoefficientSet k = laplace_coefficients(m);
  const SolutionStatus lin = classify_solution(m, k, interpolate(m, [](const Vec3& x) { return x[0]; }), nullptr,
                                               nullptr);
  CHECK(lin.sub);
  CHECK(lin.super);
  // x1^2 has -Laplace = -2 < 0: a strict subsolution of the homogeneous problem.
  const NodalField sq = interpolate(m, [](const Vec3& x) { return x[0] * x[0]; });
  const SolutionStatus st = classify_solution(m, k, sq, nullptr, nullptr);
  CHECK(st.sub);
  CHECK_FALSE(st.super);
}

TEST_CASE("caccioppoli for a harmonic function") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const NodalField u = solve(m, k, saddle);
  const EstimateReport r = caccioppoli_check(m, k, u, nullptr, nullptr, centered({0.25, 0.5}));
  REQUIRE(r.scale_scan.size() == 2);
  CHECK(std::isfinite(r.measured_constant));
  CHECK(r.measured_constant > 0.0);
  // Testing with eta^2 u gives the constant 4 for harmonic u.
  CHECK(r.measured_constant <= 4.0 * 1.05);
  CHECK(r.scale_drift() <= 2.0);

  const NodalField one = NodalField::Constant(m.num_nodes(), 3.0);
  const EstimateReport c = caccioppoli_check(m, k, one, nullptr, nullptr, centered({0.5}));
  CHECK(c.details["lhs"][0].get<double>() == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(c.measured_constant == 0.0);
}

TEST_CASE("caccioppoli rejects non-solutions") {
  const Mesh m = cube(1.0 / 8);
  const CoefficientSet k = laplace_coefficients(m);
  // -Laplace x1^2 < 0 but x1^2 - 1 changes sign: not a nonnegative subsolution.
  const NodalField v = interpolate(m, [](const Vec3& x) { return x[0] * x[0] - 0.5; });
  CHECK_THROWS_AS(caccioppoli_check(m, k, v, nullptr, nullptr, centered({0.5})), PreconditionError);
  const NodalField u = solve(m, k, saddle);
  CHECK_THROWS_AS(caccioppoli_check(m, k, u, nullptr, nullptr, centered({1.5})), PreconditionError);
}

TEST_CASE("caccioppoli with drift is scale and mesh stable") {
  std::vector<EstimateReport> reps;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const Mesh m = cube(h);
    const CoefficientSet k = inward_drift(m);
    // b is odd, so u is odd in x1 and the ratio is scale invariant to leading order.
    const NodalField u = solve(m, k, [](const Vec3& x) { return x[0]; });
    reps.push_back(caccioppoli_check(m, k, u, nullptr, nullptr, centered({0.2, 0.4, 0.8})));
  }
  const EstimateReport r = with_refinement(reps[0], reps[1]);
  CHECK(reps[1].scale_drift() <= 2.0);
  CHECK(r.refinement_drift() <= 2.0);
}

TEST_CASE("boundary caccioppoli") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const ElementField f(m.num_elements(), 1.0);
  const NodalField u = solve(m, k, [](const Vec3&) { return 0.0; }, &f);
  CaccioppoliOptions opt;
  opt.boundary = true;
  const EstimateReport r = caccioppoli_check(m, k, u, &f, nullptr, {{Vec3(1.0, 0, 0), 0.25}, {Vec3(1.0, 0, 0), 0.5}},
                                             opt);
  CHECK(std::isfinite(r.measured_constant));
  CHECK(r.scale_drift() <= 2.0);
  const NodalField w = solve(m, k, [](const Vec3& x) { return 1.0 + x[0]; });
  CHECK_THROWS_AS(caccioppoli_check(m, k, w, nullptr, nullptr, {{Vec3(1.0, 0, 0), 0.25}}, opt), PreconditionError);
}

TEST_CASE("refined constants") {
  const RefinedConstants one = refined_constants(1.0);
  CHECK(one.C0 == 1.0);
  CHECK(one.C1 == 1.0);
  CHECK(one.C2 == 1.0);
  const RefinedConstants minus = refined_constants(-1.0);
  CHECK(minus.C0 == 1.0);
  CHECK(minus.C2 == 1.0);
  const RefinedConstants two = refined_constants(2.0);
  CHECK(two.C0 == doctest::Approx(1.0 / 9));
  CHECK(two.C2 == doctest::Approx(1.0 + 1.0 / 9));
  CHECK(refined_constants(0.5).C0 == doctest::Approx(16.0));
  CHECK_THROWS_AS(refined_constants(0.0), ConfigError);
}

TEST_CASE("refined caccioppoli at beta = 1 matches caccioppoli") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const NodalField u = solve(m, k, [](const Vec3& x) { return 2.0 + saddle(x); });
  REQUIRE(u.minCoeff() > 0.0);
  const auto balls = centered({0.25, 0.5});
  const EstimateReport plain = caccioppoli_check(m, k, u, nullptr, nullptr, balls);
  const EstimateReport refined =
      refined_caccioppoli_check(m, k, u, nullptr, nullptr, balls, 1.0, RefinedCase::Subsolution, 1e-9);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const double q = refined.scale_scan[i] / plain.scale_scan[i];
    CHECK(q <= 1.5);
    CHECK(q >= 1.0 / 1.5);
  }
}

TEST_CASE("refined caccioppoli beta scan and admissibility") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const ElementField f(m.num_elements(), 1.0);
  const NodalField u = solve(m, k, [](const Vec3&) { return 0.5; }, &f);
  REQUIRE(u.minCoeff() > 0.0);
  const auto balls = centered({0.25, 0.5});
  for (double beta : {-2.0, -1.0, -0.5}) {
    const EstimateReport r = refined_caccioppoli_check(m, k, u, &f, nullptr, balls, beta,
                                                       RefinedCase::NonnegativeSuper, 0.1);
    CHECK(std::isfinite(r.measured_constant));
    CHECK(r.measured_constant > 0.0);
  }
  for (double beta : {0.5, 2.0}) {
    const EstimateReport r =
        refined_caccioppoli_check(m, k, u, &f, nullptr, balls, beta, RefinedCase::Supersolution, 0.1);
    CHECK(std::isfinite(r.measured_constant));
  }
  const NodalField c = NodalField::Constant(m.num_nodes(), 2.0);
  const EstimateReport flat =
      refined_caccioppoli_check(m, k, c, nullptr, nullptr, balls, -1.0, RefinedCase::NonnegativeSuper, 0.1);
  CHECK(flat.measured_constant == 0.0);

  CHECK_THROWS_AS(refined_caccioppoli_check(m, k, u, &f, nullptr, balls, -1.0, RefinedCase::Subsolution, 0.1),
                  PreconditionError);
  CHECK_THROWS_AS(refined_caccioppoli_check(m, k, u, &f, nullptr, balls, 1.0, RefinedCase::NonnegativeSuper, 0.1),
                  PreconditionError);
  // The inward drift has div b + d < 0, which excludes the nonnegative case.
  const CoefficientSet in = inward_drift(m);
  const NodalField v = solve(m, in, [](const Vec3&) { return 0.5; }, &f);
  CHECK_THROWS_AS(refined_caccioppoli_check(m, in, v, &f, nullptr, balls, -1.0, RefinedCase::NonnegativeSuper, 0.1),
                  PreconditionError);
  CHECK_THROWS_AS(refined_caccioppoli_check(m, k, u, &f, nullptr, balls, 1.0, RefinedCase::Subsolution, 0.0),
                  ConfigError);
}

TEST_CASE("local boundedness") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const NodalField u = solve(m, k, [](const Vec3& x) { return 1.0 + x[0] + saddle(x); });
  const EstimateReport r = local_boundedness_check(m, k, u, nullptr, nullptr, centered({0.25, 0.5}));
  CHECK(r.measured_constant > 0.0);
  CHECK(r.measured_constant < 10.0);
  CHECK(r.scale_drift() <= 2.0);

  const NodalField neg = solve(m, k, [](const Vec3& x) { return -1.0 - x[0] * x[0]; });
  const EstimateReport z = local_boundedness_check(m, k, neg, nullptr, nullptr, centered({0.5}));
  CHECK(z.measured_constant == 0.0);

  const NodalField sup = interpolate(m, [](const Vec3& x) { return -x[0] * x[0]; });
  CHECK_THROWS_AS(local_boundedness_check(m, k, sup, nullptr, nullptr, centered({0.5})), PreconditionError);
}

TEST_CASE("weak harnack") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const NodalField one = NodalField::Constant(m.num_nodes(), 1.0);
  const EstimateReport r = weak_harnack_check(m, k, one, nullptr, nullptr, centered({0.25, 0.5}));
  for (double v : r.scale_scan) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  const NodalField pos = solve(m, k, [](const Vec3& x) { return 2.0 + x[0]; });
  const EstimateReport p = weak_harnack_check(m, k, pos, nullptr, nullptr, centered({0.2, 0.4, 0.8}));
  CHECK(p.measured_constant >= 1.0);
  CHECK(p.scale_drift() <= 2.0);

  const NodalField neg = solve(m, k, [](const Vec3& x) { return x[0]; });
  CHECK_THROWS_AS(weak_harnack_check(m, k, neg, nullptr, nullptr, centered({0.5})), PreconditionError);
  HarnackOptions bad;
  bad.sp = {{1.0, 3.5}};
  CHECK_THROWS_AS(weak_harnack_check(m, k, one, nullptr, nullptr, centered({0.5}), bad), ConfigError);
}

TEST_CASE("weak harnack with drift is mesh stable") {
  std::vector<EstimateReport> reps;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const Mesh m = cube(h);
    CoefficientFunctions cf;
    cf.b = [](const Vec3& x) { return Vec3(0.5 * x); };  // div b + d >= 0: condition (P)
    const CoefficientSet k = sample_coefficients(m, cf, 1.0, 1.0, NegativityMode::CD);
    const ElementField f(m.num_elements(), 1.0);
    const NodalField u = solve(m, k, [](const Vec3&) { return 1.0; }, &f);
    reps.push_back(weak_harnack_check(m, k, u, &f, nullptr, centered({0.2, 0.4, 0.8})));
  }
  CHECK(reps[1].scale_drift() <= 2.0);
  CHECK(with_refinement(reps[0], reps[1]).refinement_drift() <= 2.0);
}

TEST_CASE("holder decay") {
  const Mesh m = cube(1.0 / 16);
  const CoefficientSet k = laplace_coefficients(m);
  const NodalField lin = interpolate(m, [](const Vec3& x) { return x[0]; });
  const EstimateReport r = holder_decay_check(m, k, lin, Vec3::Zero(), 0.5);
  CHECK_FALSE(r.inconclusive);
  CHECK(r.measured_constant == doctest::Approx(1.0).epsilon(0.05));

  const NodalField c = NodalField::Constant(m.num_nodes(), 4.0);
  const EstimateReport flat = holder_decay_check(m, k, c, Vec3::Zero(), 0.5);
  CHECK(flat.inconclusive);
  CHECK(std::isnan(flat.measured_constant));

  CHECK_THROWS_AS(holder_decay_check(m, k, lin, Vec3::Zero(), 0.05), ResolutionError);
}

TEST_CASE("holder decay with bounded drift") {
  std::vector<double> alpha;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const Mesh m = cube(h);
    const CoefficientSet k = inward_drift(m);
    const NodalField u = solve(m, k, [](const Vec3& x) { return x[0]; });
    const EstimateReport r = holder_decay_check(m, k, u, Vec3(0.1, 0.05, 0.0), 0.8);
    for (double q : r.details["ratios"]) CHECK(q < 1.0);
    alpha.push_back(r.measured_constant);
  }
  for (double a : alpha) {
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
  }
  CHECK(drift(alpha) <= 2.0);
}

TEST_CASE("boundary oscillation") {
  CondenserOptions fast;
  fast.resolution = 8;
  OscillationOptions opt{fast, std::nullopt};
  const std::vector<double> rhos{0.25, 0.125, 0.0625};

  // Face point of the unit cube: u = x3 vanishes on the face.
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = 1.0 / 32;
  const Mesh m = build_mesh(s);
  const CoefficientSet k = laplace_coefficients(m);
  const Vec3 face(0.5, 0.5, 0.0);
  const auto z = [](const Vec3& x) { return x[2]; };
  const NodalField u = solve(m, k, z);
  const EstimateReport r = boundary_oscillation_check(DomainGeometry::of(m), m, k, u, interpolate(m, z), face, rhos,
                                                      0.5, opt);
  for (double d : r.details["decay"]) CHECK(d < 0.75);
  // The integral runs from 2 rho to r, so it is empty at rho = r / 2.
  const auto& W = r.details["wiener"];
  CHECK(W[0].get<double>() == 0.0);
  for (std::size_t i = 1; i < W.size(); ++i) CHECK(W[i].get<double>() > W[i - 1].get<double>());

  const NodalField c = NodalField::Constant(m.num_nodes(), 2.0);
  const EstimateReport flat = boundary_oscillation_check(DomainGeometry::of(m), m, k, c, c, face, rhos, 0.5, opt);
  for (double o : flat.scale_scan) CHECK(o == 0.0);
  CHECK(flat.measured_constant == 0.0);

  CHECK_THROWS_AS(boundary_oscillation_check(DomainGeometry::of(m), m, k, u, u, face, {0.4}, 0.5, opt), ConfigError);
}

TEST_CASE("boundary oscillation at a puncture") {
  CondenserOptions fast;
  fast.resolution = 8;
  OscillationOptions opt{fast, std::nullopt};
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = 1.0 / 32;
  const Vec3 xi = Vec3::Constant(0.5);
  s.excluded = {Region::point(xi)};
  const Mesh m = build_mesh(s);
  const CoefficientSet k = laplace_coefficients(m);
  // Boundary data 0 at the puncture and 1 on the faces.
  const auto phi = [&](const Vec3& x) { return (x - xi).norm() < 1e-9 ? 0.0 : 1.0; };
  const NodalField u = solve(m, k, phi);
  const EstimateReport r =
      boundary_oscillation_check(DomainGeometry::of(m), m, k, u, interpolate(m, phi), xi, {0.25, 0.125, 0.0625}, 0.5,
                                 opt);
  // The oscillation includes the puncture value, so it stays near 1.
  for (double o : r.scale_scan) CHECK(o > 0.8);
  for (double d : r.details["decay"]) CHECK(d > 0.9);
}

TEST_CASE("example with a drift singularity") {
  const ExampleC1Report r = example_c1(0.5, 1.0 / 32);
  CHECK(r.theta_to_zero);
  CHECK(r.dini_divergent);
  CHECK(r.max_solution_error < 0.01);
  for (std::size_t i = 0; i + 1 < r.theta_b2.size(); ++i) CHECK(r.theta_b2[i] < r.theta_b2[i + 1]);
  // theta(|b|^2, r) = 4 pi delta^2 / |ln r| near the center.
  CHECK(r.theta_b2[0] == doctest::Approx(M_PI / std::abs(std::log(r.theta_radii[0]))).epsilon(0.05));
  REQUIRE(r.shell_radii.size() >= 2);
  CHECK(r.growth_exponent == doctest::Approx(0.5).epsilon(0.2));
  CHECK(r.sup_unbounded);
  CHECK(r.center_value > r.shell_sup.back());
  CHECK_THROWS_AS(example_c1(0.0, 1.0 / 8), ConfigError);
}

TEST_CASE("example with a potential singularity") {
  const ExampleDReport r = example_d({1.0 / 8, 1.0 / 16});
  CHECK(r.d_nonnegative);
  CHECK(r.kato_divergent);
  REQUIRE(r.residual.size() == 2);
  CHECK(r.residual[0] / r.residual[1] >= 1.5);
  REQUIRE(r.shell_radii.size() >= 1);
  for (std::size_t i = 0; i < r.shell_radii.size(); ++i)
    CHECK(r.shell_sup[i] == doctest::Approx(std::abs(std::log(0.5 * r.shell_radii[i]))).epsilon(0.05));
}

TEST_CASE("report json") {
  EstimateReport r;
  r.name = "x";
  r.scale_scan = {1.0, NAN};
  const nlohmann::json j = estimate_report_to_json(r);
  CHECK(j["name"] == "x");
  CHECK(j["scale_scan"][1].is_null());
}
