#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "expression.hpp"
#include "katolab/fe.hpp"
#include "katolab/mesh.hpp"
#include "katolab/solver.hpp"

namespace katolab::cli {

// Problem description shared by all subcommands.
//
//   {
//     "preset": "torsion" | "ex-c1(delta)" | "ex-d",         optional
//     "mesh": {"box": {"lo": [..], "hi": [..]}, "h": 0.0625,
//              "excluded": [{"kind": "ball" | "point" | "box" | "outside_ball", ...}]}
//          or {"ball": {"center": [..], "radius": 1}, "h": 0.0625},
//     "coefficients": {"preset": "laplace" | "ex-c1(delta)" | "ex-d",
//                      "A": "expr" | [9 exprs], "b": [3 exprs], "c": [3 exprs], "d": "expr",
//                      "lambda": 1, "Lambda": 1, "mode": "bd" | "cd" | "none",
//                      "file": "per-element data.json"},
//     "data": {"f": "expr", "g": [3 exprs]},
//     "boundary": {"phi": "expr"},
//     "run": {...},
//     "seed": 0
//   }
//
// Presets fill only the keys the config leaves out.
struct ProblemConfig {
  nlohmann::json expanded;  // the config after preset expansion

  MeshSpec mesh;
  std::optional<std::pair<Vec3, double>> ball;  // ball mesh instead of a box

  std::optional<std::string> A_scalar;
  std::optional<std::array<std::string, 9>> A_matrix;
  std::optional<std::array<std::string, 3>> b, c;
  std::optional<std::string> d;
  double lambda = 1.0, Lambda = 1.0;
  NegativityMode mode = NegativityMode::BD;
  std::optional<std::string> coefficient_file;

  std::optional<std::string> f;
  std::optional<std::array<std::string, 3>> g;
  std::string phi = "0";

  nlohmann::json run = nlohmann::json::object();
  std::uint64_t seed = 0;
};

// Schema and expression errors throw ConfigError.
ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config(const std::string& path);

// Expanded coefficient presets.
nlohmann::json coefficient_preset(const std::string& name);

Mesh build_problem_mesh(const ProblemConfig& c);
CoefficientSet build_coefficients(const ProblemConfig& c, const Mesh& m);
std::optional<ElementField> build_f(const ProblemConfig& c, const Mesh& m);
std::optional<VectorElementField> build_g(const ProblemConfig& c, const Mesh& m);
NodalField build_phi(const ProblemConfig& c, const Mesh& m);

Vec3 to_vec(const nlohmann::json& j, const std::string& what);
Region parse_region(const nlohmann::json& j);

}  // namespace katolab::cli
