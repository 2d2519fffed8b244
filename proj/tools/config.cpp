#include "config.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "katolab/errors.hpp"
#include "katolab/sampled.hpp"

namespace katolab::cli {

namespace {

using json = nlohmann::json;

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

std::string expr_string(const json& j, const std::string& what) {
  if (j.is_number()) return j.dump();
  if (!j.is_string()) throw ConfigError(what + " must be an expression string or a number");
  Expression::parse(j.get<std::string>());
  return j.get<std::string>();
}

template <std::size_t N>
std::array<std::string, N> expr_array(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) throw ConfigError(what + " must list " + std::to_string(N) + " expressions");
  std::array<std::string, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = expr_string(j[i], what);
  return out;
}

double positive(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
  return v;
}

// "name(arg)" or "name".
std::pair<std::string, std::optional<double>> preset_name(const std::string& s) {
  static const std::regex re(R"(^\s*([a-z0-9-]+)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("malformed preset '" + s + "'");
  std::optional<double> arg;
  if (m[2].matched) arg = std::stod(m[2].str());
  return {m[1].str(), arg};
}

double c1_delta(const std::optional<double>& arg) {
  const double delta = arg.value_or(0.5);
  if (!(delta > 0.0)) throw ConfigError("ex-c1 needs delta > 0");
  return delta;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Fills keys of `into` that are missing with those of `from`, recursively.
void merge_missing(json& into, const json& from) {
  for (const auto& [k, v] : from.items()) {
    if (!into.contains(k))
      into[k] = v;
    else if (into[k].is_object() && v.is_object())
      merge_missing(into[k], v);
  }
}

json problem_preset(const std::string& s) {
  const auto [name, arg] = preset_name(s);
  if (name == "torsion")
    return {{"mesh", {{"ball", {{"center", {0, 0, 0}}, {"radius", 1.0}}}, {"h", 0.0625}}},
            {"coefficients", {{"preset", "laplace"}}},
            {"data", {{"f", "1"}}},
            {"boundary", {{"phi", "0"}}}};
  if (name == "ex-c1") {
    const double delta = c1_delta(arg);
    return {{"mesh", {{"ball", {{"center", {0, 0, 0}}, {"radius", std::exp(-1.0)}}}, {"h", 0.03125}}},
            {"coefficients", {{"preset", "ex-c1(" + num(delta) + ")"}}},
            {"boundary", {{"phi", "abs(ln(r))^" + num(delta)}}}};
  }
  if (name == "ex-d")
    return {{"mesh", {{"ball", {{"center", {0, 0, 0}}, {"radius", std::exp(-1.0)}}}, {"h", 0.0625}}},
            {"coefficients", {{"preset", "ex-d"}}},
            {"boundary", {{"phi", "abs(ln(r))"}}}};
  throw ConfigError("unknown problem preset '" + name + "'");
}

}  // namespace

json coefficient_preset(const std::string& s) {
  const auto [name, arg] = preset_name(s);
  if (name == "laplace") return {{"A", "1"}, {"mode", "bd"}};
  if (name == "ex-c1") {
    // The flux grad u + b u vanishes for u = |ln|x||^delta.
    const std::string k = num(c1_delta(arg)) + "/(r^2*abs(ln(r)))";
    return {{"A", "1"}, {"b", {"x1*" + k, "x2*" + k, "x3*" + k}}, {"mode", "cd"}};
  }
  // n - 2 = 1; positive d breaks both negativity conditions.
  if (name == "ex-d") return {{"A", "1"}, {"d", "1/(r^2*abs(ln(r)))"}, {"mode", "none"}};
  throw ConfigError("unknown coefficient preset '" + name + "'");
}

Vec3 to_vec(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be a 3-vector");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must be a 3-vector");
    v[i] = j[i].get<double>();
  }
  return v;
}

Region parse_region(const json& j) {
  only_keys(j, {"kind", "center", "radius", "lo", "hi"}, "region");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("region needs a kind");
  const std::string kind = j["kind"];
  if (kind == "point") return Region::point(to_vec(j.at("center"), "region center"));
  if (kind == "ball") return Region::ball(to_vec(j.at("center"), "region center"), positive(j.at("radius"), "radius"));
  if (kind == "outside_ball")
    return Region::outside_ball(to_vec(j.at("center"), "region center"), positive(j.at("radius"), "radius"));
  if (kind == "box") return Region::box(to_vec(j.at("lo"), "region lo"), to_vec(j.at("hi"), "region hi"));
  throw ConfigError("unknown region kind '" + kind + "'");
}

ProblemConfig parse_config(const json& in) {
  if (!in.is_object()) throw ConfigError("the config must be a JSON object");
  if (in.empty()) throw ConfigError("empty config");
  only_keys(in, {"preset", "mesh", "coefficients", "data", "boundary", "run", "seed"}, "config");
  json j = in;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("preset must be a string");
    merge_missing(j, problem_preset(j["preset"]));
  }
  if (!j.contains("mesh")) throw ConfigError("config has no mesh");

  ProblemConfig c;
  try {
    const json& mj = j["mesh"];
    only_keys(mj, {"box", "ball", "h", "excluded", "fit_boundaries"}, "mesh");
    if (!mj.contains("h")) throw ConfigError("mesh needs h");
    c.mesh.h = positive(mj["h"], "mesh h");
    if (mj.contains("ball") == mj.contains("box")) throw ConfigError("mesh needs exactly one of box and ball");
    if (mj.contains("ball")) {
      only_keys(mj["ball"], {"center", "radius"}, "mesh ball");
      c.ball = std::make_pair(to_vec(mj["ball"].at("center"), "ball center"),
                              positive(mj["ball"].at("radius"), "ball radius"));
    } else {
      only_keys(mj["box"], {"lo", "hi"}, "mesh box");
      c.mesh.box = Box{to_vec(mj["box"].at("lo"), "box lo"), to_vec(mj["box"].at("hi"), "box hi")};
      if (!(c.mesh.box.hi.array() > c.mesh.box.lo.array()).all()) throw ConfigError("box needs lo < hi");
    }
    if (mj.contains("excluded")) {
      if (!mj["excluded"].is_array()) throw ConfigError("excluded must be a list of regions");
      for (const json& r : mj["excluded"]) c.mesh.excluded.push_back(parse_region(r));
    }
    if (mj.contains("fit_boundaries")) c.mesh.fit_boundaries = mj["fit_boundaries"].get<bool>();

    json cj = j.value("coefficients", json{{"preset", "laplace"}});
    only_keys(cj, {"preset", "A", "b", "c", "d", "lambda", "Lambda", "mode", "file"}, "coefficients");
    if (cj.contains("preset")) {
      if (!cj["preset"].is_string()) throw ConfigError("coefficient preset must be a string");
      json p = coefficient_preset(cj["preset"]);
      cj.erase("preset");
      merge_missing(cj, p);
      j["coefficients"] = cj;
    }
    if (cj.contains("A")) {
      if (cj["A"].is_array())
        c.A_matrix = expr_array<9>(cj["A"], "A");
      else
        c.A_scalar = expr_string(cj["A"], "A");
    }
    if (cj.contains("b")) c.b = expr_array<3>(cj["b"], "b");
    if (cj.contains("c")) c.c = expr_array<3>(cj["c"], "c");
    if (cj.contains("d")) c.d = expr_string(cj["d"], "d");
    if (cj.contains("lambda")) c.lambda = positive(cj["lambda"], "lambda");
    if (cj.contains("Lambda")) c.Lambda = positive(cj["Lambda"], "Lambda");
    if (c.Lambda < c.lambda) throw ConfigError("Lambda must be at least lambda");
    if (cj.contains("mode")) {
      const std::string mode = cj["mode"];
      if (mode == "bd")
        c.mode = NegativityMode::BD;
      else if (mode == "cd")
        c.mode = NegativityMode::CD;
      else if (mode == "none")
        c.mode = NegativityMode::None;
      else
        throw ConfigError("mode must be bd, cd or none");
    }
    if (cj.contains("file")) c.coefficient_file = cj["file"].get<std::string>();

    if (j.contains("data")) {
      const json& dj = j["data"];
      only_keys(dj, {"f", "g"}, "data");
      if (dj.contains("f")) c.f = expr_string(dj["f"], "f");
      if (dj.contains("g")) c.g = expr_array<3>(dj["g"], "g");
    }
    if (j.contains("boundary")) {
      only_keys(j["boundary"], {"phi"}, "boundary");
      if (j["boundary"].contains("phi")) c.phi = expr_string(j["boundary"]["phi"], "phi");
    }
    if (j.contains("run")) {
      if (!j["run"].is_object()) throw ConfigError("run must be an object");
      c.run = j["run"];
    }
    if (j.contains("seed")) {
      if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
        throw ConfigError("seed must be a nonnegative integer");
      c.seed = j["seed"].get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.expanded = j;
  return c;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Mesh build_problem_mesh(const ProblemConfig& c) {
  if (!c.ball) return build_mesh(c.mesh);
  MeshSpec s = c.mesh;
  const auto& [center, radius] = *c.ball;
  s.box = Box{center - Vec3::Constant(radius), center + Vec3::Constant(radius)};
  s.excluded.insert(s.excluded.begin(), Region::outside_ball(center, radius));
  return build_mesh(s);
}

CoefficientSet build_coefficients(const ProblemConfig& c, const Mesh& m) {
  CoefficientFunctions fn;
  if (c.A_scalar) {
    const Expression a = Expression::parse(*c.A_scalar);
    fn.A = [a](const Vec3& x) { return Mat3(a(x) * Mat3::Identity()); };
  } else if (c.A_matrix) {
    std::vector<Expression> a;
    for (const auto& s : *c.A_matrix) a.push_back(Expression::parse(s));
    fn.A = [a](const Vec3& x) {
      Mat3 M;
      for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = a[i](x);
      return M;
    };
  }
  const auto vec = [](const std::array<std::string, 3>& s) {
    std::array<Expression, 3> e{Expression::parse(s[0]), Expression::parse(s[1]), Expression::parse(s[2])};
    return [e](const Vec3& x) { return Vec3(e[0](x), e[1](x), e[2](x)); };
  };
  if (c.b) fn.b = vec(*c.b);
  if (c.c) fn.c = vec(*c.c);
  if (c.d) {
    const Expression d = Expression::parse(*c.d);
    fn.d = [d](const Vec3& x) { return d(x); };
  }
  CoefficientSet k = sample_coefficients(m, fn, c.lambda, c.Lambda, c.mode);

  if (c.coefficient_file) {
    std::ifstream in(*c.coefficient_file);
    if (!in) throw ConfigError("cannot read coefficient file '" + *c.coefficient_file + "'");
    json j;
    try {
      in >> j;
      only_keys(j, {"A", "b", "c", "d"}, "coefficient file");
      const auto sized = [&](const char* key) {
        if (!j[key].is_array() || static_cast<int>(j[key].size()) != m.num_elements())
          throw ConfigError(std::string("coefficient file entry ") + key + " needs one value per element");
        return j[key];
      };
      if (j.contains("A")) {
        const json a = sized("A");
        for (int e = 0; e < m.num_elements(); ++e) {
          const auto v = a[e].get<std::vector<double>>();
          if (v.size() != 9) throw ConfigError("A needs 9 entries per element");
          for (int i = 0; i < 9; ++i) k.A[e](i / 3, i % 3) = v[i];
        }
      }
      if (j.contains("b")) {
        const json b = sized("b");
        for (int e = 0; e < m.num_elements(); ++e) k.b[e] = to_vec(b[e], "b entry");
      }
      if (j.contains("c")) {
        const json cc = sized("c");
        for (int e = 0; e < m.num_elements(); ++e) k.c[e] = to_vec(cc[e], "c entry");
      }
      if (j.contains("d")) {
        const json d = sized("d");
        for (int e = 0; e < m.num_elements(); ++e) k.d[e] = d[e].get<double>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed coefficient file: ") + e.what());
    }
  }
  return k;
}

std::optional<ElementField> build_f(const ProblemConfig& c, const Mesh& m) {
  if (!c.f) return std::nullopt;
  const Expression f = Expression::parse(*c.f);
  return sample(m, [f](const Vec3& x) { return f(x); }).values;
}

std::optional<VectorElementField> build_g(const ProblemConfig& c, const Mesh& m) {
  if (!c.g) return std::nullopt;
  VectorElementField g(m.num_elements(), Vec3::Zero());
  for (int i = 0; i < 3; ++i) {
    const Expression gi = Expression::parse((*c.g)[i]);
    const ElementField v = sample(m, [gi](const Vec3& x) { return gi(x); }).values;
    for (int e = 0; e < m.num_elements(); ++e) g[e][i] = v[e];
  }
  return g;
}

NodalField build_phi(const ProblemConfig& c, const Mesh& m) {
  const Expression phi = Expression::parse(c.phi);
  NodalField out = NodalField::Zero(m.num_nodes());
  for (int i : m.boundary_nodes) out[i] = phi(m.nodes[i]);
  return out;
}

}  // namespace katolab::cli
