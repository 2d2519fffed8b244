#include "katolab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "katolab/errors.hpp"

namespace katolab {

bool Box::contains(const Vec3& x, double tol) const {
  for (int d = 0; d < 3; ++d)
    if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
  return true;
}

Region Region::ball(const Vec3& c, double r) {
  Region g;
  g.kind = Kind::Ball;
  g.center = c;
  g.radius = r;
  return g;
}

Region Region::box(const Vec3& lo, const Vec3& hi) {
  Region g;
  g.kind = Kind::Box;
  g.lo = lo;
  g.hi = hi;
  return g;
}

Region Region::outside_ball(const Vec3& c, double r) {
  Region g;
  g.kind = Kind::BallExterior;
  g.center = c;
  g.radius = r;
  return g;
}

double Region::signed_distance(const Vec3& x) const {
  switch (kind) {
    case Kind::Ball:
      return (x - center).norm() - radius;
    case Kind::BallExterior:
      return radius - (x - center).norm();
    case Kind::Box: {
      Vec3 q;
      for (int d = 0; d < 3; ++d) q[d] = std::max(lo[d] - x[d], x[d] - hi[d]);
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return outside + inside;
    }
  }
  return 0.0;
}

Vec3 Region::project(const Vec3& x) const {
  switch (kind) {
    case Kind::Ball:
    case Kind::BallExterior: {
      Vec3 v = x - center;
      const double n = v.norm();
      if (n == 0.0) return center + Vec3(radius, 0, 0);
      return center + v * (radius / n);
    }
    case Kind::Box: {
      Vec3 p = x.cwiseMax(lo).cwiseMin(hi);
      if (signed_distance(x) < 0.0) {
        // Inside: push to the nearest face.
        int best_d = 0;
        double best = std::numeric_limits<double>::infinity();
        bool to_hi = false;
        for (int d = 0; d < 3; ++d) {
          if (x[d] - lo[d] < best) { best = x[d] - lo[d]; best_d = d; to_hi = false; }
          if (hi[d] - x[d] < best) { best = hi[d] - x[d]; best_d = d; to_hi = true; }
        }
        p = x;
        p[best_d] = to_hi ? hi[best_d] : lo[best_d];
      }
      return p;
    }
  }
  return x;
}

double Region::feature_size() const {
  switch (kind) {
    case Kind::Ball:
    case Kind::BallExterior:
      return radius;
    case Kind::Box:
      return (hi - lo).minCoeff();
  }
  return 0.0;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (double x : volume) v += x;
  return v;
}

Vec3 Mesh::centroid(int e) const {
  const auto& t = elements[e];
  return 0.25 * (nodes[t[0]] + nodes[t[1]] + nodes[t[2]] + nodes[t[3]]);
}

Eigen::Matrix<double, 4, 3> Mesh::barycentric_gradients(int e) const {
  const auto& t = elements[e];
  Mat3 J;
  J.col(0) = nodes[t[1]] - nodes[t[0]];
  J.col(1) = nodes[t[2]] - nodes[t[0]];
  J.col(2) = nodes[t[3]] - nodes[t[0]];
  const Mat3 Jinv_t = J.inverse().transpose();
  Eigen::Matrix<double, 4, 3> G;
  G.row(1) = Jinv_t.col(0).transpose();
  G.row(2) = Jinv_t.col(1).transpose();
  G.row(3) = Jinv_t.col(2).transpose();
  G.row(0) = -(G.row(1) + G.row(2) + G.row(3));
  return G;
}

double Mesh::diameter(int e) const {
  const auto& t = elements[e];
  double d = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) d = std::max(d, (nodes[t[a]] - nodes[t[b]]).norm());
  return d;
}

std::array<int, 3> Mesh::bin_of(const Vec3& x) const {
  std::array<int, 3> b{};
  for (int d = 0; d < 3; ++d) {
    int i = static_cast<int>(std::floor((x[d] - bin_origin_[d]) / bin_size_));
    b[d] = std::clamp(i, 0, bins_[d] - 1);
  }
  return b;
}

void Mesh::finalize() {
  const int ne = num_elements();
  const int nn = num_nodes();
  volume.assign(ne, 0.0);
  max_diameter_ = 0.0;
  for (int e = 0; e < ne; ++e) {
    const auto& t = elements[e];
    Mat3 J;
    J.col(0) = nodes[t[1]] - nodes[t[0]];
    J.col(1) = nodes[t[2]] - nodes[t[0]];
    J.col(2) = nodes[t[3]] - nodes[t[0]];
    volume[e] = J.determinant() / 6.0;
    max_diameter_ = std::max(max_diameter_, diameter(e));
  }
  is_boundary.assign(nn, 0);
  for (int i : boundary_nodes) is_boundary[i] = 1;

  bin_origin_ = box.lo;
  bin_size_ = std::max(h, 1e-300);
  for (int d = 0; d < 3; ++d)
    bins_[d] = std::max(1, static_cast<int>(std::ceil(box.extent()[d] / bin_size_)));
  const int nb = bins_[0] * bins_[1] * bins_[2];
  auto linear = [&](const std::array<int, 3>& b) { return (b[2] * bins_[1] + b[1]) * bins_[0] + b[0]; };

  auto build = [&](int count, auto position, std::vector<int>& start, std::vector<int>& items) {
    std::vector<int> which(count);
    start.assign(nb + 1, 0);
    for (int i = 0; i < count; ++i) {
      which[i] = linear(bin_of(position(i)));
      ++start[which[i] + 1];
    }
    for (int b = 0; b < nb; ++b) start[b + 1] += start[b];
    items.assign(count, 0);
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (int i = 0; i < count; ++i) items[fill[which[i]]++] = i;
  };
  build(ne, [&](int e) { return centroid(e); }, bin_start_, bin_elements_);
  build(nn, [&](int i) { return nodes[i]; }, node_bin_start_, node_bin_items_);
}

std::vector<int> Mesh::elements_near(const Vec3& c, double r) const {
  std::vector<int> out;
  const double reach = r + max_diameter_;
  const auto lo = bin_of(c - Vec3::Constant(reach));
  const auto hi = bin_of(c + Vec3::Constant(reach));
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const int b = (k * bins_[1] + j) * bins_[0] + i;
        for (int s = bin_start_[b]; s < bin_start_[b + 1]; ++s) {
          const int e = bin_elements_[s];
          if ((centroid(e) - c).norm() <= reach) out.push_back(e);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> Mesh::nodes_in_ball(const Vec3& c, double r) const {
  std::vector<int> out;
  const auto lo = bin_of(c - Vec3::Constant(r));
  const auto hi = bin_of(c + Vec3::Constant(r));
  const double tol = 1e-12 * std::max(1.0, r);
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const int b = (k * bins_[1] + j) * bins_[0] + i;
        for (int s = node_bin_start_[b]; s < node_bin_start_[b + 1]; ++s) {
          const int n = node_bin_items_[s];
          if ((nodes[n] - c).norm() <= r + tol) out.push_back(n);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

int Mesh::nearest_node(const Vec3& x) const {
  for (double r = h; ; r *= 2.0) {
    auto cand = nodes_in_ball(x, r);
    if (!cand.empty()) {
      int best = cand.front();
      for (int n : cand)
        if ((nodes[n] - x).norm() < (nodes[best] - x).norm()) best = n;
      return best;
    }
    if (r > 4.0 * box.diameter() + 1.0) break;
  }
  throw EmptyDomainError("mesh has no nodes");
}

bool Mesh::in_domain(const Vec3& x, double tol) const {
  for (int d = 0; d < 3; ++d)
    if (x[d] <= box.lo[d] + tol || x[d] >= box.hi[d] - tol) return false;
  for (const auto& g : excluded)
    if (g.signed_distance(x) <= tol) return false;
  return true;
}

double Mesh::distance_to_boundary(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) d = std::min({d, std::abs(x[k] - box.lo[k]), std::abs(box.hi[k] - x[k])});
  for (const auto& g : excluded) d = std::min(d, std::abs(g.signed_distance(x)));
  return d;
}

namespace {

// Kuhn subdivision of the unit cube: one tetrahedron per axis permutation,
// all sharing the diagonal from corner 000 to corner 111.
constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  J.col(2) = d - a;
  return J.determinant() / 6.0;
}

}  // namespace

Mesh build_mesh(const MeshSpec& spec) {
  if (!(spec.h > 0.0) || !std::isfinite(spec.h)) throw ConfigError("mesh spacing h must be positive");
  const Vec3 ext = spec.box.extent();
  if (!(ext.minCoeff() > 0.0)) throw ConfigError("mesh box is empty");
  std::array<int, 3> n{};
  Vec3 step;
  for (int d = 0; d < 3; ++d) {
    if (spec.h > ext[d] * (1.0 + 1e-12)) throw ConfigError("mesh spacing exceeds the box extent");
    n[d] = std::max(1, static_cast<int>(std::lround(ext[d] / spec.h)));
    step[d] = ext[d] / n[d];
  }
  const double hmin = step.minCoeff();
  const double tol = 1e-9 * hmin;
  auto nid = [&](int i, int j, int k) { return (k * (n[1] + 1) + j) * (n[0] + 1) + i; };
  const int total = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);

  std::vector<Vec3> pos(total);
  std::vector<char> on_box(total, 0);
  for (int k = 0; k <= n[2]; ++k)
    for (int j = 0; j <= n[1]; ++j)
      for (int i = 0; i <= n[0]; ++i) {
        const int id = nid(i, j, k);
        pos[id] = spec.box.lo + Vec3(i * step[0], j * step[1], k * step[2]);
        on_box[id] = (i == 0 || j == 0 || k == 0 || i == n[0] || j == n[1] || k == n[2]);
      }

  // Move nodes lying close to a curved boundary onto it. A band of 0.45 h
  // keeps every edge longer than h/4 after the move.
  std::vector<const Region*> surfaces;
  if (spec.fit_boundaries) {
    for (const auto& g : spec.excluded)
      if (g.feature_size() >= 2.0 * hmin) surfaces.push_back(&g);
    for (const auto& g : spec.interfaces)
      if (g.feature_size() >= 2.0 * hmin) surfaces.push_back(&g);
  }
  const double band = 0.45 * hmin;
  const std::vector<Vec3> grid_pos = pos;
  std::vector<char> on_surface(total, 0);
  std::vector<char> on_interface(total, 0);
  auto is_interface = [&](const Region* g) {
    return !spec.interfaces.empty() && g >= &spec.interfaces.front() && g <= &spec.interfaces.back();
  };
  for (int id = 0; id < total; ++id) {
    if (on_box[id]) continue;
    const Region* best = nullptr;
    double best_d = band;
    for (const Region* g : surfaces) {
      const double sd = std::abs(g->signed_distance(pos[id]));
      if (sd <= best_d) { best_d = sd; best = g; }
    }
    if (best) {
      pos[id] = best->project(pos[id]);
      on_surface[id] = 1;
      on_interface[id] = is_interface(best);
    }
  }

  // Nodes strictly inside an unfitted region are removed. Nodes strictly
  // inside a fitted region survive if an element with its centroid in the
  // domain uses them; they are then moved onto the surface.
  auto is_fitted = [&](const Region& g) {
    return std::find(surfaces.begin(), surfaces.end(), &g) != surfaces.end();
  };
  std::vector<char> keep(total, 1);
  std::vector<char> tagged(total, 0);
  std::vector<const Region*> outside(total, nullptr);
  for (int id = 0; id < total; ++id) {
    for (const auto& g : spec.excluded) {
      const double sd = g.signed_distance(pos[id]);
      if (sd < -tol) {
        if (is_fitted(g)) {
          if (!outside[id]) outside[id] = &g;
        } else {
          keep[id] = 0;
        }
      } else if (sd <= tol) {
        tagged[id] = 1;
      }
    }
  }

  std::vector<std::array<int, 4>> candidates;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        for (const auto& p : kPerms) {
          std::array<int, 3> c{0, 0, 0};
          std::array<int, 4> t{};
          t[0] = nid(i, j, k);
          for (int s = 0; s < 3; ++s) {
            c[p[s]] = 1;
            t[s + 1] = nid(i + c[0], j + c[1], k + c[2]);
          }
          if (!(keep[t[0]] && keep[t[1]] && keep[t[2]] && keep[t[3]])) continue;
          // Keep elements reaching into the domain; their outside nodes are
          // pulled back onto the surface below.
          bool reaches = false;
          for (int v : t) {
            bool in = true;
            for (const auto& g : spec.excluded)
              if (g.signed_distance(pos[v]) <= tol) in = false;
            reaches = reaches || in;
          }
          if (!reaches) continue;
          if (signed_volume(grid_pos[t[0]], grid_pos[t[1]], grid_pos[t[2]], grid_pos[t[3]]) < 0.0) std::swap(t[2], t[3]);
          candidates.push_back(t);
        }
      }
  for (const auto& t : candidates)
    for (int v : t)
      if (outside[v]) {
        pos[v] = outside[v]->project(pos[v]);
        outside[v] = nullptr;
        tagged[v] = 1;
      }

  const double ref_volume = step[0] * step[1] * step[2] / 6.0;
  auto degenerate = [&](const std::array<int, 4>& t) {
    const double v = signed_volume(pos[t[0]], pos[t[1]], pos[t[2]], pos[t[3]]);
    double shortest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) shortest = std::min(shortest, (pos[t[a]] - pos[t[b]]).norm());
    return v <= 1e-2 * ref_volume || shortest < 0.25 * hmin;
  };
  // Dropping an element at an interface would open a hole inside the domain,
  // so interface moves that spoil an element are undone instead.
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& t : candidates) {
      if (!degenerate(t)) continue;
      for (int v : t)
        if (on_interface[v]) {
          pos[v] = grid_pos[v];
          on_interface[v] = 0;
          changed = true;
        }
    }
  }
  std::vector<std::array<int, 4>> elems;
  int dropped = 0;
  for (const auto& t : candidates) {
    // Moving nodes onto a curved boundary can flatten or invert an element
    // or make it a sliver; drop it.
    if (degenerate(t)) {
      ++dropped;
      continue;
    }
    elems.push_back(t);
  }
  if (elems.empty()) throw EmptyDomainError("excluded regions cover the whole box");

  // Boundary: nodes on faces used by exactly one element. A plain box has no
  // such faces off the box surface, so the scan is skipped there.
  std::vector<char> bnd(total, 0);
  if (!spec.excluded.empty() || dropped > 0) {
    std::vector<std::array<int, 3>> faces;
    faces.reserve(4 * elems.size());
    for (const auto& t : elems)
      for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> f{};
        int m = 0;
        for (int a = 0; a < 4; ++a)
          if (a != skip) f[m++] = t[a];
        std::sort(f.begin(), f.end());
        faces.push_back(f);
      }
    std::sort(faces.begin(), faces.end());
    for (std::size_t a = 0; a < faces.size();) {
      std::size_t b = a;
      while (b < faces.size() && faces[b] == faces[a]) ++b;
      if (b - a == 1)
        for (int v : faces[a]) bnd[v] = 1;
      a = b;
    }
  }
  for (int id = 0; id < total; ++id)
    if (tagged[id] || on_box[id]) bnd[id] = 1;

  std::vector<int> used(total, -1);
  Mesh m;
  for (const auto& t : elems)
    for (int v : t) used[v] = 0;
  int next = 0;
  for (int id = 0; id < total; ++id)
    if (used[id] == 0) {
      used[id] = next++;
      m.nodes.push_back(pos[id]);
      if (bnd[id]) m.boundary_nodes.push_back(used[id]);
    }
  for (auto t : elems) {
    for (int& v : t) v = used[v];
    m.elements.push_back(t);
  }
  m.box = spec.box;
  m.h = hmin;
  m.excluded = spec.excluded;
  m.finalize();
  return m;
}

Mesh unit_cube_mesh(double h) {
  MeshSpec s;
  s.box = Box{Vec3::Zero(), Vec3::Ones()};
  s.h = h;
  return build_mesh(s);
}

Mesh ball_mesh(const Vec3& c, double r, double h) {
  MeshSpec s;
  s.box = Box{c - Vec3::Constant(r), c + Vec3::Constant(r)};
  s.h = h;
  s.excluded.push_back(Region::outside_ball(c, r));
  return build_mesh(s);
}

Mesh scaled(const Mesh& m, double s) {
  Mesh out = m;
  for (auto& x : out.nodes) x *= s;
  out.box.lo *= s;
  out.box.hi *= s;
  out.h *= s;
  for (auto& g : out.excluded) {
    g.center *= s;
    g.radius *= s;
    g.lo *= s;
    g.hi *= s;
  }
  out.finalize();
  return out;
}

nlohmann::json mesh_to_json(const Mesh& m) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& x : m.nodes) j["nodes"].push_back({x[0], x[1], x[2]});
  j["elements"] = m.elements;
  j["boundary_nodes"] = m.boundary_nodes;
  j["box"] = {{m.box.lo[0], m.box.lo[1], m.box.lo[2]}, {m.box.hi[0], m.box.hi[1], m.box.hi[2]}};
  j["h"] = m.h;
  return j;
}

Mesh mesh_from_json(const nlohmann::json& j) {
  try {
    Mesh m;
    for (const auto& x : j.at("nodes")) m.nodes.emplace_back(x.at(0).get<double>(), x.at(1).get<double>(), x.at(2).get<double>());
    m.elements = j.at("elements").get<std::vector<std::array<int, 4>>>();
    m.boundary_nodes = j.at("boundary_nodes").get<std::vector<int>>();
    const auto& b = j.at("box");
    for (int d = 0; d < 3; ++d) {
      m.box.lo[d] = b.at(0).at(d).get<double>();
      m.box.hi[d] = b.at(1).at(d).get<double>();
    }
    m.h = j.at("h").get<double>();
    const int nn = m.num_nodes();
    for (const auto& t : m.elements)
      for (int v : t)
        if (v < 0 || v >= nn) throw ConfigError("element references a missing node");
    for (int v : m.boundary_nodes)
      if (v < 0 || v >= nn) throw ConfigError("boundary node index out of range");
    if (!(m.h > 0.0)) throw ConfigError("mesh spacing h must be positive");
    m.finalize();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mesh JSON: ") + e.what());
  }
}

}  // namespace katolab
