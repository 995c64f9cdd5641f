#pragma once

#include <array>
#include <compare>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hts/errors.hpp"
#include "hts/geometry.hpp"

namespace hts {

struct HalfEdge {
  int tri = -1;
  int edge = -1;
  auto operator<=>(const HalfEdge&) const = default;
};

// Corner k of a triangle sits at vertex P_k and spans counterclockwise from e_k to -e_{k-1}.
struct Corner {
  int tri = -1;
  int k = -1;
  auto operator<=>(const Corner&) const = default;
};

struct Gluing {
  HalfEdge a;
  HalfEdge b;
  bool flip = false;
};

struct SurfaceSpec {
  std::vector<std::array<Vec2, 3>> triangles;
  std::vector<Gluing> gluings;
};

struct Singularity {
  int vertex = -1;
  double angle = 0;  // cone angle in radians
  int order = 0;     // angle / pi - 2
  bool marked() const { return order == 0; }
};

inline constexpr int next3(int i) { return i == 2 ? 0 : i + 1; }
inline constexpr int prev3(int i) { return i == 0 ? 2 : i - 1; }

// Half-translation surface as glued Euclidean triangles. Immutable after construction.
// Chart of triangle t puts P_0 at the origin; edge i runs from P_i to P_{i+1} with vector e_i.
class Surface {
 public:
  Surface() = default;

  explicit Surface(SurfaceSpec spec) : spec_(std::move(spec)) {
    validate_triangles();
    wire_gluings();
    build_edges();
    build_vertices();
  }

  const SurfaceSpec& spec() const { return spec_; }
  int num_triangles() const { return int(spec_.triangles.size()); }
  int num_vertices() const { return int(vertex_angle_.size()); }
  int num_edges() const { return int(edge_halves_.size()); }

  const std::array<Vec2, 3>& triangle(int t) const { return spec_.triangles[t]; }
  Vec2 edge(HalfEdge h) const { return spec_.triangles[h.tri][h.edge]; }
  Vec2 vertex_pos(int t, int k) const {
    const auto& e = spec_.triangles[t];
    if (k == 0) return {};
    if (k == 1) return e[0];
    return e[0] + e[1];
  }
  std::array<Vec2, 3> vertex_positions(int t) const { return {vertex_pos(t, 0), vertex_pos(t, 1), vertex_pos(t, 2)}; }

  HalfEdge partner(HalfEdge h) const { return partner_[h.tri][h.edge]; }
  bool flip(HalfEdge h) const { return flip_[h.tri][h.edge]; }

  // Map from the chart of h.tri to the chart of partner(h).tri, identifying the glued edges.
  Chart gluing_map(HalfEdge h) const {
    HalfEdge o = partner(h);
    int s = flip(h) ? -1 : 1;
    Vec2 P = vertex_pos(h.tri, h.edge);
    Vec2 Q = vertex_pos(o.tri, next3(o.edge));
    return {s, Q - P * double(s)};
  }

  int vertex_of(Corner c) const { return corner_vertex_[c.tri][c.k]; }
  double corner_angle(Corner c) const { return corner_angle_[c.tri][c.k]; }
  double cone_angle(int v) const { return vertex_angle_[v]; }
  // Angular position of the e_k ray of corner c in the cyclic coordinate [0, angle) of its vertex.
  double corner_offset(Corner c) const { return corner_offset_[c.tri][c.k]; }
  const std::vector<Corner>& corners_around(int v) const { return vertex_corners_[v]; }

  Corner ccw_next(Corner c) const {
    HalfEdge o = partner({c.tri, prev3(c.k)});
    return {o.tri, o.edge};
  }
  Corner cw_next(Corner c) const {
    HalfEdge o = partner({c.tri, c.k});
    return {o.tri, next3(o.edge)};
  }

  int edge_id(HalfEdge h) const { return edge_id_[h.tri][h.edge]; }
  const std::array<HalfEdge, 2>& edge_halves(int e) const { return edge_halves_[e]; }

  double triangle_area(int t) const { return 0.5 * cross(spec_.triangles[t][0], spec_.triangles[t][1]); }
  double area() const {
    double a = 0;
    for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
    return a;
  }

  int euler_characteristic() const { return num_vertices() - num_edges() + num_triangles(); }
  int num_components() const { return components_; }
  // Sum of the genera of the connected components.
  int genus() const { return (2 * components_ - euler_characteristic()) / 2; }

  int vertex_order(int v) const { return int(std::lround(vertex_angle_[v] / pi)) - 2; }

  std::vector<Singularity> singularities() const {
    std::vector<Singularity> out;
    for (int v = 0; v < num_vertices(); ++v) out.push_back({v, vertex_angle_[v], vertex_order(v)});
    return out;
  }

  bool has_flips() const {
    for (const auto& g : spec_.gluings)
      if (g.flip) return true;
    return false;
  }

  double min_edge_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& tri : spec_.triangles)
      for (const auto& e : tri) m = std::min(m, norm(e));
    return m;
  }
  double max_edge_length() const {
    double m = 0;
    for (const auto& tri : spec_.triangles)
      for (const auto& e : tri) m = std::max(m, norm(e));
    return m;
  }

 private:
  void validate_triangles() {
    if (spec_.triangles.empty()) throw ParseError("surface has no triangles");
    for (std::size_t t = 0; t < spec_.triangles.size(); ++t) {
      const auto& e = spec_.triangles[t];
      double scale = norm(e[0]) + norm(e[1]) + norm(e[2]);
      if (norm(e[0] + e[1] + e[2]) > eps_geom * std::max(1.0, scale))
        throw DegenerateTriangle("triangle " + std::to_string(t) + " edge vectors do not sum to zero");
      if (cross(e[0], e[1]) <= eps_geom * std::max(1.0, scale * scale))
        throw DegenerateTriangle("triangle " + std::to_string(t) + " has non-positive signed area");
    }
  }

  void wire_gluings() {
    const int F = num_triangles();
    partner_.assign(F, {HalfEdge{}, HalfEdge{}, HalfEdge{}});
    flip_.assign(F, {false, false, false});
    auto check = [&](HalfEdge h) {
      if (h.tri < 0 || h.tri >= F || h.edge < 0 || h.edge > 2)
        throw ParseError("gluing references a missing edge");
      if (partner_[h.tri][h.edge].tri != -1)
        throw UnglueableEdge("edge (" + std::to_string(h.tri) + "," + std::to_string(h.edge) + ") glued twice");
    };
    for (const auto& g : spec_.gluings) {
      check(g.a);
      check(g.b);
      if (g.a == g.b) throw UnglueableEdge("edge glued to itself");
      Vec2 va = edge(g.a), vb = edge(g.b);
      if (std::abs(norm(va) - norm(vb)) > eps_geom)
        throw UnglueableEdge("glued edges have lengths " + std::to_string(norm(va)) + " and " + std::to_string(norm(vb)));
      Vec2 expect = g.flip ? va : -va;
      if (norm(vb - expect) > eps_geom * std::max(1.0, norm(va)))
        throw UnglueableEdge("glued edge vectors are not related by the flip flag");
      partner_[g.a.tri][g.a.edge] = g.b;
      partner_[g.b.tri][g.b.edge] = g.a;
      flip_[g.a.tri][g.a.edge] = flip_[g.b.tri][g.b.edge] = g.flip;
    }
    for (int t = 0; t < F; ++t)
      for (int i = 0; i < 3; ++i)
        if (partner_[t][i].tri == -1)
          throw UnglueableEdge("edge (" + std::to_string(t) + "," + std::to_string(i) + ") is not glued");
  }

  void build_vertices() {
    const int F = num_triangles();
    corner_vertex_.assign(F, {-1, -1, -1});
    corner_angle_.assign(F, {0, 0, 0});
    corner_offset_.assign(F, {0, 0, 0});
    for (int t = 0; t < F; ++t)
      for (int k = 0; k < 3; ++k) {
        const auto& e = spec_.triangles[t];
        corner_angle_[t][k] = ccw_angle(e[k], -e[prev3(k)]);
      }
    for (int t = 0; t < F; ++t)
      for (int k = 0; k < 3; ++k) {
        if (corner_vertex_[t][k] != -1) continue;
        int v = int(vertex_angle_.size());
        std::vector<Corner> orbit;
        double acc = 0;
        Corner c{t, k};
        do {
          corner_vertex_[c.tri][c.k] = v;
          corner_offset_[c.tri][c.k] = acc;
          acc += corner_angle_[c.tri][c.k];
          orbit.push_back(c);
          c = ccw_next(c);
        } while (!(c == Corner{t, k}));
        double m = acc / pi;
        if (std::abs(m - std::round(m)) > eps_ang * 1e3 || std::round(m) < 1)
          throw BadConeAngle("vertex " + std::to_string(v) + " has cone angle " + std::to_string(acc));
        vertex_angle_.push_back(std::round(m) * pi);
        vertex_corners_.push_back(std::move(orbit));
      }
    int total = 0;
    for (int v = 0; v < num_vertices(); ++v) total += vertex_order(v);
    // Gauss-Bonnet is checked once components are known.
    components_ = count_components();
    if (total != 4 * genus() - 4 * components_)
      throw BadConeAngle("cone angles violate Gauss-Bonnet");
  }

  int count_components() const {
    std::vector<int> parent(num_triangles());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (int t = 0; t < num_triangles(); ++t)
      for (int i = 0; i < 3; ++i) parent[find(t)] = find(partner_[t][i].tri);
    int n = 0;
    for (int t = 0; t < num_triangles(); ++t) n += find(t) == t;
    return n;
  }

  void build_edges() {
    edge_id_.assign(num_triangles(), {-1, -1, -1});
    for (int t = 0; t < num_triangles(); ++t)
      for (int i = 0; i < 3; ++i) {
        if (edge_id_[t][i] != -1) continue;
        HalfEdge o = partner_[t][i];
        int id = int(edge_halves_.size());
        edge_id_[t][i] = edge_id_[o.tri][o.edge] = id;
        edge_halves_.push_back({HalfEdge{t, i}, o});
      }
  }

  SurfaceSpec spec_;
  std::vector<std::array<HalfEdge, 3>> partner_;
  std::vector<std::array<bool, 3>> flip_;
  std::vector<std::array<int, 3>> corner_vertex_;
  std::vector<std::array<double, 3>> corner_angle_;
  std::vector<std::array<double, 3>> corner_offset_;
  std::vector<double> vertex_angle_;
  std::vector<std::vector<Corner>> vertex_corners_;
  std::vector<std::array<int, 3>> edge_id_;
  std::vector<std::array<HalfEdge, 2>> edge_halves_;
  int components_ = 0;
};

// Zero orders of the genuine zeroes; marked points (angle 2pi) are excluded.
inline std::vector<int> stratum_signature(const Surface& S) {
  std::vector<int> out;
  for (const auto& s : S.singularities())
    if (s.order != 0) out.push_back(s.order);
  std::sort(out.rbegin(), out.rend());
  return out;
}

inline Surface scaled(const Surface& S, double lambda) {
  SurfaceSpec spec = S.spec();
  for (auto& tri : spec.triangles)
    for (auto& e : tri) e = e * lambda;
  return Surface(std::move(spec));
}

inline Surface normalize_area(const Surface& S) { return scaled(S, 1.0 / std::sqrt(S.area())); }

// Per-triangle sign normalization: negating all three vectors of a triangle is a chart change by
// rotation through pi, so the normalized spec identifies S with -S.
inline SurfaceSpec canonical_form(const Surface& S) {
  SurfaceSpec spec = S.spec();
  std::vector<int> neg(spec.triangles.size(), 1);
  for (std::size_t t = 0; t < spec.triangles.size(); ++t)
    if (lex_sign(spec.triangles[t][0], 1e-7) < 0) {
      neg[t] = -1;
      for (auto& e : spec.triangles[t]) e = -e;
    }
  for (auto& g : spec.gluings) {
    if (neg[g.a.tri] != neg[g.b.tri]) g.flip = !g.flip;
    if (g.b < g.a) std::swap(g.a, g.b);
  }
  std::sort(spec.gluings.begin(), spec.gluings.end(),
            [](const Gluing& x, const Gluing& y) { return x.a < y.a; });
  return spec;
}

inline bool same_canonical_form(const Surface& A, const Surface& B, double tol = 1e-7) {
  SurfaceSpec a = canonical_form(A), b = canonical_form(B);
  if (a.triangles.size() != b.triangles.size() || a.gluings.size() != b.gluings.size()) return false;
  for (std::size_t t = 0; t < a.triangles.size(); ++t)
    for (int i = 0; i < 3; ++i)
      if (!near(a.triangles[t][i], b.triangles[t][i], tol)) return false;
  for (std::size_t g = 0; g < a.gluings.size(); ++g)
    if (a.gluings[g].a != b.gluings[g].a || a.gluings[g].b != b.gluings[g].b || a.gluings[g].flip != b.gluings[g].flip)
      return false;
  return true;
}

struct DoubleCover {
  Surface cover;
  bool trivial = false;            // the cover is two disjoint copies (q is already a square)
  std::vector<int> base_triangle;  // cover triangle -> triangle of S
  std::vector<int> sheet;          // +1 or -1
  std::vector<int> deck;           // deck involution on cover triangles (chart change z -> -z)
};

// Copy t (sheet +) keeps the chart of t, copy t + F (sheet -) negates it. Non-flip gluings join
// equal sheets, flip gluings join opposite sheets, so the cover has only translation gluings.
inline DoubleCover orientation_double_cover(const Surface& S) {
  const int F = S.num_triangles();
  SurfaceSpec spec;
  spec.triangles.resize(2 * F);
  for (int t = 0; t < F; ++t)
    for (int i = 0; i < 3; ++i) {
      spec.triangles[t][i] = S.triangle(t)[i];
      spec.triangles[t + F][i] = -S.triangle(t)[i];
    }
  for (const auto& g : S.spec().gluings) {
    int off = g.flip ? F : 0;
    spec.gluings.push_back({{g.a.tri, g.a.edge}, {g.b.tri + off, g.b.edge}, false});
    spec.gluings.push_back({{g.a.tri + F, g.a.edge}, {(g.b.tri + F + off) % (2 * F), g.b.edge}, false});
  }
  DoubleCover out;
  out.cover = Surface(std::move(spec));
  out.trivial = out.cover.num_components() == 2;
  for (int t = 0; t < 2 * F; ++t) {
    out.base_triangle.push_back(t % F);
    out.sheet.push_back(t < F ? 1 : -1);
    out.deck.push_back(t < F ? t + F : t - F);
  }
  return out;
}

}  // namespace hts
