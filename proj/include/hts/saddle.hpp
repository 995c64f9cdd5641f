#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "hts/flow.hpp"

namespace hts {

struct SaddleConnection {
  Corner start;     // leaves the vertex of this corner into the corner
  Corner end;       // arrives at the vertex of this corner from inside it
  int v0 = -1;
  int v1 = -1;
  Vec2 holonomy{};  // developed displacement in the chart of start.tri
  double length = 0;
  std::vector<HalfEdge> crossings;  // exit half-edges, in order
  double angle0 = 0;                // angular position of the outgoing direction at v0
  double angle1 = 0;                // angular position of the reversed direction at v1

  Vec2 dir() const { return holonomy / length; }
  // Direction of arrival in the chart of end.tri.
  Vec2 end_dir(const Surface& S) const {
    Vec2 d = dir();
    bool fl = false;
    for (const auto& h : crossings) fl ^= S.flip(h);
    return fl ? -d : d;
  }
};

inline SaddleConnection reversed(const Surface& S, const SaddleConnection& c) {
  SaddleConnection r;
  r.start = c.end;
  r.end = c.start;
  r.v0 = c.v1;
  r.v1 = c.v0;
  Vec2 d = -c.end_dir(S);
  r.holonomy = d * c.length;
  r.length = c.length;
  for (auto it = c.crossings.rbegin(); it != c.crossings.rend(); ++it) r.crossings.push_back(S.partner(*it));
  r.angle0 = c.angle1;
  r.angle1 = c.angle0;
  return r;
}

// The triangle edge an uncrossing connection runs along (either side of its start corner).
inline HalfEdge connection_edge(const SaddleConnection& c) {
  return {c.start.tri, c.end.k == next3(c.start.k) ? c.start.k : c.end.k};
}

// Canonical identity of a connection up to orientation reversal.
inline std::vector<HalfEdge> connection_key(const Surface& S, const SaddleConnection& c) {
  if (c.crossings.empty()) {
    HalfEdge h = connection_edge(c);
    HalfEdge o = S.partner(h);
    return {HalfEdge{-1, -1}, std::min(h, o)};  // sentinel keeps edges apart from crossing words
  }
  std::vector<HalfEdge> rev;
  for (auto it = c.crossings.rbegin(); it != c.crossings.rend(); ++it) rev.push_back(S.partner(*it));
  return std::min(c.crossings, rev);
}

inline TracedSegment trace_connection(const Surface& S, const SaddleConnection& c) {
  return trace_from_vertex(S, c.start, c.dir(), c.length + 1e-7 * std::max(1.0, c.length));
}

struct EnumerationOptions {
  std::size_t node_budget = 10'000'000;
};

namespace detail {

// Directions strictly between lo and hi (counterclockwise, opening < pi).
inline bool strictly_inside(Vec2 lo, Vec2 hi, Vec2 x) {
  double s = norm(x);
  return cross(lo, x) > 1e-12 * norm(lo) * s && cross(x, hi) > 1e-12 * norm(hi) * s;
}
inline bool wedge_open(Vec2 lo, Vec2 hi) { return cross(lo, hi) > 1e-14 * norm(lo) * norm(hi); }
inline Vec2 later(Vec2 a, Vec2 b) { return cross(a, b) > 0 ? b : a; }    // more counterclockwise
inline Vec2 earlier(Vec2 a, Vec2 b) { return cross(a, b) > 0 ? a : b; }  // more clockwise

struct SearchFrame {
  HalfEdge crossed;  // exit half-edge in the previous triangle
  Chart chart;       // local chart of the entered triangle -> developed plane
  Vec2 lo, hi;       // visibility wedge
  int depth;
};

}  // namespace detail

// Every saddle connection (between vertices, marked points included) of length <= L, once per
// orientation class, sorted by length.
inline std::vector<SaddleConnection> enumerate_saddle_connections(const Surface& S, double L,
                                                                  const EnumerationOptions& opt = {}) {
  if (!(L > 0)) throw PreconditionViolation("length bound must be positive");
  std::map<std::vector<HalfEdge>, SaddleConnection> found;
  std::size_t nodes = 0;
  const double tolL = L * (1 + 1e-12) + eps_geom;

  auto record = [&](SaddleConnection c) {
    auto key = connection_key(S, c);
    found.emplace(std::move(key), std::move(c));
  };

  for (int t = 0; t < S.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) {
      Corner corner{t, k};
      Vec2 origin = S.vertex_pos(t, k);
      Chart base{1, -origin};  // chart of t, vertex at origin
      const auto& e = S.triangle(t);
      Vec2 lo = e[k], hi = -e[prev3(k)];
      if (norm(e[k]) <= tolL) {
        SaddleConnection c;
        c.start = corner;
        c.end = {t, next3(k)};
        c.v0 = S.vertex_of(corner);
        c.v1 = S.vertex_of(c.end);
        c.holonomy = e[k];
        c.length = norm(e[k]);
        c.angle0 = S.corner_offset(corner);
        c.angle1 = S.corner_offset(c.end) + S.corner_angle(c.end);
        record(std::move(c));
      }
      // Depth-first search through the opposite edge.
      std::vector<HalfEdge> path;
      std::function<void(const detail::SearchFrame&)> visit = [&](const detail::SearchFrame& f) {
        if (++nodes > opt.node_budget) throw BudgetExceeded("saddle connection search exceeded node budget");
        path.resize(f.depth);
        path.push_back(f.crossed);
        HalfEdge in = S.partner(f.crossed);
        int u = in.tri, j = in.edge;
        Vec2 Qr = f.chart.apply(S.vertex_pos(u, next3(j)));  // clockwise end of the crossed edge
        Vec2 Ql = f.chart.apply(S.vertex_pos(u, j));         // counterclockwise end
        Vec2 W = f.chart.apply(S.vertex_pos(u, prev3(j)));   // apex
        double dW = norm(W);
        if (detail::strictly_inside(f.lo, f.hi, W) && dW <= tolL) {
          SaddleConnection c;
          c.start = corner;
          c.end = {u, prev3(j)};
          c.v0 = S.vertex_of(corner);
          c.v1 = S.vertex_of(c.end);
          c.holonomy = W;
          c.length = dW;
          c.crossings = path;
          c.angle0 = angle_at_vertex(S, corner, W);
          c.angle1 = angle_at_vertex(S, c.end, -f.chart.inverse().apply_vec(W));
          record(std::move(c));
        }
        // Sub-wedges through the two far edges of the entered triangle.
        struct Sub {
          int edge;
          Vec2 a, b;
        };
        for (const Sub& sub : {Sub{next3(j), Qr, W}, Sub{prev3(j), W, Ql}}) {
          Vec2 lo2 = detail::later(f.lo, sub.a), hi2 = detail::earlier(f.hi, sub.b);
          if (!detail::wedge_open(lo2, hi2)) continue;
          if (dist_point_segment({0, 0}, sub.a, sub.b) > tolL) continue;
          HalfEdge out{u, sub.edge};
          Chart next = f.chart.compose(S.gluing_map(out).inverse());
          visit({out, next, lo2, hi2, f.depth + 1});
        }
      };
      HalfEdge first{t, next3(k)};
      Vec2 a = base.apply(S.vertex_pos(t, next3(k))), b = base.apply(S.vertex_pos(t, prev3(k)));
      if (dist_point_segment({0, 0}, a, b) > tolL) continue;
      visit({first, base.compose(S.gluing_map(first).inverse()), lo, hi, 0});
    }

  std::vector<SaddleConnection> out;
  out.reserve(found.size());
  for (auto& [key, c] : found) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(),
                   [](const SaddleConnection& a, const SaddleConnection& b) { return a.length < b.length - 1e-12; });
  return out;
}

inline double ell_min(const Surface& S) {
  auto cs = enumerate_saddle_connections(S, S.min_edge_length());
  return cs.front().length;
}

// Angles (both sides) at the vertex where `in` ends and `out` starts.
inline std::pair<double, double> junction_angles(const Surface& S, const SaddleConnection& in, const SaddleConnection& out) {
  double cone = S.cone_angle(in.v1);
  double a = std::fmod(out.angle0 - in.angle1, cone);
  if (a < 0) a += cone;
  return {a, cone - a};
}

inline bool geodesic_junction(const Surface& S, const SaddleConnection& in, const SaddleConnection& out) {
  if (in.v1 != out.v0) return false;
  auto [a, b] = junction_angles(S, in, out);
  return a >= pi - 1e-7 && b >= pi - 1e-7;
}

struct ShortestLengths {
  double ell_min = 0;
  double ell_min_dagger = 0;
  double systole = 0;
};

// Shortest closed geodesic. Candidates are cylinder cores (a closed trajectory running next to a
// boundary connection) and closed chains of connections meeting at angle >= pi on both sides.
// A candidate of length <= R found with search radius R is certified.
inline double systole(const Surface& S, double start_radius = 0) {
  double R = start_radius > 0 ? start_radius : 2 * ell_min(S);
  while (true) {
    auto cs = enumerate_saddle_connections(S, R);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cs) {
      // A closed trajectory parallel to c and just off its midpoint is a core of the cylinder c bounds.
      auto half = trace_from_vertex(S, c.start, c.dir(), c.length / 2);
      if (half.hit) continue;
      for (int side : {-1, 1}) {
        auto off = trace_ray(S, half.end, perp(half.end_dir) * double(side), 1e-6 * std::max(1.0, c.length));
        if (off.hit) continue;
        Vec2 d = off.direction_flipped ? -half.end_dir : half.end_dir;
        auto closed = closed_trajectory(S, off.end, d, std::min(R, best) + 1e-9);
        if (closed) best = std::min(best, closed->length);
      }
    }
    // Closed chains of connections.
    std::vector<SaddleConnection> dirs;
    for (const auto& c : cs) {
      dirs.push_back(c);
      dirs.push_back(reversed(S, c));
    }
    std::vector<int> chain;
    std::function<void(double)> extend = [&](double len) {
      const SaddleConnection& last = dirs[chain.back()];
      const SaddleConnection& first = dirs[chain.front()];
      if (geodesic_junction(S, last, first)) best = std::min(best, len);
      if (chain.size() >= 12) return;
      for (int i = 0; i < int(dirs.size()); ++i) {
        if (len + dirs[i].length > std::min(R, best) + 1e-12) break;
        if (i < chain.front()) continue;  // each cyclic chain is explored from its smallest member
        if (!geodesic_junction(S, last, dirs[i])) continue;
        chain.push_back(i);
        extend(len + dirs[i].length);
        chain.pop_back();
      }
    };
    for (int i = 0; i < int(dirs.size()); ++i) {
      if (dirs[i].length > std::min(R, best)) break;
      chain = {i};
      extend(dirs[i].length);
    }
    if (best <= R) return best;
    R *= 2;
  }
}

inline ShortestLengths shortest_lengths(const Surface& S) {
  ShortestLengths out;
  out.ell_min = ell_min(S);
  out.ell_min_dagger = std::min(1.0, out.ell_min);
  out.systole = systole(S);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Delaunay triangulation by edge flips.

namespace detail {

// > 0 when d lies inside the circumcircle of the counterclockwise triangle (a, b, c).
inline double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  Vec2 A = a - d, B = b - d, C = c - d;
  return norm2(A) * cross(B, C) - norm2(B) * cross(A, C) + norm2(C) * cross(A, B);
}

}  // namespace detail

// Normalized in-circle violation of interior edge h: positive when the apex of the neighbouring
// triangle lies strictly inside the circumcircle of h.tri.
inline double delaunay_violation(const Surface& S, HalfEdge h) {
  HalfEdge o = S.partner(h);
  auto P = S.vertex_positions(h.tri);
  Chart back = S.gluing_map(h).inverse();
  Vec2 D = back.apply(S.vertex_pos(o.tri, prev3(o.edge)));
  double scale = std::max({norm(P[1] - P[0]), norm(P[2] - P[1]), norm(P[0] - P[2]), norm(D - P[h.edge])});
  return detail::incircle(P[0], P[1], P[2], D) / std::pow(scale, 4);
}

// Replaces the diagonal h by the other diagonal of its quadrilateral.
inline Surface flip_edge(const Surface& S, HalfEdge h) {
  HalfEdge o = S.partner(h);
  if (o.tri == h.tri) throw PreconditionViolation("cannot flip an edge glued within one triangle");
  const int t = h.tri, i = h.edge, u = o.tri, j = o.edge;
  auto P = S.vertex_positions(t);
  Chart back = S.gluing_map(h).inverse();  // chart of u -> chart of t
  Vec2 Pi = P[i], Pn = P[next3(i)], A = P[prev3(i)];
  Vec2 D = back.apply(S.vertex_pos(u, prev3(j)));
  if (orient(D, Pn, A) <= 0 || orient(A, Pi, D) <= 0) throw PreconditionViolation("quadrilateral is not strictly convex");

  SurfaceSpec spec = S.spec();
  spec.triangles[t] = {Pn - D, A - Pn, D - A};
  spec.triangles[u] = {Pi - A, D - Pi, A - D};
  struct Target {
    HalfEdge h;
    int sign;
  };
  std::map<HalfEdge, Target> moved;
  moved[{t, next3(i)}] = {{t, 1}, 1};
  moved[{t, prev3(i)}] = {{u, 0}, 1};
  moved[{u, next3(j)}] = {{u, 1}, back.sign};
  moved[{u, prev3(j)}] = {{t, 0}, back.sign};
  auto image = [&](HalfEdge x) -> Target {
    auto it = moved.find(x);
    return it == moved.end() ? Target{x, 1} : it->second;
  };
  std::vector<Gluing> gl;
  for (const auto& g : S.spec().gluings) {
    bool touches_diag = (g.a == h || g.a == o);
    if (touches_diag) continue;
    Target a = image(g.a), b = image(g.b);
    gl.push_back({a.h, b.h, g.flip != ((a.sign < 0) != (b.sign < 0))});
  }
  gl.push_back({{t, 2}, {u, 2}, false});
  spec.gluings = std::move(gl);
  return Surface(std::move(spec));
}

struct Triangulation {
  Surface surface;  // same flat surface; triangle edges are saddle connections
  int flips = 0;
};

// Flips strictly violating edges until none remain. Cocircular configurations keep their
// current diagonal, so the result is deterministic for a given input triangulation.
inline Triangulation delaunay_triangulation(const Surface& S, int max_flips = 100000) {
  Triangulation out{S, 0};
  bool changed = true;
  while (changed) {
    changed = false;
    for (int e = 0; e < out.surface.num_edges() && !changed; ++e) {
      HalfEdge h = out.surface.edge_halves(e)[0];
      if (out.surface.partner(h).tri == h.tri) continue;
      if (delaunay_violation(out.surface, h) > eps_geom) {
        out.surface = flip_edge(out.surface, h);
        ++out.flips;
        changed = true;
      }
    }
    if (out.flips > max_flips) throw BudgetExceeded("Delaunay flip budget exceeded");
  }
  return out;
}

inline double max_delaunay_violation(const Surface& S) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int e = 0; e < S.num_edges(); ++e)
    for (const HalfEdge& h : S.edge_halves(e)) worst = std::max(worst, delaunay_violation(S, h));
  return worst;
}

// ---------------------------------------------------------------------------------------------
// Sub-segments, disjointness, complexes.

struct SubSegment {
  int tri;
  Vec2 a, b;  // local chart of tri
  double s0, s1;
};

inline std::vector<SubSegment> subsegments(const Surface& S, const TracedSegment& seg) {
  std::vector<SubSegment> out;
  int tri = seg.start.tri;
  Vec2 p = seg.start.p;
  double s = 0;
  for (const auto& c : seg.crossings) {
    Vec2 x = S.vertex_pos(c.exit.tri, c.exit.edge) + S.edge(c.exit) * c.u;
    out.push_back({tri, p, x, s, c.s});
    HalfEdge o = S.partner(c.exit);
    tri = o.tri;
    p = S.vertex_pos(o.tri, o.edge) + S.edge(o) * (1 - c.u);
    s = c.s;
  }
  out.push_back({tri, p, seg.end.p, s, seg.length});
  return out;
}

inline std::vector<SubSegment> connection_subsegments(const Surface& S, const SaddleConnection& c) {
  if (c.crossings.empty()) {
    HalfEdge h = connection_edge(c);
    Chart g = S.gluing_map(h);
    Vec2 a = S.vertex_pos(c.start.tri, c.start.k), b = S.vertex_pos(c.end.tri, c.end.k);
    return {{h.tri, a, b, 0, c.length}, {S.partner(h).tri, g.apply(a), g.apply(b), 0, c.length}};
  }
  auto seg = trace_connection(S, c);
  return subsegments(S, seg);
}

namespace detail {

// Intersection parameters of segments [a,b] and [c,d], if they cross or touch.
inline std::optional<std::pair<double, double>> segment_intersection(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double tol) {
  Vec2 r = b - a, s = d - c;
  double den = cross(r, s);
  double scale = std::max(norm(r), norm(s));
  if (std::abs(den) <= 1e-12 * scale * scale) return std::nullopt;  // parallel: handled as overlap elsewhere
  double t = cross(c - a, s) / den;
  double u = cross(c - a, r) / den;
  double tt = tol / std::max(norm(r), 1e-300), tu = tol / std::max(norm(s), 1e-300);
  if (t < -tt || t > 1 + tt || u < -tu || u > 1 + tu) return std::nullopt;
  return std::pair{t, u};
}

inline bool near_triangle_vertex(const Surface& S, int tri, Vec2 x, double tol) {
  auto P = S.vertex_positions(tri);
  for (const Vec2& v : P)
    if (norm(x - v) <= tol) return true;
  return false;
}

}  // namespace detail

inline bool connections_disjoint(const Surface& S, const SaddleConnection& a, const SaddleConnection& b) {
  if (connection_key(S, a) == connection_key(S, b)) return true;
  auto A = connection_subsegments(S, a), B = connection_subsegments(S, b);
  const double tol = 1e-9;
  for (const auto& x : A)
    for (const auto& y : B) {
      if (x.tri != y.tri) continue;
      auto hit = detail::segment_intersection(x.a, x.b, y.a, y.b, tol);
      if (!hit) continue;
      Vec2 p = x.a + (x.b - x.a) * hit->first;
      if (!detail::near_triangle_vertex(S, x.tri, p, 1e-7)) return false;
    }
  return true;
}

struct Complex {
  std::vector<SaddleConnection> connections;
  std::vector<std::array<int, 3>> triangles;  // indices into connections

  double max_length() const {
    double m = 0;
    for (const auto& c : connections) m = std::max(m, c.length);
    return m;
  }
  int size() const { return int(connections.size()); }
};

inline int triangulation_edge_count(const Surface& S) { return 3 * (S.num_vertices() - S.euler_characteristic()); }

// Triangles of the complex: faces of the connection graph bounded by exactly three connections
// whose corner angles sum to pi.
inline std::vector<std::array<int, 3>> complex_triangles(const Surface& S, const std::vector<SaddleConnection>& cs) {
  struct Dart {
    int conn;
    bool forward;
    int v;         // start vertex
    double angle;  // angular position at v
  };
  std::vector<Dart> darts;
  for (int i = 0; i < int(cs.size()); ++i) {
    darts.push_back({i, true, cs[i].v0, cs[i].angle0});
    darts.push_back({i, false, cs[i].v1, cs[i].angle1});
  }
  std::map<int, std::vector<int>> around;
  for (int d = 0; d < int(darts.size()); ++d) around[darts[d].v].push_back(d);
  for (auto& [v, ds] : around)
    std::sort(ds.begin(), ds.end(), [&](int x, int y) { return darts[x].angle < darts[y].angle; });
  auto twin = [](int d) { return d ^ 1; };
  // Face walk: arrive along dart d at its end vertex, turn to the next dart clockwise, which keeps
  // the face on the left.
  auto next_in_face = [&](int d, double& turn) {
    int t = twin(d);
    const auto& ds = around[darts[t].v];
    auto pos = std::find(ds.begin(), ds.end(), t) - ds.begin();
    int n = ds[(pos + ds.size() - 1) % ds.size()];
    double cone = S.cone_angle(darts[t].v);
    double a = std::fmod(darts[t].angle - darts[n].angle, cone);
    if (a <= 0) a += cone;
    turn = a;
    return n;
  };
  std::set<int> used;
  std::vector<std::array<int, 3>> tris;
  for (int d0 = 0; d0 < int(darts.size()); ++d0) {
    if (used.count(d0)) continue;
    std::vector<int> face;
    double total = 0;
    int d = d0;
    do {
      face.push_back(d);
      used.insert(d);
      double turn;
      d = next_in_face(d, turn);
      total += turn;
      if (face.size() > darts.size()) break;
    } while (d != d0);
    if (face.size() == 3 && std::abs(total - pi) < 1e-6) {
      std::array<int, 3> tri{darts[face[0]].conn, darts[face[1]].conn, darts[face[2]].conn};
      tris.push_back(tri);
    }
  }
  return tris;
}

inline Complex make_complex(const Surface& S, std::vector<SaddleConnection> cs) {
  Complex K;
  K.triangles = complex_triangles(S, cs);
  K.connections = std::move(cs);
  return K;
}

inline bool contains(const Surface& S, const Complex& K, const SaddleConnection& c) {
  auto key = connection_key(S, c);
  for (const auto& k : K.connections)
    if (connection_key(S, k) == key) return true;
  return false;
}

inline bool is_triangulation(const Surface& S, const Complex& K) { return K.size() == triangulation_edge_count(S); }

// Enlarges K by one connection of length <= 2 l_K + l_gamma.
inline Complex extend_complex(const Surface& S, const Complex& K, const SaddleConnection& gamma) {
  if (contains(S, K, gamma)) throw NotApplicable("connection already lies in the complex");
  if (is_triangulation(S, K)) throw NotApplicable("complex is already a triangulation");
  bool disjoint = true;
  for (const auto& k : K.connections) disjoint = disjoint && connections_disjoint(S, k, gamma);
  std::vector<SaddleConnection> cs = K.connections;
  if (disjoint) {
    cs.push_back(gamma);
    return make_complex(S, std::move(cs));
  }
  double bound = 2 * K.max_length() + gamma.length;
  for (const auto& c : enumerate_saddle_connections(S, bound + eps_geom)) {
    if (contains(S, K, c)) continue;
    bool ok = true;
    for (const auto& k : K.connections) {
      if (!connections_disjoint(S, k, c)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      cs.push_back(c);
      return make_complex(S, std::move(cs));
    }
  }
  throw NotApplicable("no disjoint connection within the enlargement bound");
}

// Triangle edges of S as saddle connections (S's own triangulation).
inline std::vector<SaddleConnection> edge_connections(const Surface& S) {
  std::vector<SaddleConnection> out;
  for (int e = 0; e < S.num_edges(); ++e) {
    HalfEdge h = S.edge_halves(e)[0];
    SaddleConnection c;
    c.start = {h.tri, h.edge};
    c.end = {h.tri, next3(h.edge)};
    c.v0 = S.vertex_of(c.start);
    c.v1 = S.vertex_of(c.end);
    c.holonomy = S.edge(h);
    c.length = norm(c.holonomy);
    c.angle0 = S.corner_offset(c.start);
    c.angle1 = S.corner_offset(c.end) + S.corner_angle(c.end);
    out.push_back(std::move(c));
  }
  return out;
}

// Grows {seed} to a triangulation, feeding Delaunay edges (shortest first) to extend_complex.
inline Complex triangulation_containing(const Surface& S, const SaddleConnection& seed) {
  Complex K = make_complex(S, {seed});
  auto del = delaunay_triangulation(S);
  // Delaunay edges live on the flipped surface; re-find them on S by enumeration.
  double Lmax = 0;
  for (const auto& c : edge_connections(del.surface)) Lmax = std::max(Lmax, c.length);
  auto all = enumerate_saddle_connections(S, Lmax + 1e-7);
  std::vector<SaddleConnection> candidates;
  for (const auto& dc : edge_connections(del.surface))
    for (const auto& c : all)
      if (std::abs(c.length - dc.length) < 1e-9 && std::abs(std::abs(cross(c.dir(), dc.dir()))) < 1e-9 &&
          c.v0 + c.v1 == dc.v0 + dc.v1) {
        candidates.push_back(c);
      }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.length < b.length; });
  int guard = 0;
  while (!is_triangulation(S, K)) {
    bool progressed = false;
    for (const auto& g : candidates) {
      if (contains(S, K, g)) continue;
      K = extend_complex(S, K, g);
      progressed = true;
      break;
    }
    if (!progressed || ++guard > 10 * triangulation_edge_count(S)) {
      // Delaunay candidates exhausted: fall back to any short connection.
      for (const auto& c : enumerate_saddle_connections(S, 2 * K.max_length() + Lmax)) {
        if (contains(S, K, c)) continue;
        try {
          K = extend_complex(S, K, c);
          progressed = true;
          break;
        } catch (const NotApplicable&) {
        }
      }
      if (!progressed) throw NotApplicable("could not complete the triangulation");
    }
  }
  return K;
}

// ---------------------------------------------------------------------------------------------
// Period coordinates.

struct PeriodChart {
  Eigen::MatrixXd kernel;        // E x k basis of edge holonomies satisfying triangle closure
  std::vector<int> basis;        // chosen edge ids
  std::vector<Vec2> edge_values; // current holonomy of every edge (canonical half)
};

namespace detail {

// Sign relating the vector of half-edge h to the canonical value of its edge.
inline int half_edge_sign(const Surface& S, HalfEdge h) {
  int e = S.edge_id(h);
  if (S.edge_halves(e)[0] == h) return 1;
  return S.flip(h) ? 1 : -1;
}

}  // namespace detail

inline Eigen::MatrixXd closure_matrix(const Surface& S) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(S.num_triangles(), S.num_edges());
  for (int t = 0; t < S.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) C(t, S.edge_id({t, i})) += detail::half_edge_sign(S, {t, i});
  return C;
}

inline PeriodChart period_chart(const Surface& S, const std::vector<int>& basis) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(closure_matrix(S));
  PeriodChart pc;
  pc.kernel = lu.kernel();
  pc.basis = basis;
  for (int e = 0; e < S.num_edges(); ++e) pc.edge_values.push_back(S.edge(S.edge_halves(e)[0]));
  Eigen::MatrixXd sub(basis.size(), pc.kernel.cols());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    if (basis[r] < 0 || basis[r] >= S.num_edges()) throw RankDeficient("basis edge out of range");
    sub.row(r) = pc.kernel.row(basis[r]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> sublu(sub);
  if (sublu.rank() < pc.kernel.cols()) throw RankDeficient("basis edges do not determine the remaining edges");
  return pc;
}

inline std::vector<Vec2> period_vector(const Surface& S, const std::vector<int>& basis) {
  auto pc = period_chart(S, basis);
  std::vector<Vec2> out;
  for (int e : basis) out.push_back(pc.edge_values[e]);
  return out;
}

// Greedy basis: edges in id order, keeping those that raise the rank of the kernel projection.
inline std::vector<int> default_period_basis(const Surface& S) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(closure_matrix(S));
  Eigen::MatrixXd N = lu.kernel();
  std::vector<int> basis;
  Eigen::MatrixXd rows(0, N.cols());
  int rank = 0;
  for (int e = 0; e < S.num_edges() && rank < N.cols(); ++e) {
    Eigen::MatrixXd trial(rows.rows() + 1, N.cols());
    trial << rows, N.row(e);
    Eigen::FullPivLU<Eigen::MatrixXd> tl(trial);
    if (tl.rank() > rank) {
      rows = trial;
      rank = int(tl.rank());
      basis.push_back(e);
    }
  }
  return basis;
}

// Rebuilds S with basis holonomies replaced; the remaining edges follow from triangle closure.
inline Surface rebuild_from_periods(const Surface& S, const std::vector<int>& basis, const std::vector<Vec2>& values) {
  auto pc = period_chart(S, basis);
  Eigen::MatrixXd sub(basis.size(), pc.kernel.cols());
  Eigen::MatrixXd rhs(basis.size(), 2);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    sub.row(r) = pc.kernel.row(basis[r]);
    rhs(r, 0) = values[r].x;
    rhs(r, 1) = values[r].y;
  }
  Eigen::MatrixXd coef = sub.fullPivLu().solve(rhs);
  Eigen::MatrixXd full = pc.kernel * coef;
  SurfaceSpec spec = S.spec();
  for (int t = 0; t < S.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      int e = S.edge_id({t, i});
      double s = detail::half_edge_sign(S, {t, i});
      spec.triangles[t][i] = Vec2{full(e, 0), full(e, 1)} * s;
    }
  return Surface(std::move(spec));
}

// Moves along a kernel direction so that the largest edge change is exactly h.
inline Surface perturb_periods(const Surface& S, double h, std::uint64_t seed) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(closure_matrix(S));
  Eigen::MatrixXd N = lu.kernel();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd c(N.cols(), 2);
  for (int i = 0; i < c.rows(); ++i) c(i, 0) = g(rng), c(i, 1) = g(rng);
  Eigen::MatrixXd d = N * c;
  double m = 0;
  for (int e = 0; e < d.rows(); ++e) m = std::max(m, std::hypot(d(e, 0), d(e, 1)));
  d *= h / m;
  SurfaceSpec spec = S.spec();
  for (int t = 0; t < S.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      int e = S.edge_id({t, i});
      double s = detail::half_edge_sign(S, {t, i});
      spec.triangles[t][i] += Vec2{d(e, 0), d(e, 1)} * s;
    }
  return Surface(std::move(spec));
}

// ---------------------------------------------------------------------------------------------
// Metrics.

struct SurfaceMetrics {
  double area = 0;
  double diameter_lower = 0;
  double diameter_upper = 0;
  int genus = 0;
};

// Diameter bracket from a Delaunay triangulation: every point is within the covering radius of a
// triangle vertex, and vertex distances are bounded by shortest paths along Delaunay edges.
inline SurfaceMetrics surface_metrics(const Surface& S) {
  SurfaceMetrics m;
  m.area = S.area();
  m.genus = S.genus();
  Surface D = delaunay_triangulation(S).surface;
  const int V = D.num_vertices();
  std::vector<std::vector<double>> dist(V, std::vector<double>(V, std::numeric_limits<double>::infinity()));
  for (int v = 0; v < V; ++v) dist[v][v] = 0;
  for (int e = 0; e < D.num_edges(); ++e) {
    HalfEdge h = D.edge_halves(e)[0];
    int a = D.vertex_of({h.tri, h.edge}), b = D.vertex_of({h.tri, next3(h.edge)});
    double l = norm(D.edge(h));
    dist[a][b] = std::min(dist[a][b], l);
    dist[b][a] = std::min(dist[b][a], l);
  }
  for (int k = 0; k < V; ++k)
    for (int i = 0; i < V; ++i)
      for (int j = 0; j < V; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
  double graph = 0;
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < V; ++j) graph = std::max(graph, dist[i][j]);
  double cover = 0, empty_disk = 0;
  for (int t = 0; t < D.num_triangles(); ++t) {
    auto P = D.vertex_positions(t);
    Vec2 a = P[1] - P[0], b = P[2] - P[0];
    double d = 2 * cross(a, b);
    Vec2 cc{(b.y * norm2(a) - a.y * norm2(b)) / d, (a.x * norm2(b) - b.x * norm2(a)) / d};
    double R = norm(cc);
    bool inside = cross(P[1] - P[0], cc) >= 0 && cross(P[2] - P[1], cc - (P[1] - P[0])) >= 0 &&
                  cross(P[0] - P[2], cc - (P[2] - P[0])) >= 0;
    // Farthest point of the triangle from its vertex set.
    double far = inside ? R : 0;
    if (!inside)
      for (int i = 0; i < 3; ++i) far = std::max(far, norm(D.triangle(t)[i]) / 2);
    cover = std::max(cover, far);
    if (inside) empty_disk = std::max(empty_disk, R);
  }
  m.diameter_upper = graph + 2 * cover;
  m.diameter_lower = std::max(empty_disk, ell_min(S) / 2);
  return m;
}

}  // namespace hts
