#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "hts/io.hpp"
#include "hts/saddle.hpp"

namespace hts {

// ---------------------------------------------------------------------------------------------
// Curve words.

// Throws BadCurveWord unless consecutive exits (cyclically) share a triangle.
inline void validate_word(const Surface& S, const CurveWord& w) {
  if (w.empty()) throw BadCurveWord("empty curve word");
  for (const auto& h : w)
    if (h.tri < 0 || h.tri >= S.num_triangles() || h.edge < 0 || h.edge > 2)
      throw BadCurveWord("half-edge out of range");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const HalfEdge& h = w[i];
    const HalfEdge& nx = w[(i + 1) % w.size()];
    if (S.partner(h).tri != nx.tri)
      throw BadCurveWord("crossing " + std::to_string(i) + " does not lead into the triangle of the next crossing");
  }
}

// Cyclically removes immediate backtracks (leaving through the edge just entered).
inline CurveWord reduce_word(const Surface& S, const CurveWord& w) {
  CurveWord st;
  for (const auto& h : w) {
    if (!st.empty() && h == S.partner(st.back()))
      st.pop_back();
    else
      st.push_back(h);
  }
  // The stack is reduced; cancel across the seam.
  std::size_t lo = 0;
  while (st.size() - lo >= 2 && st[lo] == S.partner(st.back())) {
    st.pop_back();
    ++lo;
  }
  return CurveWord(st.begin() + long(lo), st.end());
}

inline CurveWord word_of_trace(const TracedSegment& seg) {
  CurveWord w;
  for (const auto& c : seg.crossings) w.push_back(c.exit);
  return w;
}

// A random closed walk in the dual graph: a non-backtracking excursion closed up by the shortest
// return path. The result is reduced and non-empty.
inline CurveWord random_word(const Surface& S, int steps, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    int t0 = std::uniform_int_distribution<int>(0, S.num_triangles() - 1)(rng);
    HalfEdge h0{t0, std::uniform_int_distribution<int>(0, 2)(rng)};
    CurveWord w{h0};
    HalfEdge in = S.partner(h0);
    for (int i = 1; i < steps; ++i) {
      int e = pick(rng) ? next3(in.edge) : prev3(in.edge);
      HalfEdge h{in.tri, e};
      w.push_back(h);
      in = S.partner(h);
    }
    // Breadth-first search over (triangle, entered edge) back to a state from which h0 is legal.
    auto id = [](HalfEdge e) { return e.tri * 3 + e.edge; };
    std::vector<int> from(S.num_triangles() * 3, -2);
    std::vector<HalfEdge> queue{in};
    from[id(in)] = -1;
    std::optional<HalfEdge> goal;
    for (std::size_t q = 0; q < queue.size() && !goal; ++q) {
      HalfEdge cur = queue[q];
      if (cur.tri == t0 && cur.edge != h0.edge) goal = cur;
      for (int e : {next3(cur.edge), prev3(cur.edge)}) {
        HalfEdge nx = S.partner({cur.tri, e});
        if (from[id(nx)] != -2) continue;
        from[id(nx)] = id(cur);
        queue.push_back(nx);
      }
    }
    if (!goal) continue;
    std::vector<HalfEdge> back;
    for (HalfEdge cur = *goal; from[id(cur)] != -1;) {
      int p = from[id(cur)];
      HalfEdge prev{p / 3, p % 3};
      back.push_back(S.partner(cur));  // exit from prev that enters cur
      cur = prev;
    }
    std::reverse(back.begin(), back.end());
    w.insert(w.end(), back.begin(), back.end());
    auto r = reduce_word(S, w);
    if (!r.empty()) return r;
  }
  throw PreconditionViolation("random_word: could not close a walk");
}

// ---------------------------------------------------------------------------------------------
// Flat geodesics.

enum class GeodesicKind { Cylinder, Singular };

struct CylinderData {
  SurfacePoint start;       // a point on the mid-cylinder representative
  Vec2 dir{};               // its direction in the chart of start.tri
  Vec2 holonomy{};          // core holonomy in that chart
  double circumference = 0;
  double width = 0;
  std::array<int, 2> boundary_vertices{-1, -1};  // a vertex on each side of the maximal cylinder
};

struct FlatGeodesic {
  GeodesicKind kind = GeodesicKind::Cylinder;
  CylinderData cylinder;                      // Cylinder only
  std::vector<SaddleConnection> connections;  // Singular only, cyclic
  int reroutes = 0;                           // number of cone-point reroutes used to tighten

  double length() const {
    if (kind == GeodesicKind::Cylinder) return cylinder.circumference;
    double s = 0;
    for (const auto& c : connections) s += c.length;
    return s;
  }
  int num_connections() const { return kind == GeodesicKind::Cylinder ? 0 : int(connections.size()); }
};

// Connection leaving corner c in direction dir that should hit a vertex after `length`.
inline SaddleConnection connection_from(const Surface& S, Corner c, Vec2 dir, double length) {
  double slack = 1e-7 * std::max(1.0, length);
  auto seg = trace_from_vertex(S, c, dir, length + slack);
  if (!seg.hit || std::abs(seg.hit->s - length) > 1e-6 * std::max(1.0, length))
    throw PreconditionViolation("connection_from: trace did not end at a vertex");
  SaddleConnection out;
  out.start = c;
  out.end = seg.hit->corner;
  out.v0 = S.vertex_of(c);
  out.v1 = seg.hit->vertex;
  out.length = seg.hit->s;
  out.holonomy = normalized(dir) * out.length;
  for (const auto& x : seg.crossings) out.crossings.push_back(x.exit);
  out.angle0 = angle_at_vertex(S, c, dir);
  out.angle1 = angle_at_vertex(S, out.end, -seg.end_dir);
  return out;
}

namespace detail {

inline long floor_mod(long a, long n) { return ((a % n) + n) % n; }
inline long floor_div(long a, long n) { return (a - floor_mod(a, n)) / n; }

// The strip of triangles crossed by a periodic word, developed into the plane.
// Portal k is the edge crossed by exit k; its left/right ends are as seen along the curve.
class Sleeve {
 public:
  Sleeve(const Surface& S, CurveWord w) : S_(&S), w_(std::move(w)), n_(long(w_.size())) {
    D_.push_back(Chart{});
    for (long k = 0; k < n_; ++k) D_.push_back(D_.back().compose(S.gluing_map(w_[k]).inverse()));
    H_ = D_.back();
  }

  long size() const { return n_; }
  const Chart& deck() const { return H_; }
  HalfEdge exit(long k) const { return w_[floor_mod(k, n_)]; }
  int tri(long k) const { return exit(k).tri; }

  Chart chart(long k) const {
    long q = floor_div(k, n_);
    Chart c = D_[floor_mod(k, n_)];
    Chart step = q >= 0 ? H_ : H_.inverse();
    for (long i = 0; i < std::abs(q); ++i) c = step.compose(c);
    return c;
  }

  Vec2 left(long k) const { return chart(k).apply(S_->vertex_pos(tri(k), next3(exit(k).edge))); }
  Vec2 right(long k) const { return chart(k).apply(S_->vertex_pos(tri(k), exit(k).edge)); }
  Vec2 end(int side, long k) const { return side > 0 ? left(k) : right(k); }

  // Whether portals k and k+1 share their left (side > 0) or right (side < 0) end.
  bool keeps(int side, long k) const {
    int b = S_->partner(exit(k)).edge;
    int c = exit(k + 1).edge;
    return side > 0 ? c == prev3(b) : c == next3(b);
  }

  // Corner at the shared end of a run of portals [first, last], in triangle `y` of the fan
  // (first <= y <= last + 1).
  Corner fan_corner(int side, long y, long last) const {
    if (y <= last) return side > 0 ? Corner{tri(y), next3(exit(y).edge)} : Corner{tri(y), exit(y).edge};
    HalfEdge in = S_->partner(exit(last));
    return side > 0 ? Corner{in.tri, in.edge} : Corner{in.tri, next3(in.edge)};
  }

 private:
  const Surface* S_;
  CurveWord w_;
  long n_;
  std::vector<Chart> D_;
  Chart H_;
};

struct Run {
  int side = 0;
  long first = 0, last = 0;
};

struct Apex {
  Vec2 p{};
  int side = 0;
  long portal = 0;
};

struct Portal {
  Vec2 l, r;
  long k;
};

// Taut string from `start` to `goal` through a sequence of portals (string pulling).
inline std::vector<Apex> funnel(Apex start, Vec2 goal, const std::vector<Portal>& portals) {
  std::vector<Apex> path{start};
  std::vector<Portal> P = portals;
  P.push_back({goal, goal, -1});
  const double tiny = 1e-12;
  Vec2 A = start.p, Lp = A, Rp = A;
  long li = -1, ri = -1;
  for (long i = 0; i < long(P.size()); ++i) {
    Vec2 nr = P[i].r, nl = P[i].l;
    if (!near(nr, A, tiny)) {
      bool tighter = Rp == A || cross(Rp - A, nr - A) >= 0;
      if (tighter) {
        if (Lp != A && cross(Lp - A, nr - A) >= 0) {
          path.push_back({Lp, +1, P[li].k});
          A = Lp;
          Rp = Lp;
          ri = li;
          i = li;
          continue;
        }
        Rp = nr;
        ri = i;
      }
    }
    if (!near(nl, A, tiny)) {
      bool tighter = Lp == A || cross(Lp - A, nl - A) <= 0;
      if (tighter) {
        if (Rp != A && cross(Rp - A, nl - A) <= 0) {
          path.push_back({Rp, -1, P[ri].k});
          A = Rp;
          Lp = Rp;
          li = ri;
          i = ri;
          continue;
        }
        Lp = nl;
        li = i;
      }
    }
  }
  path.push_back({goal, 0, -1});
  // Split at portal ends lying on the path (angle exactly pi on one side).
  std::vector<Apex> out{path.front()};
  for (std::size_t a = 0; a + 1 < path.size(); ++a) {
    Vec2 p = path[a].p, q = path[a + 1].p;
    double len = norm(q - p);
    std::vector<std::pair<double, Apex>> extra;
    for (const auto& pt : portals)
      for (int side : {+1, -1}) {
        // Only portals crossed by this segment; the strip may overlap itself in the plane.
        if (pt.k <= path[a].portal && a > 0) continue;
        if (path[a + 1].portal >= 0 && pt.k > path[a + 1].portal) continue;
        Vec2 x = side > 0 ? pt.l : pt.r;
        double t = len > 0 ? dot(x - p, q - p) / (len * len) : 0;
        if (t * len <= 1e-9 || (1 - t) * len <= 1e-9) continue;
        if (std::abs(cross(q - p, x - p)) / std::max(len, 1e-300) > 1e-9 * std::max(1.0, len)) continue;
        bool dup = false;
        for (const auto& e : extra) dup = dup || near(e.second.p, x, 1e-9);
        if (!dup) extra.push_back({t, Apex{x, side, pt.k}});
      }
    std::sort(extra.begin(), extra.end(), [](const auto& u, const auto& v) { return u.first < v.first; });
    for (auto& e : extra) out.push_back(e.second);
    out.push_back(path[a + 1]);
  }
  // The same vertex can be reached as an apex twice in a row (or coincide with the goal).
  std::vector<Apex> clean{out.front()};
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (near(out[i].p, clean.back().p, 1e-12 * std::max(1.0, norm(out[i].p)))) {
      if (i + 1 == out.size()) clean.back() = out[i];
      continue;
    }
    clean.push_back(out[i]);
  }
  if (clean.size() == 1) clean.push_back(out.back());
  return clean;
}

inline double clamp_corner_angle(double a, double alpha) {
  if (a <= alpha + 1e-12) return std::min(a, alpha);
  return a > 0.5 * (alpha + 2 * pi) ? 0.0 : alpha;
}

}  // namespace detail

namespace detail {

class Tightener {
 public:
  Tightener(const Surface& S, CurveWord w) : S_(S), word_(std::move(w)) {}

  FlatGeodesic run() {
    validate_word(S_, word_);
    double last_len = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100000; ++iter) {
      word_ = reduce_word(S_, word_);
      if (word_.empty()) throw NullHomotopic("curve word reduces to the empty word");
      Sleeve sl(S_, word_);
      if (auto cyl = cylinder(sl)) {
        cyl->reroutes = iter;
        return *cyl;
      }
      auto best = shortest_through_node(sl);
      if (best.length <= 1e-12) throw NullHomotopic("tightened curve has zero length");
      auto bad = worst_node(sl, best);
      if (!bad || best.length > last_len - 1e-12) {
        auto g = singular(sl, best);
        g.reroutes = iter;
        return g;
      }
      last_len = best.length;
      reroute(sl, *bad);
    }
    throw BudgetExceeded("tightening did not terminate");
  }

 private:
  struct Path {
    Run start;
    std::vector<Apex> apexes;  // start node .. its deck translate
    double length = std::numeric_limits<double>::infinity();
  };

  Run run_of(const Sleeve& sl, int side, long k) const {
    long n = sl.size();
    long first = k, last = k;
    while (sl.keeps(side, first - 1)) {
      --first;
      if (k - first >= n) throw NullHomotopic("curve word winds around a single vertex");
    }
    while (sl.keeps(side, last)) {
      ++last;
      if (last - first >= n) throw NullHomotopic("curve word winds around a single vertex");
    }
    return {side, first, last};
  }

  std::optional<FlatGeodesic> cylinder(const Sleeve& sl) const {
    const Chart& H = sl.deck();
    if (H.sign != 1 || norm(H.shift) <= eps_geom) return std::nullopt;
    Vec2 c = H.shift, u = normalized(c);
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    long klo = 0, khi = 0;
    for (long k = 0; k < sl.size(); ++k) {
      double r = cross(u, sl.right(k)), l = cross(u, sl.left(k));
      if (r > lo) lo = r, klo = k;
      if (l < hi) hi = l, khi = k;
    }
    if (hi - lo <= eps_geom * std::max(1.0, norm(c))) return std::nullopt;
    double o = 0.5 * (lo + hi);
    auto on_portal = [&](Vec2 R, Vec2 L) {
      double cr = cross(u, R), cl = cross(u, L);
      return R + (L - R) * ((o - cr) / (cl - cr));
    };
    Vec2 a = on_portal(sl.right(0), sl.left(0));
    Vec2 b = on_portal(sl.right(-1), sl.left(-1));
    FlatGeodesic g;
    g.kind = GeodesicKind::Cylinder;
    g.cylinder.start = {sl.tri(0), (a + b) * 0.5};
    g.cylinder.dir = u;
    g.cylinder.holonomy = c;
    g.cylinder.circumference = norm(c);
    g.cylinder.width = hi - lo;
    g.cylinder.boundary_vertices = {S_.vertex_of({sl.tri(klo), sl.exit(klo).edge}),
                                    S_.vertex_of({sl.tri(khi), next3(sl.exit(khi).edge)})};
    return g;
  }

  Path path_from(const Sleeve& sl, const Run& r) const {
    long n = sl.size();
    Apex start{sl.end(r.side, r.first), r.side, r.first};
    Vec2 goal = sl.end(r.side, r.first + n);
    std::vector<Portal> portals;
    for (long k = r.last + 1; k <= r.first + n - 1; ++k) portals.push_back({sl.left(k), sl.right(k), k});
    Path p;
    p.start = r;
    p.apexes = funnel(start, goal, portals);
    p.length = 0;
    for (std::size_t i = 0; i + 1 < p.apexes.size(); ++i) p.length += norm(p.apexes[i + 1].p - p.apexes[i].p);
    return p;
  }

  Path shortest_through_node(const Sleeve& sl) const {
    Path best;
    for (int side : {+1, -1})
      for (long k = 0; k < sl.size(); ++k) {
        if (sl.keeps(side, k - 1)) continue;  // not the first portal of its run
        auto p = path_from(sl, run_of(sl, side, k));
        if (p.length < best.length - 1e-12) best = std::move(p);
      }
    return best;
  }

  // Angle through the fan of run r between the incoming and outgoing developed directions.
  double sleeve_angle(const Sleeve& sl, const Run& r, Vec2 u_in, Vec2 u_out) const {
    auto theta = [&](long y, Vec2 u) {
      Corner c = sl.fan_corner(r.side, y, r.last);
      Vec2 local = sl.chart(y).inverse().apply_vec(u);
      double a = ccw_angle(S_.triangle(c.tri)[c.k], local);
      return std::pair{detail::clamp_corner_angle(a, S_.corner_angle(c)), S_.corner_angle(c)};
    };
    auto [t0, a0] = theta(r.first, u_in);
    auto [t1, a1] = theta(r.last + 1, u_out);
    double mid = 0;
    for (long y = r.first + 1; y <= r.last; ++y) mid += S_.corner_angle(sl.fan_corner(r.side, y, r.last));
    return r.side > 0 ? (a0 - t0) + mid + t1 : t0 + mid + (a1 - t1);
  }

  struct NodeAngle {
    Run run;
    Vec2 u_in, u_out;
    double inside = 0, outside = 0;
  };

  std::vector<NodeAngle> node_angles(const Sleeve& sl, const Path& p) const {
    std::vector<NodeAngle> out;
    const auto& A = p.apexes;
    std::size_t m = A.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      NodeAngle na;
      na.run = i == 0 ? p.start : run_of(sl, A[i].side, A[i].portal);
      na.u_out = normalized(A[i + 1].p - A[i].p);
      if (i == 0)
        na.u_in = normalized(sl.deck().inverse().apply_vec(A[m - 2].p - A[m - 1].p));
      else
        na.u_in = normalized(A[i - 1].p - A[i].p);
      int v = S_.vertex_of(sl.fan_corner(na.run.side, na.run.first, na.run.last));
      na.inside = sleeve_angle(sl, na.run, na.u_in, na.u_out);
      na.outside = S_.cone_angle(v) - na.inside;
      out.push_back(na);
    }
    return out;
  }

  std::optional<Run> worst_node(const Sleeve& sl, const Path& p) const {
    std::optional<Run> bad;
    double worst = pi - eps_ang;
    for (const auto& na : node_angles(sl, p))
      if (na.outside < worst) {
        worst = na.outside;
        bad = na.run;
      }
    return bad;
  }

  // Sends the curve around the other side of the vertex shared by the portals of run r.
  void reroute(const Sleeve& sl, const Run& r) {
    long n = sl.size();
    long len = r.last - r.first + 1;
    if (len >= n) throw NullHomotopic("curve word winds around a single vertex");
    Corner c = sl.fan_corner(r.side, r.first, r.last);
    Corner goal = sl.fan_corner(r.side, r.last + 1, r.last);
    CurveWord detour;
    for (int guard = 0; c != goal; ++guard) {
      if (guard > 4 * S_.num_triangles() * 3) throw PreconditionViolation("reroute: corner walk did not close");
      if (r.side > 0) {
        detour.push_back({c.tri, c.k});
        c = S_.cw_next(c);
      } else {
        detour.push_back({c.tri, prev3(c.k)});
        c = S_.ccw_next(c);
      }
    }
    CurveWord w;
    w.insert(w.end(), detour.begin(), detour.end());
    for (long k = r.last + 1; k < r.first + n; ++k) w.push_back(sl.exit(k));
    word_ = std::move(w);
  }

  FlatGeodesic singular(const Sleeve& sl, const Path& p) const {
    FlatGeodesic g;
    g.kind = GeodesicKind::Singular;
    auto angles = node_angles(sl, p);
    for (std::size_t i = 0; i < angles.size(); ++i) {
      const auto& na = angles[i];
      long y = na.run.last + 1;
      Corner c = sl.fan_corner(na.run.side, y, na.run.last);
      Vec2 d = sl.chart(y).inverse().apply_vec(na.u_out);
      double len = norm(p.apexes[i + 1].p - p.apexes[i].p);
      g.connections.push_back(connection_from(S_, c, d, len));
    }
    return g;
  }

  const Surface& S_;
  CurveWord word_;
};

}  // namespace detail

// Length of the closed polygon homotopic to word w that crosses portal k at parameter t[k],
// measured from the right end toward the left end (the crossing parameter of a trace).
inline double portal_path_length(const Surface& S, const CurveWord& w, const std::vector<double>& t) {
  if (t.size() != w.size()) throw PreconditionViolation("one parameter per crossing");
  detail::Sleeve sl(S, w);
  long n = sl.size();
  auto point = [&](long k) {
    double u = t[std::size_t(detail::floor_mod(k, n))];
    return sl.right(k) + (sl.left(k) - sl.right(k)) * u;
  };
  double len = 0;
  for (long k = 0; k < n; ++k) len += norm(point(k + 1) - point(k));
  return len;
}

// Flat geodesic representative of the free homotopy class of a closed curve word.
inline FlatGeodesic tighten(const Surface& S, const CurveWord& w) { return detail::Tightener(S, w).run(); }

// ---------------------------------------------------------------------------------------------
// Statistics.

struct GeodesicStats {
  double length = 0;
  double re = 0;  // i(beta, Re q): total horizontal variation
  double im = 0;  // i(beta, Im q): total vertical variation
  double v = 0;   // min over pieces of |y| / length
  double h = 0;   // min over pieces of |x| / length
};

inline GeodesicStats geodesic_stats(const FlatGeodesic& g) {
  GeodesicStats s;
  s.v = s.h = 1;
  auto add = [&](Vec2 hol) {
    double l = norm(hol);
    s.length += l;
    s.re += std::abs(hol.x);
    s.im += std::abs(hol.y);
    s.v = std::min(s.v, std::abs(hol.y) / l);
    s.h = std::min(s.h, std::abs(hol.x) / l);
  };
  if (g.kind == GeodesicKind::Cylinder)
    add(g.cylinder.holonomy);
  else
    for (const auto& c : g.connections) add(c.holonomy);
  return s;
}

// ---------------------------------------------------------------------------------------------
// Geometry of a geodesic as pieces inside triangles.

inline TracedSegment cylinder_trace(const Surface& S, const FlatGeodesic& g) {
  return trace_ray(S, g.cylinder.start, g.cylinder.dir, g.cylinder.circumference);
}

// Pieces with arclength measured from the start of the geodesic.
inline std::vector<SubSegment> geodesic_subsegments(const Surface& S, const FlatGeodesic& g) {
  if (g.kind == GeodesicKind::Cylinder) return subsegments(S, cylinder_trace(S, g));
  std::vector<SubSegment> out;
  double s = 0;
  for (const auto& c : g.connections) {
    for (auto piece : connection_subsegments(S, c)) {
      piece.s0 += s;
      piece.s1 += s;
      out.push_back(piece);
    }
    s += c.length;
  }
  return out;
}

// Closed curve word homotopic to g: the pieces' crossings, pushed off each vertex through the
// fewer corners.
inline CurveWord curve_word(const Surface& S, const FlatGeodesic& g) {
  if (g.kind == GeodesicKind::Cylinder) return word_of_trace(cylinder_trace(S, g));
  CurveWord w;
  std::size_t m = g.connections.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = g.connections[i];
    w.insert(w.end(), c.crossings.begin(), c.crossings.end());
    Corner a = c.end, b = g.connections[(i + 1) % m].start;
    CurveWord ccw, cw;
    for (Corner x = a; x != b; x = S.ccw_next(x)) ccw.push_back({x.tri, prev3(x.k)});
    for (Corner x = a; x != b; x = S.cw_next(x)) cw.push_back({x.tri, x.k});
    const auto& pick = ccw.size() <= cw.size() ? ccw : cw;
    w.insert(w.end(), pick.begin(), pick.end());
  }
  return reduce_word(S, w);
}

// ---------------------------------------------------------------------------------------------
// Transverse intersections.

struct Incidence {
  enum class Kind { Vertex, SharedArc, Identical } kind = Kind::Vertex;
  int vertex = -1;      // for Vertex
  bool linked = false;  // linked incidences cannot be homotoped away
};

struct TransverseCount {
  long count = 0;
  std::vector<Incidence> incidences;
};

namespace detail {

inline double cyc(double s, double L) {
  double r = std::fmod(s, L);
  return r < 0 ? r + L : r;
}

inline bool cyc_near(double a, double b, double L, double tol) {
  double d = std::abs(a - b);
  return std::min(d, L - d) <= tol;
}

struct CrossingPair {
  double sa, sb;
  std::size_t ia, ib;  // subsegments meeting there (same triangle chart)
};

// Interior crossing points between two families of pieces.
inline std::vector<CrossingPair> crossing_pairs(const Surface& S, const std::vector<SubSegment>& A, double LA,
                                                const std::vector<SubSegment>& B, double LB) {
  std::vector<CrossingPair> out;
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) {
      const auto &x = A[i], &y = B[j];
      if (x.tri != y.tri) continue;
      if (norm(x.b - x.a) <= 1e-14 || norm(y.b - y.a) <= 1e-14) continue;
      auto hit = segment_intersection(x.a, x.b, y.a, y.b, 1e-9);
      if (!hit) continue;
      Vec2 p = x.a + (x.b - x.a) * hit->first;
      if (near_triangle_vertex(S, x.tri, p, 1e-7)) continue;
      double sa = cyc(x.s0 + (x.s1 - x.s0) * hit->first, LA);
      double sb = cyc(y.s0 + (y.s1 - y.s0) * hit->second, LB);
      bool dup = false;
      for (const auto& q : out) dup = dup || (cyc_near(q.sa, sa, LA, 1e-7) && cyc_near(q.sb, sb, LB, 1e-7));
      if (!dup) out.push_back({sa, sb, i, j});
    }
  return out;
}

// Interior crossing points between two families of pieces, as (s_a, s_b) pairs.
inline std::vector<std::pair<double, double>> crossing_params(const Surface& S, const std::vector<SubSegment>& A,
                                                              double LA, const std::vector<SubSegment>& B,
                                                              double LB) {
  std::vector<std::pair<double, double>> out;
  for (const auto& c : crossing_pairs(S, A, LA, B, LB)) out.push_back({c.sa, c.sb});
  return out;
}

// Whether angular position x lies strictly inside the counterclockwise arc from a to b (mod cone).
inline bool in_arc(double a, double b, double x, double cone) {
  double span = std::fmod(b - a + 2 * cone, cone);
  double off = std::fmod(x - a + 2 * cone, cone);
  return off > 1e-9 && off < span - 1e-9;
}

inline bool same_angle(double a, double b, double cone) {
  double d = std::fmod(std::abs(a - b), cone);
  return std::min(d, cone - d) <= 1e-9;
}

}  // namespace detail

// Number of transverse crossings between a geodesic and a straight segment (vertices excluded).
inline long crossings_with_segment(const Surface& S, const FlatGeodesic& g, const TracedSegment& sigma) {
  double L = g.length();
  auto A = geodesic_subsegments(S, g);
  auto B = subsegments(S, sigma);
  double LB = sigma.length * 4 + 1;  // not periodic
  return long(detail::crossing_params(S, A, L, B, LB).size());
}

inline TransverseCount transverse_count(const Surface& S, const FlatGeodesic& a, const FlatGeodesic& b) {
  TransverseCount out;
  auto A = geodesic_subsegments(S, a), B = geodesic_subsegments(S, b);
  out.count = long(detail::crossing_params(S, A, a.length(), B, b.length()).size());
  if (a.kind != GeodesicKind::Singular || b.kind != GeodesicKind::Singular) {
    if (a.kind == GeodesicKind::Cylinder && b.kind == GeodesicKind::Cylinder && out.count == 0) {
      // Parallel cores of one cylinder are reported as identical.
      Vec2 u = a.cylinder.dir, v = b.cylinder.dir;
      auto P = geodesic_subsegments(S, a), Q = geodesic_subsegments(S, b);
      for (const auto& x : P)
        for (const auto& y : Q)
          if (x.tri == y.tri && std::abs(cross(x.b - x.a, y.a - x.a)) <= 1e-9 * norm(x.b - x.a) &&
              std::abs(cross(u, v)) <= 1e-9) {
            out.incidences.push_back({Incidence::Kind::Identical, -1, false});
            return out;
          }
    }
    return out;
  }
  const auto& ca = a.connections;
  const auto& cb = b.connections;
  long n = long(ca.size()), m = long(cb.size());
  auto ia = [&](long i) { return detail::floor_mod(i, n); };
  auto ib = [&](long j) { return detail::floor_mod(j, m); };

  std::vector<std::vector<HalfEdge>> ka, kb;
  for (const auto& c : ca) ka.push_back(connection_key(S, c));
  for (const auto& c : cb) kb.push_back(connection_key(S, c));
  // Pieces of b matched to pieces of a: +1 same direction, -1 opposite.
  auto dir_match = [&](long i, long j) -> int {
    if (ka[ia(i)] != kb[ib(j)]) return 0;
    const auto& x = ca[ia(i)];
    const auto& y = cb[ib(j)];
    if (x.start == y.start && detail::same_angle(x.angle0, y.angle0, S.cone_angle(x.v0))) return 1;
    return -1;
  };

  // Shared runs.
  std::vector<std::vector<bool>> used(n, std::vector<bool>(m, false));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < m; ++j) {
      int s = dir_match(i, j);
      if (s == 0 || used[i][j]) continue;
      if (dir_match(i - 1, j - s) == s) {
        // Not the start of a run unless the whole curve is shared.
        long len = 0;
        while (len < n && dir_match(i - len, j - s * len) == s) ++len;
        if (len < n) continue;
      }
      long len = 0;
      while (len < n && dir_match(i + len, j + s * len) == s) {
        used[ia(i + len)][ib(j + s * len)] = true;
        ++len;
      }
      if (len >= n) {
        out.incidences.push_back({Incidence::Kind::Identical, -1, false});
        continue;
      }
      // Ends of the run [i, i+len-1] on a.
      const auto& a_first = ca[ia(i)];
      const auto& a_last = ca[ia(i + len - 1)];
      const auto& a_prev = ca[ia(i - 1)];
      const auto& a_next = ca[ia(i + len)];
      double cone0 = S.cone_angle(a_first.v0), cone1 = S.cone_angle(a_last.v1);
      // b's direction leaving the run at each end, as a position around the vertex.
      double b_at_start, b_at_end;
      if (s > 0) {
        b_at_start = cb[ib(j - 1)].angle1;
        b_at_end = cb[ib(j + len)].angle0;
      } else {
        b_at_start = cb[ib(j + 1)].angle0;
        b_at_end = cb[ib(j - len)].angle1;
      }
      if (detail::same_angle(b_at_start, a_prev.angle1, cone0) || detail::same_angle(b_at_end, a_next.angle0, cone1))
        throw SharedArcUnresolved("shared arc continues along distinct but parallel pieces");
      // Left of a is the counterclockwise sweep from the outgoing to the incoming direction.
      bool left0 = detail::in_arc(a_first.angle0, a_prev.angle1, b_at_start, cone0);
      bool left1 = detail::in_arc(a_next.angle0, a_last.angle1, b_at_end, cone1);
      out.incidences.push_back({Incidence::Kind::SharedArc, a_first.v0, left0 != left1});
    }

  // Isolated vertex incidences.
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < m; ++j) {
      const auto& ain = ca[ia(i - 1)];
      const auto& aout = ca[ia(i)];
      const auto& bin = cb[ib(j - 1)];
      const auto& bout = cb[ib(j)];
      if (aout.v0 != bout.v0) continue;
      double cone = S.cone_angle(aout.v0);
      double a1 = aout.angle0, a2 = ain.angle1, b1 = bout.angle0, b2 = bin.angle1;
      bool touches = false;
      for (double x : {b1, b2})
        for (double y : {a1, a2}) touches = touches || detail::same_angle(x, y, cone);
      if (touches) continue;  // part of a shared arc
      bool l1 = detail::in_arc(a1, a2, b1, cone), l2 = detail::in_arc(a1, a2, b2, cone);
      out.incidences.push_back({Incidence::Kind::Vertex, aout.v0, l1 != l2});
    }
  return out;
}

struct IntersectionBounds {
  long I = 0;
  int n = 0, m = 0;
  long lo = 0, hi = 0;
};

inline IntersectionBounds intersection_bounds(const Surface& S, const FlatGeodesic& a, const FlatGeodesic& b) {
  IntersectionBounds r;
  r.I = transverse_count(S, a, b).count;
  r.n = a.num_connections();
  r.m = b.num_connections();
  r.lo = r.I;
  r.hi = r.I + long(r.n) * r.m;
  return r;
}

}  // namespace hts
