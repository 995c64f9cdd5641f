#pragma once

#include <optional>
#include <vector>

#include "hts/surface.hpp"

namespace hts {

inline Mat2 a_t(double t) { return Mat2::flow(t); }
inline Mat2 r_theta(double theta) { return Mat2::rotation(theta); }

// Postcomposes every chart with M. Gluing combinatorics and flip flags are unchanged.
inline Surface apply_matrix(const Surface& S, const Mat2& M) {
  if (M.det() <= eps_geom) throw SingularMatrix("matrix determinant " + std::to_string(M.det()) + " is not positive");
  SurfaceSpec spec = S.spec();
  for (auto& tri : spec.triangles)
    for (auto& e : tri) e = M * e;
  return Surface(std::move(spec));
}

struct SurfacePoint {
  int tri = 0;
  Vec2 p{};  // local chart of tri
};

// One crossing of a traced segment: leaves `exit.tri` through edge `exit.edge` at parameter u
// measured from P_exit.edge, after arclength s. `dir` is the direction in the exited chart.
struct Crossing {
  HalfEdge exit;
  double u = 0;
  double s = 0;
  Vec2 dir{};
};

struct VertexHit {
  int vertex = -1;
  Corner corner;  // corner of the last triangle the ray arrives in
  double s = 0;
};

struct TracedSegment {
  SurfacePoint start;
  Vec2 start_dir{};
  double length = 0;  // traced length (shorter than requested if a vertex was hit)
  std::vector<Crossing> crossings;
  SurfacePoint end;
  Vec2 end_dir{};
  bool direction_flipped = false;  // odd number of flip gluings crossed
  std::optional<VertexHit> hit;
};

namespace detail {

struct Exit {
  int edge = -1;
  double lambda = 0;
};

// Earliest exit of the ray p + lambda d from triangle t, ignoring edge `skip`.
inline Exit next_exit(const Surface& S, int t, Vec2 p, Vec2 d, int skip) {
  auto P = S.vertex_positions(t);
  Exit best{-1, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 3; ++i) {
    if (i == skip) continue;
    Vec2 e = S.triangle(t)[i];
    double rate = cross(e, d);
    if (rate >= -1e-14 * norm(e) * norm(d)) continue;
    double side = cross(e, p - P[i]);
    double lambda = std::max(0.0, side / -rate);
    if (lambda < best.lambda) best = {i, lambda};
  }
  if (best.edge < 0) throw PreconditionViolation("ray has no exit from triangle");
  return best;
}

}  // namespace detail

// Steps a straight ray one triangle at a time. The position is always in the chart of `tri`.
class RayWalker {
 public:
  RayWalker(const Surface& S, SurfacePoint start, Vec2 dir, int entered_edge = -1)
      : S_(&S), tri_(start.tri), p_(start.p), d_(normalized(dir)), skip_(entered_edge) {}

  int tri() const { return tri_; }
  Vec2 pos() const { return p_; }
  Vec2 dir() const { return d_; }
  double s() const { return s_; }
  bool flipped() const { return flipped_; }
  int entered_edge() const { return skip_; }

  // Distance to the next exit and the edge crossed.
  detail::Exit peek() const { return detail::next_exit(*S_, tri_, p_, d_, skip_); }

  // Endpoint index (0..2) of the exit point if it lies within eps_geom of a vertex.
  std::optional<int> exit_vertex(const detail::Exit& ex) const {
    // An exit at lambda ~ 0 is the ray leaving its own start vertex, not a hit.
    auto P = S_->vertex_positions(tri_);
    Vec2 x = p_ + d_ * ex.lambda;
    if (norm(x - P[ex.edge]) <= eps_geom && ex.lambda > eps_geom) return ex.edge;
    if (norm(x - P[next3(ex.edge)]) <= eps_geom && ex.lambda > eps_geom) return next3(ex.edge);
    return std::nullopt;
  }

  // Moves to the exit point and across the edge; returns the crossing record.
  Crossing cross_edge(const detail::Exit& ex) {
    auto P = S_->vertex_positions(tri_);
    Vec2 e = S_->triangle(tri_)[ex.edge];
    Vec2 x = p_ + d_ * ex.lambda;
    double u = std::clamp(dot(x - P[ex.edge], e) / norm2(e), 0.0, 1.0);
    s_ += ex.lambda;
    HalfEdge h{tri_, ex.edge};
    Crossing c{h, u, s_, d_};
    HalfEdge o = S_->partner(h);
    bool fl = S_->flip(h);
    Vec2 Q = S_->vertex_pos(o.tri, o.edge);
    p_ = Q + S_->edge(o) * (1.0 - u);
    if (fl) {
      d_ = -d_;
      flipped_ = !flipped_;
    }
    tri_ = o.tri;
    skip_ = o.edge;
    return c;
  }

  void advance(double lambda) {
    p_ = p_ + d_ * lambda;
    s_ += lambda;
  }

 private:
  const Surface* S_;
  int tri_;
  Vec2 p_;
  Vec2 d_;
  int skip_;
  double s_ = 0;
  bool flipped_ = false;
};

// Traces a straight segment of the given length. Stops early at a vertex (hit recorded).
inline TracedSegment trace_ray(const Surface& S, SurfacePoint start, Vec2 dir, double length,
                               int entered_edge = -1, std::size_t max_crossings = 50'000'000) {
  if (norm(dir) == 0) throw PreconditionViolation("trace_ray: zero direction");
  TracedSegment out;
  out.start = start;
  out.start_dir = normalized(dir);
  RayWalker w(S, start, dir, entered_edge);
  while (true) {
    auto ex = w.peek();
    double remaining = length - w.s();
    if (auto v = w.exit_vertex(ex); v && ex.lambda <= remaining + eps_geom) {
      w.advance(ex.lambda);
      Corner c{w.tri(), *v};
      out.hit = VertexHit{S.vertex_of(c), c, w.s()};
      break;
    }
    if (ex.lambda > remaining) {
      w.advance(std::max(0.0, remaining));
      break;
    }
    out.crossings.push_back(w.cross_edge(ex));
    if (out.crossings.size() > max_crossings) throw BudgetExceeded("trace_ray crossing budget");
  }
  out.length = w.s();
  out.end = {w.tri(), w.pos()};
  out.end_dir = w.dir();
  out.direction_flipped = w.flipped();
  return out;
}

// Angular position of direction d (pointing into corner c) around the vertex of c.
inline double angle_at_vertex(const Surface& S, Corner c, Vec2 d) {
  double a = ccw_angle(S.triangle(c.tri)[c.k], d);
  if (a > S.corner_angle(c) + 1e-12) a = a > pi ? 0.0 : S.corner_angle(c);
  return S.corner_offset(c) + a;
}

struct VertexDirection {
  Corner corner;
  Vec2 dir;  // unit vector in the chart of corner.tri, inside the corner
};

// Direction at angular position theta (taken mod the cone angle) around vertex v.
inline VertexDirection direction_at(const Surface& S, int v, double theta) {
  double cone = S.cone_angle(v);
  theta = std::fmod(theta, cone);
  if (theta < 0) theta += cone;
  const auto& corners = S.corners_around(v);
  for (const Corner& c : corners) {
    double off = S.corner_offset(c);
    if (theta >= off - 1e-12 && theta <= off + S.corner_angle(c) + 1e-12) {
      Vec2 e = normalized(S.triangle(c.tri)[c.k]);
      return {c, Mat2::rotation(theta - off) * e};
    }
  }
  const Corner& c = corners.back();
  return {c, Mat2::rotation(theta - S.corner_offset(c)) * normalized(S.triangle(c.tri)[c.k])};
}

// Rotates a direction at a vertex counterclockwise by `angle` (any real).
inline VertexDirection rotate_at_vertex(const Surface& S, Corner c, Vec2 d, double angle) {
  return direction_at(S, S.vertex_of(c), angle_at_vertex(S, c, d) + angle);
}

// Trace starting exactly at the vertex of corner c, heading into the corner.
inline TracedSegment trace_from_vertex(const Surface& S, Corner c, Vec2 dir, double length) {
  return trace_ray(S, {c.tri, S.vertex_pos(c.tri, c.k)}, dir, length);
}

// First return of the straight line through `start` in direction `dir` to itself with the same
// direction (a closed regular trajectory). Returns the closed trace, or nothing if the ray hits a
// vertex or does not close within max_length.
inline std::optional<TracedSegment> closed_trajectory(const Surface& S, SurfacePoint start, Vec2 dir,
                                                      double max_length, double tol = 1e-7) {
  Vec2 d0 = normalized(dir);
  RayWalker w(S, start, d0);
  std::vector<Crossing> xs;
  while (w.s() < max_length) {
    auto ex = w.peek();
    if (w.exit_vertex(ex)) return std::nullopt;
    if (!xs.empty() && w.tri() == start.tri && !w.flipped() && near(w.dir(), d0, 1e-9)) {
      Vec2 rel = start.p - w.pos();
      double along = dot(rel, d0);
      if (std::abs(cross(d0, rel)) <= tol && along >= -tol && along <= ex.lambda + tol) {
        TracedSegment out;
        out.start = start;
        out.start_dir = d0;
        out.length = w.s() + along;
        out.crossings = std::move(xs);
        out.end = start;
        out.end_dir = d0;
        return out;
      }
    }
    xs.push_back(w.cross_edge(ex));
  }
  return std::nullopt;
}

inline SurfacePoint centroid(const Surface& S, int t) {
  auto P = S.vertex_positions(t);
  return {t, (P[0] + P[1] + P[2]) / 3.0};
}

}  // namespace hts
