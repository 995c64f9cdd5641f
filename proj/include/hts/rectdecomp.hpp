#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "hts/geodesic.hpp"

namespace hts {

// One straight piece of a geodesic: the whole core of a cylinder curve, or one saddle connection.
struct GeodesicPiece {
  std::vector<SubSegment> subs;  // arclength from the start of the piece
  double length = 0;
  bool closed = false;  // cylinder core (no endpoint zeros)
  Corner start_corner;  // saddle connections only
  Vec2 start_dir{};     // in the chart of start_corner.tri
};

inline std::vector<GeodesicPiece> geodesic_pieces(const Surface& S, const FlatGeodesic& g) {
  std::vector<GeodesicPiece> out;
  if (g.kind == GeodesicKind::Cylinder) {
    GeodesicPiece p;
    p.subs = subsegments(S, cylinder_trace(S, g));
    p.length = g.length();
    p.closed = true;
    out.push_back(std::move(p));
    return out;
  }
  for (const auto& c : g.connections) {
    GeodesicPiece p;
    // Edge connections are listed in both adjacent triangles; either copy traces the same line.
    p.subs = connection_subsegments(S, c);
    if (c.crossings.empty()) p.subs.resize(1);
    p.length = c.length;
    p.start_corner = c.start;
    p.start_dir = c.dir();
    out.push_back(std::move(p));
  }
  return out;
}

struct PiecePoint {
  SurfacePoint at;
  Vec2 dir{};  // unit direction of the piece in the chart of at.tri
};

inline PiecePoint point_on_piece(const GeodesicPiece& p, double t) {
  for (const auto& s : p.subs)
    if (t <= s.s1 + 1e-12 || &s == &p.subs.back()) {
      double len = s.s1 - s.s0;
      double f = len > 0 ? std::clamp((t - s.s0) / len, 0.0, 1.0) : 0.0;
      return {{s.tri, s.a + (s.b - s.a) * f}, normalized(s.b - s.a)};
    }
  throw PreconditionViolation("empty piece");
}

namespace detail {

// Affine map from a triangle chart into (t, s) coordinates along a piece.
struct Frame {
  Mat2 M;
  Vec2 c;
  Vec2 apply(Vec2 X) const { return M * X + c; }
  Frame after(const Chart& g) const { return {M * Mat2{double(g.sign), 0, 0, double(g.sign)}, M * g.shift + c}; }
};

// Sweeps the strip above [ta, tb] upward through triangle tri, collecting vertices met by the
// perpendicular flow (first hits only) at height <= smax.
inline void sweep_up(const Surface& S, int tri, const Frame& F, double ta, double tb, double smax,
                     std::vector<Vec2>& hits, std::size_t& budget) {
  if (budget-- == 0) throw BudgetExceeded("rectangle sweep budget");
  std::array<Vec2, 3> V;
  for (int i = 0; i < 3; ++i) V[i] = F.apply(S.vertex_pos(tri, i));
  const double tiny = 1e-12;
  for (int i = 0; i < 3; ++i) {
    Vec2 A = V[i], B = V[next3(i)];
    if (!(B.x < A.x - tiny)) continue;  // only edges facing up (traversed toward smaller t)
    double lo = std::max(ta, B.x), hi = std::min(tb, A.x);
    if (hi - lo <= tiny) continue;
    for (int k : {i, next3(i)}) {
      Vec2 W = V[k];
      if (std::abs(S.cone_angle(S.vertex_of({tri, k})) - 2 * pi) < 1e-9) continue;  // marked point, not a zero
      if (W.x >= ta - 1e-12 && W.x <= tb + 1e-12 && W.y > 1e-12) hits.push_back(W);
    }
    auto s_at = [&](double t) { return A.y + (B.y - A.y) * (t - A.x) / (B.x - A.x); };
    if (std::min(s_at(lo), s_at(hi)) > smax) continue;
    HalfEdge h{tri, i};
    HalfEdge o = S.partner(h);
    sweep_up(S, o.tri, F.after(S.gluing_map(h).inverse()), lo, hi, smax, hits, budget);
  }
}

enum class Transversal { Orthogonal, Horizontal };

// Frame sending the chart of sub to (t, s): t is arclength along the piece, s the signed distance
// to its left along the chosen transversal direction.
inline Frame piece_frame(const SubSegment& sub, Transversal kind) {
  Vec2 u = normalized(sub.b - sub.a), a = sub.a;
  if (kind == Transversal::Orthogonal) {
    Vec2 n = perp(u);
    return {{u.x, u.y, n.x, n.y}, {sub.s0 - dot(u, a), -dot(n, a)}};
  }
  if (std::abs(u.y) < 1e-14) throw HorizontalGeodesic("horizontal piece has no horizontal transversal");
  double ex = u.y > 0 ? -1.0 : 1.0;  // horizontal unit vector pointing left of the piece
  Mat2 M{0, 1 / u.y, 1 / ex, -u.x / (u.y * ex)};
  return {M, Vec2{sub.s0, 0} - M * a};
}

// Zeros met first by the transversal flow from piece points with t in [t0, t1], on the left
// (side = +1) or right (side = -1) within `radius`, as (t, signed s).
inline std::vector<Vec2> band_hits(const Surface& S, const std::vector<SubSegment>& subs, double t0, double t1,
                                   int side, double radius, Transversal kind) {
  std::vector<Vec2> raw;
  std::size_t budget = 1'000'000;
  for (const auto& sub : subs) {
    double lo = std::max(t0, sub.s0), hi = std::min(t1, sub.s1);
    if (hi - lo <= 1e-14) continue;
    Frame F = piece_frame(sub, kind);
    double ta = lo, tb = hi;
    if (side < 0) {
      F = {Mat2{-F.M.a, -F.M.b, -F.M.c, -F.M.d}, -F.c};
      ta = -hi;
      tb = -lo;
    }
    sweep_up(S, sub.tri, F, ta, tb, radius, raw, budget);
  }
  std::vector<Vec2> out;
  for (Vec2 w : raw) {
    if (w.y > radius) continue;
    Vec2 h{side < 0 ? -w.x : w.x, side * w.y};
    bool dup = false;
    for (Vec2 o : out) dup = dup || norm(o - h) < 1e-9;
    if (!dup) out.push_back(h);
  }
  return out;
}

// Smallest height of a zero met by the perpendicular flow, if one is met within `radius`.
inline std::optional<double> nearest_zero(const Surface& S, const GeodesicPiece& p, double t0, double t1, int side,
                                          double radius) {
  std::optional<double> best;
  for (Vec2 w : band_hits(S, p.subs, t0, t1, side, radius, Transversal::Orthogonal))
    if (!best || std::abs(w.y) < *best) best = std::abs(w.y);
  return best;
}

}  // namespace detail

struct RectangleRecord {
  int piece = 0;
  double t0 = 0, t1 = 0;
  double a = -std::numeric_limits<double>::infinity();  // nearest zero to the right (negative)
  double b = std::numeric_limits<double>::infinity();   // nearest zero to the left (positive)
  double delta = 0;
  double half_width = 0;  // l_min / 8
};

// Shear of the rectangle around piece p over [t0, t1].
inline RectangleRecord embedded_rectangle(const Surface& S, const GeodesicPiece& p, int piece_index, double t0,
                                          double t1, double ell_min) {
  const double w = ell_min / 8;
  if (!(t1 > t0) || t1 - t0 > ell_min / 4 + 1e-12) throw PreconditionViolation("window must have length in (0, l_min/4]");
  RectangleRecord r;
  r.piece = piece_index;
  r.t0 = t0;
  r.t1 = t1;
  r.half_width = w;
  if (!p.closed && (t0 <= 1e-12 || t1 >= p.length - 1e-12)) {
    r.delta = 0;  // window touching an endpoint zero
    return r;
  }
  const double radius = 2 * w;
  if (auto lo = detail::nearest_zero(S, p, t0, t1, -1, radius)) r.a = -*lo;
  if (auto hi = detail::nearest_zero(S, p, t0, t1, +1, radius)) r.b = *hi;
  bool near_below = r.a >= -w, near_above = r.b <= w;
  if (near_below && near_above) throw WidthViolation("zeros within l_min/8 on both sides of the piece");
  if (near_below)
    r.delta = r.a / 2 + w;
  else if (near_above)
    r.delta = -w + r.b / 2;
  else
    r.delta = 0;
  return r;
}

// Image R(t, s) = p_{s + delta}(alpha(t)) of a rectangle point.
inline SurfacePoint rectangle_point(const Surface& S, const GeodesicPiece& p, const RectangleRecord& r, double t,
                                    double s) {
  auto at = point_on_piece(p, t);
  double h = s + r.delta;
  if (std::abs(h) < 1e-15) return at.at;
  auto seg = trace_ray(S, at.at, perp(at.dir) * (h > 0 ? 1.0 : -1.0), std::abs(h));
  if (seg.hit) throw WidthViolation("rectangle contains a zero");
  return seg.end;
}

// Pairwise-overlap sampling. Two images that are close in one triangle chart are close on the
// surface, so in an embedded rectangle their parameters must be exactly as far apart. Half of the
// pairs are near neighbours (local isometry), half are independent (global overlaps). Returns the
// number of violating pairs.
inline int rectangle_overlaps(const Surface& S, const GeodesicPiece& p, const RectangleRecord& r, int pairs,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double margin = 1e-6 * (r.t1 - r.t0), w = r.half_width, close = w / 4;
  std::uniform_real_distribution<double> T(r.t0 + margin, r.t1 - margin), Sd(-w, w), U(-1, 1);
  int bad = 0;
  for (int i = 0; i < pairs; ++i) {
    Vec2 x{T(rng), Sd(rng)}, y{T(rng), Sd(rng)};
    if (i % 2) {
      y = x + Vec2{U(rng), U(rng)} * (close / 2);
      y.x = std::clamp(y.x, r.t0 + margin, r.t1 - margin);
      y.y = std::clamp(y.y, -w, w);
    }
    auto P = rectangle_point(S, p, r, x.x, x.y), Q = rectangle_point(S, p, r, y.x, y.y);
    if (P.tri != Q.tri) continue;
    double d = norm(P.p - Q.p);
    if (d < close && std::abs(d - norm(x - y)) > 1e-7) ++bad;
  }
  return bad;
}

struct RectSegment {
  bool horizontal = true;
  TracedSegment seg;
  int rectangle = 0;
};

struct RectangularDecomposition {
  std::vector<RectSegment> segments;
  std::vector<RectangleRecord> rectangles;
  double ell_min = 0;
  double geodesic_length = 0;

  double horizontal_total() const {
    double s = 0;
    for (const auto& x : segments)
      if (x.horizontal) s += x.seg.length;
    return s;
  }
};

namespace detail {

inline double signed_angle(Vec2 from, Vec2 to) { return std::atan2(cross(from, to), dot(from, to)); }

}  // namespace detail

// Staircase decomposition: each window of length <= l_min/4 is replaced by one horizontal and one
// vertical leg whose corner lies on the side of the piece with more room in its rectangle.
inline RectangularDecomposition build_rect_decomposition(const Surface& S, const FlatGeodesic& g, double ell_min) {
  RectangularDecomposition D;
  D.ell_min = ell_min;
  D.geodesic_length = g.length();
  auto pieces = geodesic_pieces(S, g);
  const double step = ell_min / 4;
  for (int pi_ = 0; pi_ < int(pieces.size()); ++pi_) {
    const auto& p = pieces[pi_];
    int n = std::max(1, int(std::ceil(p.length / step - 1e-9)));
    for (int i = 0; i < n; ++i) {
      double t0 = i * step, t1 = i + 1 == n ? p.length : (i + 1) * step;
      auto rect = embedded_rectangle(S, p, pi_, t0, t1, ell_min);
      int rid = int(D.rectangles.size());
      D.rectangles.push_back(rect);

      // Start point and window holonomy in the start chart.
      SurfacePoint start;
      Vec2 d;
      std::optional<Corner> corner;
      if (!p.closed && t0 <= 1e-12) {
        corner = p.start_corner;
        d = p.start_dir;
        start = {corner->tri, S.vertex_pos(corner->tri, corner->k)};
      } else {
        auto at = point_on_piece(p, t0);
        start = at.at;
        d = at.dir;
      }
      double len = t1 - t0;
      Vec2 v = d * len;
      const double flat = 1e-12 * len;
      bool has_h = std::abs(v.x) > flat, has_v = std::abs(v.y) > flat;
      Vec2 hdir{v.x > 0 ? 1.0 : -1.0, 0}, vdir{0, v.y > 0 ? 1.0 : -1.0};
      // Horizontal-first puts the corner at signed offset -xy/|v| (positive = left of the piece).
      int want = rect.delta < 0 ? -1 : 1;
      bool h_first = !has_v || (has_h && (-v.x * v.y > 0 ? 1 : -1) == want);
      Vec2 first = h_first ? hdir : vdir;
      double first_len = h_first ? std::abs(v.x) : std::abs(v.y);
      double second_len = h_first ? std::abs(v.y) : std::abs(v.x);
      if (!has_h && !has_v) continue;

      TracedSegment leg1;
      if (corner) {
        auto vd = rotate_at_vertex(S, *corner, d, detail::signed_angle(d, first));
        leg1 = trace_from_vertex(S, vd.corner, vd.dir, first_len);
      } else {
        leg1 = trace_ray(S, start, first, first_len);
      }
      if (leg1.hit && leg1.hit->s < first_len - 1e-9) throw WidthViolation("staircase leg met a zero");
      D.segments.push_back({h_first, leg1, rid});
      if ((h_first && has_v) || (!h_first && has_h)) {
        double turn = cross(first, h_first ? vdir : hdir) > 0 ? pi / 2 : -pi / 2;
        Vec2 dir2 = Mat2::rotation(turn) * leg1.end_dir;
        if (leg1.hit) throw WidthViolation("staircase corner at a zero");
        auto leg2 = trace_ray(S, leg1.end, dir2, second_len);
        if (leg2.hit && leg2.hit->s < second_len - 1e-9) throw WidthViolation("staircase leg met a zero");
        D.segments.push_back({!h_first, leg2, rid});
      }
    }
  }
  return D;
}

// Horizontal segments of D transported to a_t q_s and counted against beta on a_t q_s.
struct TransportedEstimate {
  long total = 0;
  double radius = 0;
};

inline TracedSegment transport_segment(const Surface& St, const TracedSegment& seg, double t) {
  Mat2 M = a_t(t);
  SurfacePoint p{seg.start.tri, M * seg.start.p};
  Vec2 d = M * seg.start_dir;
  double len = norm(d) * seg.length;
  return trace_ray(St, p, d, len);
}

// beta must be a geodesic on apply_matrix(Qs, a_t(t)).
inline TransportedEstimate transported_crossing_estimate(const Surface& Qs, double t, const RectangularDecomposition& D,
                                                         const FlatGeodesic& beta, double C_est = 64) {
  Surface Qt = apply_matrix(Qs, a_t(t));
  auto st = geodesic_stats(beta);
  if (st.v <= 1e-12) throw HorizontalPiece("beta has a horizontal piece");
  TransportedEstimate out;
  auto B = geodesic_subsegments(Qt, beta);
  for (const auto& x : D.segments) {
    if (!x.horizontal) continue;
    auto moved = transport_segment(Qt, x.seg, t);
    auto A = subsegments(Qt, moved);
    // Half-open segments, so a crossing at a shared endpoint is counted once.
    for (const auto& [sa, sb] : detail::crossing_params(Qt, A, 4 * moved.length + 1, B, beta.length()))
      if (sa < moved.length - 1e-9) ++out.total;
  }
  double lm_t = ell_min(Qt);
  out.radius = C_est * D.geodesic_length * beta.length() / (D.ell_min * lm_t);
  return out;
}

}  // namespace hts
