#pragma once

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "hts/rectdecomp.hpp"

namespace hts {

// Smooth symmetric bump on (-1, 1) with unit integral, and the taper built from it.
namespace profile {

inline double raw(double x) { return std::abs(x) < 1 ? std::exp(-1 / (1 - x * x)) : 0.0; }

inline double normalizer() {
  static const double N = 1 / boost::math::quadrature::gauss_kronrod<double, 61>::integrate(raw, -1.0, 1.0, 10, 1e-14);
  return N;
}

inline double phi(double x) { return normalizer() * raw(x); }

inline double dphi(double x) {
  if (std::abs(x) >= 1) return 0;
  double d = 1 - x * x;
  return phi(x) * (-2 * x / (d * d));
}

// Cumulative integral of phi, tabulated once and evaluated by cubic Hermite interpolation
// (the derivative is phi itself).
inline double cdf(double x) {
  constexpr int n = 4096;
  static const std::vector<double> table = [] {
    std::vector<double> t(n + 1, 0.0);
    for (int k = 0; k < n; ++k) {
      double a = -1 + 2.0 * k / n, b = -1 + 2.0 * (k + 1) / n;
      t[k + 1] = t[k] + boost::math::quadrature::gauss_kronrod<double, 31>::integrate(phi, a, b, 0);
    }
    return t;
  }();
  if (x <= -1) return 0;
  if (x >= 1) return 1;
  double h = 2.0 / n, u = (x + 1) / h;
  int k = std::min(n - 1, int(u));
  double r = u - k, a = -1 + k * h;
  double r2 = r * r, r3 = r2 * r;
  return (2 * r3 - 3 * r2 + 1) * table[k] + (r3 - 2 * r2 + r) * h * phi(a) + (-2 * r3 + 3 * r2) * table[k + 1] +
         (r3 - r2) * h * phi(a + h);
}

// phi_eps(s) = phi(s/eps)/eps
inline double phi_eps(double s, double eps) { return phi(s / eps) / eps; }
inline double dphi_eps(double s, double eps) { return dphi(s / eps) / (eps * eps); }

// psi(0) = 1, psi(1) = 0, flat to all orders at both ends.
inline double psi(double u) { return u <= 0 ? 1.0 : u >= 1 ? 0.0 : 1 - cdf(2 * u - 1); }
inline double dpsi(double u) { return u <= 0 || u >= 1 ? 0.0 : -2 * phi(2 * u - 1); }

}  // namespace profile

// Vertical leaf of length l_min/8 leaving an endpoint zero of a saddle connection.
struct CollarPanel {
  Corner corner;
  Vec2 dir{};
  std::vector<SubSegment> subs;
};

struct CollarPiece {
  GeodesicPiece geo;
  double vy = 0;                                  // |vertical component| of the unit direction
  std::vector<std::pair<double, double>> anchors; // (t, Delta), sorted by t
  std::optional<std::array<CollarPanel, 4>> panels;  // index 2*end + j; simple zeros only

  double delta_at(double t) const { return interpolate(t).first; }
  double delta_slope(double t) const { return interpolate(t).second; }

 private:
  std::pair<double, double> interpolate(double t) const {
    const auto& A = anchors;
    if (A.empty()) return {0, 0};
    if (A.size() == 1) return {A[0].second, 0};
    double L = geo.length;
    auto lerp = [](std::pair<double, double> a, std::pair<double, double> b, double x) {
      double slope = (b.second - a.second) / (b.first - a.first);
      return std::pair{a.second + slope * (x - a.first), slope};
    };
    if (geo.closed && (t < A.front().first || t > A.back().first)) {
      auto last = A.back(), first = A.front();
      first.first += L;
      return lerp(last, first, t < A.front().first ? t + L : t);
    }
    t = std::clamp(t, A.front().first, A.back().first);
    auto it = std::upper_bound(A.begin(), A.end(), t, [](double x, const auto& a) { return x < a.first; });
    if (it == A.end()) --it;
    if (it == A.begin()) ++it;
    return lerp(*(it - 1), *it, t);
  }
};

struct Collar {
  FlatGeodesic beta;
  double ell_min = 0;
  double w = 0;  // half width l_min/8
  std::vector<CollarPiece> pieces;
  double slope_bound = 0;       // max |Delta'|
  int multiplicity_bound = 0;   // one preimage per window of length l_min/4, plus the side panels
  bool cylinder() const { return beta.kind == GeodesicKind::Cylinder; }
  double im() const {
    double s = 0;
    for (const auto& p : pieces) s += p.vy * p.geo.length;
    return s;
  }
};

namespace detail {

inline double cyc_offset(double from, double to, double cone) {
  double d = std::fmod(to - from, cone);
  return d < 0 ? d + cone : d;
}

// The two vertical leaves at the zero of corner c farthest from direction d, ordered
// (closest counterclockwise, closest clockwise).
inline std::optional<std::array<VertexDirection, 2>> far_vertical_leaves(const Surface& S, Corner c, Vec2 d) {
  int v = S.vertex_of(c);
  double cone = S.cone_angle(v);
  if (std::abs(cone - 3 * pi) > 1e-9) return std::nullopt;
  double theta = angle_at_vertex(S, c, d);
  double first = theta + (pi / 2 - std::atan2(d.y, d.x));
  std::array<double, 3> off;
  for (int k = 0; k < 3; ++k) off[k] = cyc_offset(theta, first + k * pi, cone);
  int nearest = 0;
  for (int k = 1; k < 3; ++k)
    if (std::min(off[k], cone - off[k]) < std::min(off[nearest], cone - off[nearest])) nearest = k;
  int a = (nearest + 1) % 3, b = (nearest + 2) % 3;
  if (off[b] < off[a]) std::swap(a, b);
  return std::array{direction_at(S, v, theta + off[a]), direction_at(S, v, theta + off[b])};
}

inline double delta_formula(double s, double w) { return s < 0 ? s / 2 + w : -w + s / 2; }

}  // namespace detail

inline Collar build_collar(const Surface& S, const FlatGeodesic& beta, std::optional<double> lmin = std::nullopt) {
  Collar C;
  C.beta = beta;
  C.ell_min = lmin ? *lmin : ell_min(S);
  C.w = C.ell_min / 8;
  const double w = C.w;
  for (auto& gp : geodesic_pieces(S, beta)) {
    CollarPiece P;
    Vec2 u = normalized(gp.subs.front().b - gp.subs.front().a);
    if (std::abs(u.y) < 1e-12) throw HorizontalGeodesic("collar needs a non-horizontal geodesic");
    P.vy = std::abs(u.y);
    double L = gp.length;

    std::vector<Vec2> hits;
    for (int side : {-1, 1})
      for (Vec2 h : detail::band_hits(S, gp.subs, 0, L, side, 2 * w * (1 + 1e-9), detail::Transversal::Horizontal))
        if (gp.closed || (h.x > 1e-9 && h.x < L - 1e-9)) hits.push_back(h);

    auto add_anchor = [&](double t, double s) {
      double d = detail::delta_formula(s, w);
      for (const auto& a : P.anchors)
        if (std::abs(a.first - t) < 1e-9) {
          if (std::abs(a.second - d) > 1e-12) throw WidthViolation("zeros close to the geodesic on both sides");
          return false;
        }
      P.anchors.emplace_back(t, d);
      std::sort(P.anchors.begin(), P.anchors.end());
      return true;
    };
    if (!gp.closed) {
      P.anchors = {{0.0, 0.0}, {L, 0.0}};
    }
    P.geo = gp;
    for (Vec2 h : hits)
      if (std::abs(h.y) <= w) add_anchor(h.x, h.y);
    // A zero further out may still fall inside the interpolated strip; pin Delta there too.
    for (int round = 0; round < 16; ++round) {
      bool changed = false;
      for (Vec2 h : hits)
        if (std::abs(h.y - P.delta_at(h.x)) < w + 1e-12) changed = add_anchor(h.x, h.y) || changed;
      if (!changed) break;
      if (round == 15) throw WidthViolation("could not shear the collar off the zeros");
    }
    for (std::size_t k = 1; k < P.anchors.size(); ++k) {
      double dt = P.anchors[k].first - P.anchors[k - 1].first;
      if (dt > 0) C.slope_bound = std::max(C.slope_bound, std::abs(P.anchors[k].second - P.anchors[k - 1].second) / dt);
    }
    if (gp.closed && P.anchors.size() > 1) {
      double dt = P.anchors.front().first + L - P.anchors.back().first;
      C.slope_bound = std::max(C.slope_bound, std::abs(P.anchors.front().second - P.anchors.back().second) / dt);
    }

    if (!gp.closed) {
      const auto& conn = beta.connections[C.pieces.size()];
      auto start = detail::far_vertical_leaves(S, conn.start, conn.dir());
      auto rev = reversed(S, conn);
      auto end = detail::far_vertical_leaves(S, rev.start, rev.dir());
      if (start && end) {
        std::array<CollarPanel, 4> panels;
        // At the far end the order is (closest clockwise, closest counterclockwise).
        std::array<VertexDirection, 4> dirs{(*start)[0], (*start)[1], (*end)[1], (*end)[0]};
        for (int k = 0; k < 4; ++k) {
          auto seg = trace_from_vertex(S, dirs[k].corner, dirs[k].dir, w);
          if (seg.hit && seg.hit->s < w - 1e-12) throw WidthViolation("vertical leaf at an endpoint is too short");
          panels[k] = {dirs[k].corner, dirs[k].dir, subsegments(S, seg)};
        }
        P.panels = panels;
      }
    }
    C.multiplicity_bound += int(std::ceil(4 * L / C.ell_min - 1e-9)) + (gp.closed ? 0 : 4);
    C.pieces.push_back(std::move(P));
  }
  return C;
}

// A domain point of the collar over a surface point: (piece, panel or -1, t or distance along
// the panel leaf, s). Directions are in the chart of the crossing; `sign` converts derivatives
// to the chart of the query point.
struct CollarPreimage {
  int piece = 0;
  int panel = -1;
  double t = 0, s = 0;
  Vec2 u{};          // unit direction of the core (or panel leaf) at the crossing
  double ex = 1;     // x-component of the left horizontal unit vector at the crossing
  double slope = 0;  // Delta'(t)
  double sign = 1;
};

namespace detail {

inline const SubSegment& sub_at(const std::vector<SubSegment>& subs, double s) {
  for (const auto& x : subs)
    if (s <= x.s1 + 1e-12) return x;
  return subs.back();
}

}  // namespace detail

// All collar domain points mapping to x, found by crossing the horizontal leaf through x with the
// core pieces and panel leaves.
inline std::vector<CollarPreimage> collar_preimages(const Surface& S, const Collar& C, SurfacePoint x) {
  std::vector<CollarPreimage> out;
  const double w = C.w, reach = 2 * w * (1 + 1e-9);
  for (double dx : {1.0, -1.0}) {
    auto leg = trace_ray(S, x, {dx, 0}, reach);
    auto legs = subsegments(S, leg);
    auto collect = [&](const std::vector<SubSegment>& target, double period, int piece, int panel,
                       const CollarPiece* P) {
      for (const auto& c : detail::crossing_pairs(S, legs, 4 * reach + 1, target, period)) {
        double lam = c.sa, t = c.sb;
        if (dx < 0 && lam < 1e-12) continue;  // counted by the forward leg
        if (panel >= 0 && t > w) continue;
        Vec2 dc = normalized(legs[c.ia].b - legs[c.ia].a);
        const auto& ts = target[c.ib];
        Vec2 u = normalized(ts.b - ts.a);
        double ex = u.y > 0 ? -1.0 : 1.0;
        double delta = P ? P->delta_at(t) : 0.0;
        double s = -lam * dc.x * ex - delta;
        if (std::abs(s) > w) continue;
        out.push_back({piece, panel, t, s, u, ex, P ? P->delta_slope(t) : 0.0, dc.x * dx > 0 ? 1.0 : -1.0});
      }
    };
    for (int k = 0; k < int(C.pieces.size()); ++k) {
      const auto& P = C.pieces[k];
      collect(P.geo.subs, P.geo.closed ? P.geo.length : 4 * P.geo.length + 1, k, -1, &P);
      if (P.panels)
        for (int j = 0; j < 4; ++j) collect((*P.panels)[j].subs, 4 * w + 1, k, j, nullptr);
    }
  }
  return out;
}

struct BumpValue {
  double value = 0;
  Vec2 grad{};  // (d/dx, d/dy) in the chart of the evaluation point
};

// phi (cylinder curves) or phi_{side, delta} (saddle connections and singular geodesics).
class BumpFunction {
 public:
  BumpFunction(Collar C, double delta, int side) : C_(std::move(C)), delta_(delta), side_(side) {
    if (side != 0 && side != 1) throw PreconditionViolation("side index must be 0 or 1");
    if (!C_.cylinder()) {
      double dagger = std::min(1.0, C_.ell_min);
      if (!(delta > 0 && delta < dagger / 8)) throw DeltaOutOfRange("delta must lie in (0, l_min_dagger/8)");
      if (side == 1)
        for (const auto& p : C_.pieces)
          if (!p.panels) throw HigherOrderZero("side panels need simple zeros at both endpoints");
    }
  }

  const Collar& collar() const { return C_; }
  double delta() const { return delta_; }
  int side() const { return side_; }

  // Domain density phi* and its gradient in the chart of the crossing, times the preimage sign.
  BumpValue star(const CollarPreimage& p) const {
    const double w = C_.w;
    double f = profile::phi_eps(p.s, w), fs = profile::dphi_eps(p.s, w);
    double T = 1, Tt = 0;
    if (p.panel >= 0) {
      if (side_ == 0 || p.t >= delta_) return {};
      T = profile::psi(p.t / delta_);
      Tt = profile::dpsi(p.t / delta_) / delta_;
    } else if (!C_.cylinder() && side_ == 0) {
      double L = C_.pieces[p.piece].geo.length;
      if (p.t < delta_) {
        T = 1 - profile::psi(p.t / delta_);
        Tt = -profile::dpsi(p.t / delta_) / delta_;
      } else if (p.t > L - delta_) {
        T = 1 - profile::psi((L - p.t) / delta_);
        Tt = profile::dpsi((L - p.t) / delta_) / delta_;
      }
    }
    double ds = T * fs, dt = Tt * f;
    // x = core_x(t) + (s + Delta(t)) ex, y = core_y(t).
    double gx = ds / p.ex;
    double gy = dt / p.u.y + ds * (-p.u.x / p.ex - p.slope) / p.u.y;
    return {T * f, Vec2{gx, gy} * p.sign};
  }

  BumpValue operator()(const Surface& S, SurfacePoint x) const {
    BumpValue out;
    for (const auto& p : collar_preimages(S, C_, x)) {
      auto b = star(p);
      out.value += b.value;
      out.grad = out.grad + b.grad;
    }
    return out;
  }

 private:
  Collar C_;
  double delta_;
  int side_;
};

inline BumpFunction bump_function(const Collar& C, double delta, int side) { return BumpFunction(C, delta, side); }

namespace detail {

// Image of a domain point, with the chart sign between the crossing and the image.
inline std::pair<SurfacePoint, double> collar_image(const Surface& S, const Collar& C, int piece, int panel, double t,
                                                    double s) {
  const auto& P = C.pieces[piece];
  PiecePoint at;
  double h = s;
  if (panel < 0) {
    at = point_on_piece(P.geo, t);
    h += P.delta_at(t);
  } else {
    const auto& subs = (*P.panels)[panel].subs;
    const auto& x = sub_at(subs, t);
    double f = x.s1 > x.s0 ? (t - x.s0) / (x.s1 - x.s0) : 0;
    at = {{x.tri, x.a + (x.b - x.a) * f}, normalized(x.b - x.a)};
  }
  if (std::abs(h) < 1e-15) return {at.at, 1.0};
  double ex = at.dir.y > 0 ? -1.0 : 1.0;
  auto seg = trace_ray(S, at.at, {ex * (h > 0 ? 1 : -1), 0}, std::abs(h));
  if (seg.hit) throw WidthViolation("collar image contains a zero");
  return {seg.end, seg.direction_flipped ? -1.0 : 1.0};
}

struct Cell {
  int piece, panel;
  double t0, t1;
  double jac;
};

// Domain pieces of the support, split at the taper and shear breakpoints.
inline std::vector<Cell> support_cells(const BumpFunction& B) {
  const auto& C = B.collar();
  std::vector<Cell> cells;
  for (int k = 0; k < int(C.pieces.size()); ++k) {
    const auto& P = C.pieces[k];
    double L = P.geo.length;
    std::vector<double> br{0, L};
    for (const auto& a : P.anchors) br.push_back(a.first);
    if (!C.cylinder() && B.side() == 0) {
      br.push_back(std::min(B.delta(), L));
      br.push_back(std::max(L - B.delta(), 0.0));
    }
    std::sort(br.begin(), br.end());
    for (std::size_t i = 1; i < br.size(); ++i)
      if (br[i] - br[i - 1] > 1e-12) cells.push_back({k, -1, br[i - 1], br[i], P.vy});
    if (!C.cylinder() && B.side() == 1)
      for (int j = 0; j < 4; ++j) cells.push_back({k, j, 0, B.delta(), 1.0});
  }
  return cells;
}

// Tensor midpoint rule over every support cell with step h, then one Richardson step.
template <class F>
double domain_quadrature(const BumpFunction& B, double h, F&& f, std::size_t budget) {
  const double w = B.collar().w;
  auto cells = support_cells(B);
  auto pass = [&](double step) {
    double total = 0;
    int ns = std::max(8, int(std::ceil(2 * w / step)));
    ns += ns % 2;  // keep s = 0 off the grid
    double hs = 2 * w / ns;
    for (const auto& c : cells) {
      int nt = std::max(8, int(std::ceil((c.t1 - c.t0) / step)));
      double ht = (c.t1 - c.t0) / nt;
      if (std::size_t(nt) * ns > budget) throw QuadratureBudget("collar quadrature grid too large");
      budget -= std::size_t(nt) * ns;
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < ns; ++j) {
          double t = c.t0 + (i + 0.5) * ht, s = -w + (j + 0.5) * hs;
          total += f(c, t, s) * c.jac * ht * hs;
        }
    }
    return total;
  };
  double coarse = pass(h), fine = pass(h / 2);
  return (4 * fine - coarse) / 3;
}

inline double default_step(const Collar& C) { return C.ell_min / 512; }

}  // namespace detail

// Integral of the bump over the surface against the flat area.
inline double integrate(const BumpFunction& B, std::size_t budget = 200'000'000) {
  return detail::domain_quadrature(
      B, detail::default_step(B.collar()),
      [&](const detail::Cell& c, double t, double s) {
        CollarPreimage p{c.piece, c.panel, t, s, {0, 1}, 1, 0, 1};
        return B.star(p).value;
      },
      budget);
}

// Integral of the bump along a horizontal segment against |dx|. Every crossing of the extended
// leaf with the collar core contributes taper(t) times a profile integral over its slice.
inline double integrate(const Surface& S, const BumpFunction& B, const TracedSegment& gamma) {
  if (std::abs(gamma.start_dir.y) > 1e-12) throw PreconditionViolation("segment must be horizontal");
  const auto& C = B.collar();
  const double w = C.w, reach = 2 * w * (1 + 1e-9), L = gamma.length;
  struct Leg {
    std::vector<SubSegment> subs;
    double origin, orient;  // position along the extended leaf = origin + orient * arclength
  };
  std::vector<Leg> legs;
  legs.push_back({subsegments(S, gamma), 0, 1});
  if (!gamma.hit) legs.push_back({subsegments(S, trace_ray(S, gamma.end, gamma.end_dir, reach)), L, 1});
  if (!detail::near_triangle_vertex(S, gamma.start.tri, gamma.start.p, 1e-12))
    legs.push_back({subsegments(S, trace_ray(S, gamma.start, gamma.start_dir * -1.0, reach)), 0, -1});
  double total = 0;
  auto slice = [&](double x0, double kappa, double delta) {
    // s(x) = kappa (x - x0) - delta over x in [0, L], clipped to [-w, w].
    double a = kappa * (0 - x0) - delta, b = kappa * (L - x0) - delta;
    if (a > b) std::swap(a, b);
    a = std::max(a, -w);
    b = std::min(b, w);
    return b > a ? profile::cdf(b / w) - profile::cdf(a / w) : 0.0;
  };
  std::vector<std::pair<double, int>> seen;  // (position, target) to drop duplicates at leg joins
  for (std::size_t li = 0; li < legs.size(); ++li) {
    const auto& leg = legs[li];
    double len = leg.subs.empty() ? 0 : leg.subs.back().s1;
    for (int k = 0; k < int(C.pieces.size()); ++k) {
      const auto& P = C.pieces[k];
      auto handle = [&](const std::vector<SubSegment>& target, double period, int panel) {
        for (const auto& c : detail::crossing_pairs(S, leg.subs, 4 * len + 1, target, period)) {
          double lam = c.sa, t = c.sb;
          if (panel >= 0 && t > w) continue;
          double pos = leg.origin + leg.orient * lam;
          bool dup = false;
          for (auto [q, id] : seen) dup = dup || (id == k * 8 + panel + 1 && std::abs(q - pos) < 1e-9);
          if (dup) continue;
          seen.push_back({pos, k * 8 + panel + 1});
          const auto& ls = leg.subs[c.ia];
          Vec2 dc = normalized(ls.b - ls.a) * leg.orient;  // direction of increasing position
          const auto& ts = target[c.ib];
          Vec2 u = normalized(ts.b - ts.a);
          double ex = u.y > 0 ? -1.0 : 1.0;
          CollarPreimage p{k, panel, t, 0, u, ex, 0, 1};
          double T = B.star(p).value / profile::phi_eps(0, w);
          if (T == 0) continue;
          total += T * slice(pos, dc.x * ex, panel < 0 ? P.delta_at(t) : 0.0);
        }
      };
      handle(P.geo.subs, P.geo.closed ? P.geo.length : 4 * P.geo.length + 1, -1);
      if (P.panels)
        for (int j = 0; j < 4; ++j) handle((*P.panels)[j].subs, 4 * w + 1, j);
    }
  }
  return total;
}

struct SobolevParts {
  double l2 = 0, dx = 0, dy = 0;  // squared L2 norms over X
  double norm() const { return std::sqrt(2 * l2) + std::sqrt(2 * dx) + std::sqrt(2 * dy); }
};

// ||phi||_{1,q} on the orientation double cover: each squared L2 term is twice its value on X.
// Uses  integral_X f^2 = integral_D f(iota(p)) f*(p) J(p) dp,  which needs no multiplicity count.
inline SobolevParts sobolev_parts(const Surface& S, const BumpFunction& B, std::size_t budget = 200'000'000) {
  const auto& C = B.collar();
  SobolevParts out;
  std::array<double, 3> acc{};
  for (int term = 0; term < 3; ++term) {
    acc[term] = detail::domain_quadrature(
        B, detail::default_step(C),
        [&](const detail::Cell& c, double t, double s) {
          const auto& P = C.pieces[c.piece];
          Vec2 u;
          double slope = 0;
          if (c.panel < 0) {
            u = point_on_piece(P.geo, t).dir;
            slope = P.delta_slope(t);
          } else {
            const auto& x = detail::sub_at((*P.panels)[c.panel].subs, t);
            u = normalized(x.b - x.a);
          }
          CollarPreimage self{c.piece, c.panel, t, s, u, u.y > 0 ? -1.0 : 1.0, slope, 1};
          auto own = B.star(self);
          double mine = term == 0 ? own.value : term == 1 ? own.grad.x : own.grad.y;
          if (mine == 0) return 0.0;
          auto [x, sign] = detail::collar_image(S, C, c.piece, c.panel, t, s);
          auto all = B(S, x);
          double there = term == 0 ? all.value : (term == 1 ? all.grad.x : all.grad.y) * sign;
          return mine * there;
        },
        budget);
  }
  out.l2 = acc[0];
  out.dx = acc[1];
  out.dy = acc[2];
  return out;
}

inline double sobolev_norm(const Surface& S, const BumpFunction& B) { return sobolev_parts(S, B).norm(); }

// Sampled checks of the immersion: largest preimage count, and the number of domain points
// whose image has another preimage in the same t-window of length l_min/4.
struct CollarSampling {
  int max_preimages = 0;
  int window_collisions = 0;
};

inline CollarSampling sample_collar(const Surface& S, const Collar& C, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CollarSampling out;
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < samples; ++i) {
    int k = int(U(rng) * C.pieces.size()) % int(C.pieces.size());
    const auto& P = C.pieces[k];
    double t = (0.001 + 0.998 * U(rng)) * P.geo.length, s = (2 * U(rng) - 1) * C.w * 0.999;
    auto [x, sign] = detail::collar_image(S, C, k, -1, t, s);
    auto pre = collar_preimages(S, C, x);
    out.max_preimages = std::max(out.max_preimages, int(pre.size()));
    int self = 0;
    for (const auto& p : pre) {
      if (p.piece != k || p.panel != -1) continue;
      double dt = std::abs(p.t - t);
      if (P.geo.closed) dt = std::min(dt, P.geo.length - dt);
      if (dt <= C.ell_min / 4) ++self;
    }
    if (self != 1) ++out.window_collisions;
  }
  return out;
}

}  // namespace hts
