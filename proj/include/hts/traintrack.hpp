#pragma once

#include <algorithm>
#include <array>
#include <boost/rational.hpp>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "hts/geodesic.hpp"

namespace hts {

// One switch per triangle: the branch across the large side `a` splits into the branches across
// `b` and `c`. Track edges are the triangulation edges (by edge id).
struct Switch {
  int triangle = -1;
  int incoming = -1;               // edge id of a
  std::array<int, 2> outgoing{};   // edge ids of b, c
  std::array<int, 3> local{};      // local sides a, b, c of the triangle
};

struct Labeling {
  int triangle = -1;
  std::array<int, 3> chosen{};                 // local sides a, b, c
  std::optional<std::array<int, 3>> alternative;  // second admissible labeling when a side is vertical
};

struct TrainTrack {
  int num_edges = 0;
  std::vector<Switch> switches;
  std::vector<Labeling> labels;
  std::vector<int> cusps;  // per vertex: cusps of the complementary region around it
  bool maximal = false;
};

using CountingMeasure = std::vector<double>;
using IntegerMeasure = std::vector<long>;

inline TrainTrack dual_train_track(const Surface& S) {
  TrainTrack tt;
  tt.num_edges = S.num_edges();
  tt.cusps.assign(S.num_vertices(), 0);
  for (int t = 0; t < S.num_triangles(); ++t) {
    std::array<double, 3> x;
    double scale = 0;
    for (int k = 0; k < 3; ++k) {
      x[k] = std::abs(S.edge({t, k}).x);
      scale = std::max(scale, norm(S.edge({t, k})));
    }
    auto labeling_with = [&](int a) { return std::array<int, 3>{a, next3(a), prev3(a)}; };
    int vertical = -1;
    for (int k = 0; k < 3; ++k)
      if (x[k] <= eps_geom * scale) vertical = k;
    Labeling L;
    L.triangle = t;
    if (vertical >= 0) {
      // Both non-vertical sides have the same horizontal extent. Pick the labeling of the surface
      // turned by a tiny positive angle, where x becomes x - theta y; this keeps the cusps of the
      // two triangles along a vertical edge at opposite ends.
      int p = next3(vertical), q = prev3(vertical);
      auto drift = [&](int k) {
        Vec2 e = S.edge({t, k});
        return -(e.x > 0 ? 1.0 : -1.0) * e.y;
      };
      double dp = drift(p), dq = drift(q);
      if (dq > dp + eps_geom * scale || (std::abs(dq - dp) <= eps_geom * scale && S.edge_id({t, q}) < S.edge_id({t, p})))
        std::swap(p, q);
      L.chosen = labeling_with(p);
      L.alternative = labeling_with(q);
    } else {
      int a = int(std::max_element(x.begin(), x.end()) - x.begin());
      L.chosen = labeling_with(a);
    }
    auto [a, b, c] = L.chosen;
    tt.switches.push_back({t, S.edge_id({t, a}), {S.edge_id({t, b}), S.edge_id({t, c})}, L.chosen});
    tt.labels.push_back(L);
    // The corner opposite a (between b and c) opens into a cusp of its vertex region.
    tt.cusps[S.vertex_of({t, prev3(a)})]++;
  }
  tt.maximal = std::all_of(tt.cusps.begin(), tt.cusps.end(), [](int c) { return c == 3; });
  return tt;
}

inline CountingMeasure vertical_counting_measure(const Surface& S, const TrainTrack& tt) {
  CountingMeasure w(tt.num_edges);
  for (int e = 0; e < tt.num_edges; ++e) w[e] = std::abs(S.edge(S.edge_halves(e)[0]).x);
  return w;
}

// Largest switch imbalance |w(a) - w(b) - w(c)|.
template <class W>
double switch_defect(const TrainTrack& tt, const W& w) {
  double worst = 0;
  for (const auto& s : tt.switches)
    worst = std::max(worst, std::abs(double(w[s.incoming]) - double(w[s.outgoing[0]]) - double(w[s.outgoing[1]])));
  return worst;
}

template <class W>
bool satisfies_switches(const TrainTrack& tt, const W& w) {
  if (int(w.size()) != tt.num_edges) return false;
  for (auto x : w)
    if (x < 0) return false;
  return switch_defect(tt, w) == 0;
}

// ---------------------------------------------------------------------------------------------
// Carried multicurves.

inline IntegerMeasure to_integer_measure(const CountingMeasure& w) {
  IntegerMeasure out;
  for (double x : w) {
    if (!(x >= 0) || std::abs(x - std::round(x)) > 1e-12) throw NonIntegerWeights("weights must be non-negative integers");
    out.push_back(std::lround(x));
  }
  return out;
}

// Realizes w as a normal multicurve: w(e) parallel strands cross edge e, and inside every
// triangle the strands through a split into w(b) arcs turning to b and w(c) arcs turning to c.
// Strand i on side k of a triangle is counted from P_k.
inline std::vector<CurveWord> carried_multicurve(const Surface& S, const TrainTrack& tt, const IntegerMeasure& w) {
  if (int(w.size()) != tt.num_edges) throw PreconditionViolation("one weight per track edge");
  if (!satisfies_switches(tt, w)) throw PreconditionViolation("weights violate the switch conditions");
  auto weight = [&](HalfEdge h) { return w[S.edge_id(h)]; };
  // Arcs around corner k of triangle t (between sides k-1 and k).
  auto corner_arcs = [&](int t, int k) {
    return (weight({t, prev3(k)}) + weight({t, k}) - weight({t, next3(k)})) / 2;
  };
  // Visited flags per edge id, indexed by position along the canonical half.
  std::vector<std::vector<char>> seen(tt.num_edges);
  for (int e = 0; e < tt.num_edges; ++e) seen[e].assign(w[e], 0);
  auto canonical_position = [&](HalfEdge h, long i) {
    int e = S.edge_id(h);
    return S.edge_halves(e)[0] == h ? i : w[e] - 1 - i;
  };

  std::vector<CurveWord> out;
  for (int e = 0; e < tt.num_edges; ++e)
    for (long i0 = 0; i0 < w[e]; ++i0) {
      if (seen[e][i0]) continue;
      CurveWord word;
      // Enter the triangle on the far side of the canonical half at the matching position.
      HalfEdge h = S.partner(S.edge_halves(e)[0]);
      long i = w[e] - 1 - i0;
      while (true) {
        int t = h.tri, k = h.edge;
        long nk = corner_arcs(t, k);
        HalfEdge exit;
        long p;
        if (i < nk) {
          exit = {t, prev3(k)};
          p = weight(exit) - 1 - i;
        } else {
          exit = {t, next3(k)};
          p = weight({t, k}) - 1 - i;
        }
        int ex = S.edge_id(exit);
        long cp = canonical_position(exit, p);
        if (seen[ex][cp]) break;  // back at the starting strand
        seen[ex][cp] = 1;
        word.push_back(exit);
        h = S.partner(exit);
        i = weight(exit) - 1 - p;
      }
      out.push_back(std::move(word));
    }
  return out;
}

// Crossings of each triangulation edge by a closed word.
inline IntegerMeasure traversal_counts(const Surface& S, const CurveWord& w) {
  IntegerMeasure out(S.num_edges(), 0);
  for (auto h : w) out[S.edge_id(h)]++;
  return out;
}

// Random integer point of V(tau): free variables drawn in [0, max_free], the rest solved exactly.
// Returns nullopt when the draw lands outside the cone or off the lattice.
inline std::optional<IntegerMeasure> random_integer_measure(const TrainTrack& tt, long max_free, std::mt19937_64& rng) {
  using Q = boost::rational<long long>;
  int n = tt.num_edges;
  std::vector<std::vector<Q>> A;
  for (const auto& s : tt.switches) {
    std::vector<Q> row(n, Q(0));
    row[s.incoming] += Q(1);
    row[s.outgoing[0]] -= Q(1);
    row[s.outgoing[1]] -= Q(1);
    A.push_back(row);
  }
  // Reduced row echelon form.
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < n && r < int(A.size()); ++c) {
    int p = -1;
    for (int i = r; i < int(A.size()); ++i)
      if (A[i][c] != Q(0)) p = i;
    if (p < 0) continue;
    std::swap(A[r], A[p]);
    Q inv = Q(1) / A[r][c];
    for (auto& x : A[r]) x *= inv;
    for (int i = 0; i < int(A.size()); ++i)
      if (i != r && A[i][c] != Q(0)) {
        Q f = A[i][c];
        for (int j = 0; j < n; ++j) A[i][j] -= f * A[r][j];
      }
    pivot_col.push_back(c);
    ++r;
  }
  std::vector<char> is_pivot(n, 0);
  for (int c : pivot_col) is_pivot[c] = 1;
  std::uniform_int_distribution<long> U(0, max_free);
  std::vector<Q> x(n, Q(0));
  for (int c = 0; c < n; ++c)
    if (!is_pivot[c]) x[c] = Q(U(rng));
  for (int i = 0; i < r; ++i) {
    Q v(0);
    for (int j = 0; j < n; ++j)
      if (!is_pivot[j]) v -= A[i][j] * x[j];
    x[pivot_col[i]] = v;
  }
  IntegerMeasure out;
  for (auto v : x) {
    if (v < Q(0) || v.denominator() != 1) return std::nullopt;
    out.push_back(long(v.numerator()));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Intersection functionals on carried multicurves.

struct IntersectionInterval {
  long lo = 0, hi = 0;
};

// i(alpha, mu_w) bracketed by summing the flat intervals of every component.
inline IntersectionInterval carried_intersection(const Surface& S, const TrainTrack& tt, const FlatGeodesic& alpha,
                                                 const IntegerMeasure& w) {
  IntersectionInterval out;
  for (const auto& word : carried_multicurve(S, tt, w)) {
    FlatGeodesic g;
    try {
      g = tighten(S, word);
    } catch (const NullHomotopic&) {
      continue;
    }
    auto b = intersection_bounds(S, alpha, g);
    out.lo += b.lo;
    out.hi += b.hi;
  }
  return out;
}

struct ConvexityProbe {
  IntersectionInterval sum, doubled_v, doubled_w, v, w;
  bool conclusive_violation = false;  // lo(v + w) > (hi(2v) + hi(2w)) / 2
  bool conclusive_equality = false;   // all intervals exact and the two sides agree
  double lipschitz_upper = 0;         // max |i(v) - i(w)| / |v - w| over the intervals
};

inline ConvexityProbe convexity_lipschitz_probe(const Surface& S, const TrainTrack& tt, const FlatGeodesic& alpha,
                                                const IntegerMeasure& v, const IntegerMeasure& w) {
  IntegerMeasure s(v.size()), v2(v.size()), w2(v.size());
  for (std::size_t e = 0; e < v.size(); ++e) s[e] = v[e] + w[e], v2[e] = 2 * v[e], w2[e] = 2 * w[e];
  ConvexityProbe p;
  p.sum = carried_intersection(S, tt, alpha, s);
  p.doubled_v = carried_intersection(S, tt, alpha, v2);
  p.doubled_w = carried_intersection(S, tt, alpha, w2);
  p.v = carried_intersection(S, tt, alpha, v);
  p.w = carried_intersection(S, tt, alpha, w);
  // Compared at doubled scale to stay in integers.
  p.conclusive_violation = 2 * p.sum.lo > p.doubled_v.hi + p.doubled_w.hi;
  auto exact = [](IntersectionInterval x) { return x.lo == x.hi; };
  p.conclusive_equality = exact(p.sum) && exact(p.doubled_v) && exact(p.doubled_w) &&
                          2 * p.sum.lo == p.doubled_v.lo + p.doubled_w.lo;
  double d = 0;
  for (std::size_t e = 0; e < v.size(); ++e) d += double(v[e] - w[e]) * double(v[e] - w[e]);
  d = std::sqrt(d);
  if (d > 0) p.lipschitz_upper = double(std::max(p.v.hi - p.w.lo, p.w.hi - p.v.lo)) / d;
  return p;
}

// h_beta(q): smallest horizontal fraction over the pieces of the flat representative.
inline double h_beta(const Surface& S, const CurveWord& beta) { return geodesic_stats(tighten(S, beta)).h; }

}  // namespace hts
