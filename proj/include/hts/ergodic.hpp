#pragma once

#include <algorithm>
#include <boost/rational.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hts/collar.hpp"

namespace hts {

// ---------------------------------------------------------------------------------------------
// Greedy partitions.

template <class R>
struct GreedyPartition {
  R leftover{};
  std::vector<long> multiplicity;  // m_k for level k = 1..N (index k-1)
  std::vector<R> piece_length;     // T_k
  R total() const {
    R t = leftover;
    for (std::size_t k = 0; k < multiplicity.size(); ++k) t += R(multiplicity[k]) * piece_length[k];
    return t;
  }
};

namespace detail {
inline long floor_quotient(double a, double b) { return long(std::floor(a / b)); }
template <class I>
long floor_quotient(const boost::rational<I>& a, const boost::rational<I>& b) {
  auto q = a / b;  // both positive here
  return long(q.numerator() / q.denominator());
}
}  // namespace detail

// Largest pieces first: whatever is left after level k+1 is shorter than T_{k+1}.
template <class R>
GreedyPartition<R> greedy_partition(R ell, const std::vector<R>& T) {
  if (!(ell > R(0))) throw BadThresholds("length must be positive");
  if (T.empty()) throw BadThresholds("no thresholds");
  if (!(T.front() > R(0))) throw BadThresholds("thresholds must be positive");
  for (std::size_t k = 1; k < T.size(); ++k)
    if (!(T[k] > T[k - 1])) throw BadThresholds("thresholds must be strictly increasing");
  GreedyPartition<R> out;
  out.piece_length = T;
  out.multiplicity.assign(T.size(), 0);
  R rest = ell;
  for (std::size_t k = T.size(); k-- > 0;) {
    long m = detail::floor_quotient(rest, T[k]);
    out.multiplicity[k] = m;
    rest -= R(m) * T[k];
  }
  out.leftover = rest;
  return out;
}

// The three partition conditions plus the length sum.
template <class R>
bool partition_conditions_hold(const GreedyPartition<R>& P, R ell) {
  const auto& T = P.piece_length;
  if (!(P.leftover < T.front()) || P.leftover < R(0)) return false;
  for (std::size_t k = 0; k < T.size(); ++k) {
    R next = k + 1 < T.size() ? T[k + 1] : ell;
    if (P.multiplicity[k] < 0 || R(P.multiplicity[k]) * T[k] > next) return false;
  }
  return P.total() == ell;
}

// ---------------------------------------------------------------------------------------------
// Membership traces. Cell k covers [t0 + k dt, t0 + (k+1) dt).

struct MembershipTrace {
  double dt = 0.01;
  double t0 = 0;
  double T = 0;
  std::vector<char> K, Kp;

  long index(double t) const { return long(std::floor((t - t0) / dt + 1e-9)); }
  double cell_start(long k) const { return t0 + k * dt; }
  bool in_K(double t) const {
    long k = index(t);
    return k >= 0 && k < long(K.size()) && K[k];
  }
  bool in_Kp(double t) const {
    long k = index(t);
    return k >= 0 && k < long(Kp.size()) && Kp[k];
  }
};

// K sampled on [-s, T + s]; K' is its dilation by s, which is what the flow enlargement means
// for a single orbit.
inline MembershipTrace trace_from_K(std::vector<char> K, double dt, double T, double s) {
  if (!(dt > 0)) throw PreconditionViolation("dt must be positive");
  MembershipTrace tr;
  tr.dt = dt;
  tr.t0 = -s;
  tr.T = T;
  long r = std::lround(s / dt);
  long n = long(K.size());
  tr.Kp.assign(n, 0);
  // Sliding window count of K cells.
  std::vector<long> pre(n + 1, 0);
  for (long k = 0; k < n; ++k) pre[k + 1] = pre[k] + (K[k] ? 1 : 0);
  for (long k = 0; k < n; ++k) tr.Kp[k] = pre[std::min(n, k + r + 1)] - pre[std::max(0L, k - r)] > 0;
  tr.K = std::move(K);
  return tr;
}

inline long trace_cells(double dt, double T, double s) { return std::lround((T + 2 * s) / dt); }

// Orbit instrumentation with K = {l_min >= delta}. The Delaunay triangulation is carried along the
// orbit so that every l_min evaluation is local.
inline MembershipTrace orbit_trace(const Surface& S, double delta, double T, double dt, double s) {
  long n = trace_cells(dt, T, s);
  std::vector<char> K(n);
  Surface D = delaunay_triangulation(apply_matrix(S, a_t(-s + dt / 2))).surface;
  for (long k = 0; k < n; ++k) {
    if (k > 0) D = delaunay_triangulation(apply_matrix(D, a_t(dt))).surface;
    K[k] = ell_min(D) >= delta;
  }
  return trace_from_K(std::move(K), dt, T, s);
}

// |{t in [0, T] : outside K}| / T to resolution dt.
inline double excursion_measure(const MembershipTrace& tr) {
  long a = tr.index(0), b = tr.index(tr.T);
  long out = 0;
  for (long k = std::max(0L, a); k < std::min(b, long(tr.K.size())); ++k) out += !tr.K[k];
  out += std::max(0L, b - long(tr.K.size())) + std::max(0L, -a);  // beyond the sampled range counts as outside
  return out * tr.dt;
}

inline double recurrence_fraction(const MembershipTrace& tr) { return excursion_measure(tr) / tr.T; }

// ---------------------------------------------------------------------------------------------
// Itineraries.

struct Itinerary {
  std::vector<double> times;  // s_0 .. s_{N+1}
  int N() const { return int(times.size()) - 2; }
};

inline Itinerary sample_itinerary(const MembershipTrace& tr, double T, double rho, double s) {
  const double inf = std::numeric_limits<double>::infinity();
  Itinerary it;
  double cur = rho * T;
  it.times.push_back(cur);
  while (true) {
    double next;
    bool stays = true;
    // Closed window [cur, cur + s]: the cell holding cur + s is checked too, so every sampled
    // time lands in K'.
    for (long k = tr.index(cur), e = tr.index(cur + s); k <= e && stays; ++k)
      stays = k >= 0 && k < long(tr.Kp.size()) && tr.Kp[k];
    if (stays) {
      next = cur + s;
    } else {
      // First K time after cur + s, on the grid.
      next = inf;
      long k0 = tr.index(cur + s);
      if (k0 >= 0 && k0 < long(tr.K.size()) && tr.K[k0]) next = cur + s;
      for (long k = std::max(k0 + 1, 0L); next == inf && k < long(tr.K.size()); ++k)
        if (tr.K[k]) next = tr.cell_start(k);
    }
    if (next >= T) break;
    it.times.push_back(next);
    cur = next;
  }
  it.times.push_back(T);
  return it;
}

struct ItineraryViolation {
  int condition;  // 1..6 as in the definition; 0 for N = 0
  int n;
};

struct ItineraryCheck {
  std::vector<ItineraryViolation> violations;
  bool valid() const { return violations.empty(); }
  bool violates(int condition) const {
    return std::any_of(violations.begin(), violations.end(), [&](auto v) { return v.condition == condition; });
  }
};

inline ItineraryCheck validate_itinerary(const Itinerary& it, const MembershipTrace& tr, double T, double rho,
                                         double eps, double s) {
  ItineraryCheck out;
  const auto& x = it.times;
  const double tol = 1e-9;
  if (x.size() < 2) {
    out.violations.push_back({0, 0});
    return out;
  }
  int N = it.N();
  if (N < 1) out.violations.push_back({0, 0});
  for (int n = 1; n <= N; ++n)
    if (!tr.in_Kp(x[n])) out.violations.push_back({1, n});
  if (std::abs(x[0] - rho * T) > tol) out.violations.push_back({2, 0});
  if (!(x[N] < T)) out.violations.push_back({3, N});
  if (std::abs(x[N + 1] - T) > tol) out.violations.push_back({4, N + 1});
  for (int n = 1; n <= N - 1; ++n)
    if (x[n + 1] < x[n] + s - tol) out.violations.push_back({5, n});
  for (int n = 0; n <= N; ++n)
    if (x[n + 1] - x[n] > eps * x[n] + tol) out.violations.push_back({6, n});
  return out;
}

// Sum_j e^{lambda s_j} / e^{lambda s_k} over s_1..s_N, and the explicit constant that bounds it.
inline double summability_ratio(const Itinerary& it, double lambda) {
  int N = it.N();
  if (N < 1) return 0;
  double sum = 0;
  for (int j = 1; j <= N; ++j) sum += std::exp(lambda * (it.times[j] - it.times[N]));
  return sum;
}

inline double summability_constant(double s, double lambda) {
  return std::ceil(1 / s) * std::exp(2 * lambda) / (std::exp(lambda) - 1);
}

// ---------------------------------------------------------------------------------------------
// Synthetic traces.

// Random K trace on [-s, T + s] whose excursion measure inside [0, T] is at most `budget`.
inline MembershipTrace random_trace(double T, double dt, double s, double budget, std::mt19937_64& rng) {
  long n = trace_cells(dt, T, s);
  std::vector<char> K(n, 1);
  // Total removed length never exceeds the budget, wherever the pieces land.
  long remaining = long(std::floor(budget / dt + 1e-9));
  int m = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < m; ++i) {
    long len = std::uniform_int_distribution<long>(0, remaining)(rng);
    long start = std::uniform_int_distribution<long>(0, n - len)(rng);
    std::fill(K.begin() + start, K.begin() + start + len, 0);
    remaining -= len;
  }
  return trace_from_K(std::move(K), dt, T, s);
}

struct SamplerReport {
  long traces = 0;
  long valid = 0;
  long failures = 0;
  long failures_with_large_excursion = 0;  // excursion > rho eps T to grid resolution
  bool consistent() const { return failures == failures_with_large_excursion; }
};

inline void record_sample(SamplerReport& r, const MembershipTrace& tr, double T, double rho, double eps, double s) {
  if (rho * (1 + eps) >= 1 || T < s / (rho * eps)) throw PreconditionViolation("sampler hypotheses not met");
  auto it = sample_itinerary(tr, T, rho, s);
  bool ok = validate_itinerary(it, tr, T, rho, eps, s).valid();
  ++r.traces;
  if (ok) {
    ++r.valid;
    return;
  }
  ++r.failures;
  if (excursion_measure(tr) > rho * eps * T - 2 * tr.dt) ++r.failures_with_large_excursion;
}

inline SamplerReport falsify_sampler_failure(const std::vector<MembershipTrace>& traces, double T, double rho,
                                             double eps, double s) {
  SamplerReport r;
  for (const auto& tr : traces) record_sample(r, tr, T, rho, eps, s);
  return r;
}

// ---------------------------------------------------------------------------------------------
// Equidistribution and the intersection estimate.

struct EquidistributionError {
  double segment_integral = 0;
  double expected = 0;  // length * integral over X
  double error = 0;
  double normalized = 0;
};

inline EquidistributionError equidistribution_error(const Surface& S, const TracedSegment& gamma,
                                                     const BumpFunction& B, double surface_integral) {
  if (std::abs(S.area() - 1) > 1e-9) throw PreconditionViolation("surface must have unit area");
  EquidistributionError e;
  if (gamma.length == 0) return e;
  if (gamma.hit) throw PreconditionViolation("segment runs into a singularity");
  if (std::abs(gamma.start_dir.y) > 1e-12 * norm(gamma.start_dir))
    throw PreconditionViolation("segment is not horizontal");
  e.segment_integral = integrate(S, B, gamma);
  e.expected = gamma.length * surface_integral;
  e.error = std::abs(e.segment_integral - e.expected);
  e.normalized = e.error / gamma.length;
  return e;
}

inline EquidistributionError equidistribution_error(const Surface& S, const TracedSegment& gamma,
                                                     const BumpFunction& B) {
  return equidistribution_error(S, gamma, B, integrate(B));
}

// Closed-trajectory words in the first `count` primitive rational directions (ordered by length)
// that carry one through a triangle centroid. Only meaningful on surfaces where rational
// directions are periodic, such as square-tiled ones.
inline std::vector<CurveWord> direction_curve_words(const Surface& S, int count, int max_coord = 12) {
  std::vector<std::pair<int, int>> dirs;
  for (int p = 0; p <= max_coord; ++p)
    for (int q = -max_coord; q <= max_coord; ++q)
      if (std::gcd(p, q) == 1 && (p > 0 || q > 0)) dirs.push_back({p, q});
  std::stable_sort(dirs.begin(), dirs.end(), [](auto a, auto b) {
    return a.first * a.first + a.second * a.second < b.first * b.first + b.second * b.second;
  });
  std::vector<CurveWord> out;
  for (auto [p, q] : dirs) {
    if (int(out.size()) == count) break;
    Vec2 d{double(p), double(q)};
    for (int t = 0; t < S.num_triangles(); ++t) {
      auto tr = closed_trajectory(S, centroid(S, t), d, 4 * S.area() * norm(d) + 4);
      if (!tr) continue;
      out.push_back(word_of_trace(*tr));
      break;
    }
  }
  if (int(out.size()) < count) throw BudgetExceeded("not enough periodic directions");
  return out;
}

struct EquidistributionSeries {
  std::vector<double> T;
  std::vector<std::vector<double>> normalized;  // [T index][bump index]
  std::vector<double> mean;                      // of normalized, per T
  std::vector<double> mean_expected, mean_integral, mean_error;
};

// S0 is rotated by theta and normalized to unit area; bumps come from cylinder curves of S0
// re-tightened on the rotated surface. Segments of length e^T start at a seeded random point.
inline EquidistributionSeries equidistribution_series(const Surface& S0, double theta, const std::vector<double>& Ts,
                                                      int bumps, std::uint64_t seed) {
  Surface S = normalize_area(apply_matrix(S0, r_theta(theta)));
  std::vector<BumpFunction> B;
  std::vector<double> mass;
  // At most one direction of S0 turns horizontal on S; its collar does not exist.
  for (const auto& w : direction_curve_words(S0, bumps + 1)) {
    if (int(B.size()) == bumps) break;
    auto g = tighten(S, w);
    if (geodesic_stats(g).v <= 1e-12) continue;
    B.push_back(bump_function(build_collar(S, g), 0, 0));
    mass.push_back(integrate(B.back()));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  EquidistributionSeries out;
  for (double T : Ts) {
    TracedSegment gamma;
    do {
      int t = std::min(S.num_triangles() - 1, int(U(rng) * S.num_triangles()));
      auto P = S.vertex_positions(t);
      double a = U(rng), b = U(rng);
      if (a + b > 1) a = 1 - a, b = 1 - b;
      gamma = trace_ray(S, {t, P[0] + (P[1] - P[0]) * a + (P[2] - P[0]) * b}, {1, 0}, std::exp(T));
    } while (gamma.hit);
    std::vector<double> row;
    double m = 0, ex = 0, in = 0, er = 0;
    for (std::size_t i = 0; i < B.size(); ++i) {
      auto e = equidistribution_error(S, gamma, B[i], mass[i]);
      row.push_back(e.normalized);
      m += e.normalized / B.size();
      ex += e.expected / B.size();
      in += e.segment_integral / B.size();
      er += e.error / B.size();
    }
    out.T.push_back(T);
    out.normalized.push_back(std::move(row));
    out.mean.push_back(m);
    out.mean_expected.push_back(ex);
    out.mean_integral.push_back(in);
    out.mean_error.push_back(er);
  }
  return out;
}

struct EstimateReport {
  double predicted = 0;
  long lo = 0, hi = 0;
  double residual = 0;
  double normalized = 0;
};

// Words are combinatorial on the triangulation of qs, which the flow keeps.
inline EstimateReport main_estimate(const Surface& qs, double r, const CurveWord& alpha, const CurveWord& beta) {
  if (!(r > 0)) throw PreconditionViolation("r must be positive");
  if (std::abs(qs.area() - 1) > 1e-9) throw PreconditionViolation("q_s must have unit area");
  Surface qe = apply_matrix(qs, a_t(r));
  auto as = tighten(qs, alpha);
  auto ae = tighten(qe, alpha), be = tighten(qe, beta);
  auto bs = geodesic_stats(be);
  if (bs.v <= 1e-12) throw HorizontalGeodesic("beta is horizontal on q_e");
  EstimateReport out;
  out.predicted = geodesic_stats(as).re * bs.im * std::exp(r);
  auto b = intersection_bounds(qe, ae, be);
  out.lo = b.lo;
  out.hi = b.hi;
  out.residual = out.predicted < b.lo ? b.lo - out.predicted : out.predicted > b.hi ? out.predicted - b.hi : 0.0;
  // predicted carries the rounding of e^r and the tightened holonomies; the bounds are integers.
  if (out.residual <= eps_geom * std::max(1.0, out.predicted)) out.residual = 0;
  out.normalized = out.residual / std::exp(r);
  return out;
}

}  // namespace hts
