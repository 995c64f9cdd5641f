// One PASS/FAIL line per acceptance criterion. Exit status counts failures that are not listed in
// known_failures; a listed criterion still prints FAIL with its measurements.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/rational.hpp>

#include "curves.hpp"
#include "fixtures.hpp"
#include "hts/collar.hpp"
#include "hts/ergodic.hpp"
#include "hts/rectdecomp.hpp"
#include "hts/saddle.hpp"
#include "hts/traintrack.hpp"

using namespace hts;
using namespace curves;

namespace {

using Clock = std::chrono::steady_clock;
using Q = boost::rational<long long>;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Measured Sobolev norms grow like delta^(-1/2) on tapered collars and are flat on cylinder
// collars, so norm * delta is not stable; kept as an honest failure.
const std::set<int> known_failures = {7};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

std::optional<FlatGeodesic> random_geodesic(const Surface& S, int steps, std::mt19937_64& rng, CurveWord* word = nullptr) {
  auto w = random_word(S, steps, rng);
  try {
    auto g = tighten(S, w);
    if (word) *word = w;
    return g;
  } catch (const NullHomotopic&) {
    return std::nullopt;
  }
}

// Closed torus geodesic of holonomy (p, q); base points off the lines through lattice points.
FlatGeodesic torus_geodesic(const Surface& T, int p, int q) {
  for (Vec2 b : {Vec2{0.6, 0.2}, Vec2{0.37, 0.29}, Vec2{0.71, 0.13}, Vec2{0.55, 0.31}}) {
    auto tr = closed_trajectory(T, {0, b}, {double(p), double(q)}, std::hypot(p, q) + 1);
    if (tr) return tighten(T, word_of_trace(*tr));
  }
  throw std::runtime_error("no closed torus trajectory");
}

SurfacePoint random_point(const Surface& S, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  int t = int(U(rng) * S.num_triangles()) % S.num_triangles();
  double a = U(rng), b = U(rng);
  if (a + b > 1) a = 1 - a, b = 1 - b;
  auto P = S.vertex_positions(t);
  return {t, P[0] + (P[1] - P[0]) * a + (P[2] - P[0]) * b};
}

FlatGeodesic as_geodesic(const SaddleConnection& c) {
  FlatGeodesic g;
  g.kind = GeodesicKind::Singular;
  g.connections = {c};
  return g;
}

// ---------------------------------------------------------------------------------------------

Outcome torus_exactness() {
  auto start = Clock::now();
  Surface T = fixtures::torus();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> U(-7, 7);
  auto primitive = [&] {
    for (;;) {
      int p = U(rng), q = U(rng);
      if (std::gcd(p, q) == 1) return std::pair{p, q};
    }
  };
  int exact = 0, pairs = 50;
  for (int i = 0; i < pairs; ++i) {
    auto [p, q] = primitive();
    auto [r, s] = primitive();
    auto b = intersection_bounds(T, torus_geodesic(T, p, q), torus_geodesic(T, r, s));
    long det = std::abs(long(p) * s - long(q) * r);
    exact += b.I == det && b.lo == det && b.hi == det;
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {exact == pairs && secs < 5,
          std::to_string(exact) + "/" + std::to_string(pairs) + " pairs equal |det| with width 0, " + fmt(secs, 3) +
              " s (limit 5 s)"};
}

Outcome sandwich_consistency() {
  auto start = Clock::now();
  std::mt19937_64 rng(202);
  int consistent = 0, pairs = 0, unresolved = 0;
  for (const Surface& S : {fixtures::l3(), fixtures::octagon()}) {
    std::vector<Surface> flowed = {apply_matrix(S, a_t(0.5)), apply_matrix(S, a_t(1))};
    int here = 0;
    for (int i = 0; here < 30 && i < 400; ++i) {
      CurveWord wa, wb;
      auto a = random_geodesic(S, 4 + i % 8, rng, &wa);
      auto b = random_geodesic(S, 4 + (i + 5) % 8, rng, &wb);
      if (!a || !b) continue;
      try {
        std::vector<IntersectionBounds> r = {intersection_bounds(S, *a, *b)};
        for (const auto& St : flowed) r.push_back(intersection_bounds(St, tighten(St, wa), tighten(St, wb)));
        bool ok = true;
        for (const auto& x : r)
          for (const auto& y : r) ok = ok && std::max(x.lo, y.lo) <= std::min(x.hi, y.hi);
        consistent += ok;
      } catch (const SharedArcUnresolved&) {
        ++unresolved;
        continue;
      }
      ++here;
    }
    pairs += here;
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {pairs == 60 && consistent == pairs && secs < 60,
          std::to_string(consistent) + "/" + std::to_string(pairs) + " pairs (30 per fixture) intersect at t = 0, 0.5, 1; " +
              std::to_string(unresolved) + " unresolved skipped; " + fmt(secs, 3) + " s (limit 60 s)"};
}

Outcome crossing_bound() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> U(0, 1);
  int pairs = 0, violations = 0;
  double worst = 0;
  for (const Surface& S : {fixtures::l3(), fixtures::octagon()}) {
    double sys = systole(S);
    int here = 0;
    for (int i = 0; here < 500 && i < 2000; ++i) {
      auto g = random_geodesic(S, 4 + i % 8, rng);
      if (!g) continue;
      for (int j = 0; j < 10 && here < 500; ++j) {
        double th = 2 * pi * U(rng);
        auto sigma = trace_ray(S, random_point(S, rng), {std::cos(th), std::sin(th)}, sys / 2 * U(rng));
        if (sigma.hit || sigma.length == 0) continue;
        double n = double(crossings_with_segment(S, *g, sigma)), bound = 1 + 2 * g->length() / sys;
        violations += n > bound + 1e-9;
        worst = std::max(worst, n / bound);
        ++here;
      }
    }
    pairs += here;
  }
  return {pairs == 1000 && violations == 0, std::to_string(violations) + " violations over " + std::to_string(pairs) +
                                                " pairs; max count/bound = " + fmt(worst)};
}

Outcome horizontal_sum() {
  std::vector<std::pair<Surface, std::vector<FlatGeodesic>>> cases;
  Surface T = fixtures::torus();
  cases.push_back({T, {torus_geodesic(T, 1, 0), torus_geodesic(T, 0, 1), torus_geodesic(T, 1, 1),
                       torus_geodesic(T, 2, 3), torus_geodesic(T, 1, 3), torus_geodesic(T, 3, -2)}});
  Surface L = fixtures::l3();
  cases.push_back({L, {l3_core(L, {1, 0}), l3_core(L, {0, 1}), l3_core(L, {1, 1})}});
  std::mt19937_64 rng(404);
  for (const Surface& S : {fixtures::l3(), fixtures::octagon(), fixtures::pillow6()}) {
    std::vector<FlatGeodesic> gs;
    for (int i = 0; gs.size() < 15 && i < 200; ++i)
      if (auto g = random_geodesic(S, 4 + i % 9, rng)) gs.push_back(*g);
    cases.push_back({S, gs});
  }
  int total = 0, good = 0;
  double worst_sum = 0, worst_count = 0;
  for (const auto& [S, gs] : cases) {
    double lm = ell_min(S);
    for (const auto& g : gs) {
      auto D = build_rect_decomposition(S, g, lm);
      double err = std::abs(D.horizontal_total() - geodesic_stats(g).re);
      double ratio = double(D.segments.size()) / (16 * g.length() / lm);
      worst_sum = std::max(worst_sum, err);
      worst_count = std::max(worst_count, ratio);
      good += err <= 1e-9 && ratio <= 1;
      ++total;
    }
  }
  return {good == total, std::to_string(good) + "/" + std::to_string(total) + " geodesics; max |sum - i(a,Re q)| = " +
                             fmt(worst_sum) + ", max count/(16 l/l_min) = " + fmt(worst_count)};
}

Outcome transported_estimate() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  int triples = 0, good = 0;
  double worst = 0;
  for (const Surface& S : {fixtures::torus(), fixtures::l3(), fixtures::octagon(), fixtures::pillow6()}) {
    double lm = ell_min(S);
    int here = 0;
    for (int i = 0; here < 50 && i < 1000; ++i) {
      double t = U(rng);
      Surface St = apply_matrix(S, a_t(t));
      CurveWord wa;
      auto alpha = random_geodesic(S, 3 + i % 7, rng, &wa);
      auto beta = random_geodesic(St, 3 + (i + 2) % 7, rng);
      if (!alpha || !beta || geodesic_stats(*beta).v <= 1e-12) continue;
      auto D = build_rect_decomposition(S, *alpha, lm);
      auto est = transported_crossing_estimate(S, t, D, *beta);
      double radius = 64 * alpha->length() * beta->length() / (lm * ell_min(St));
      long I = transverse_count(St, tighten(St, wa), *beta).count;
      double dev = std::abs(double(I - est.total));
      worst = std::max(worst, dev / radius);
      good += dev <= radius;
      ++here;
    }
    triples += here;
  }
  // Closed form: (1,0) against (1,3) at r = ln 3, where the (1,3) class has holonomy (3,1).
  Surface T = fixtures::torus();
  double r = std::log(3.0);
  Surface Tr = apply_matrix(T, a_t(r));
  auto alpha = torus_geodesic(T, 1, 0);
  auto beta = tighten(Tr, closed_word(Tr, {0, a_t(r) * Vec2{0.37, 0.29}}, {3, 1}, 5));
  auto est = transported_crossing_estimate(T, r, build_rect_decomposition(T, alpha, ell_min(T)), beta);
  long I = transverse_count(Tr, tighten(Tr, curve_word(T, alpha)), beta).count;
  bool torus_exact = est.total == 3 && I == 3;
  return {good == triples && triples == 200 && torus_exact,
          std::to_string(good) + "/" + std::to_string(triples) + " triples (50 per fixture) within radius, max dev/radius = " +
              fmt(worst) + "; torus (1,0)/(1,3) r = ln 3: sum = " + std::to_string(est.total) + ", I = " +
              std::to_string(I) + ", residual " + std::to_string(std::abs(est.total - 3))};
}

Outcome bump_identities() {
  std::mt19937_64 rng(606);
  // Cylinder curves: integral equals i(beta, Im q).
  std::vector<std::pair<Surface, FlatGeodesic>> cyl;
  Surface T = fixtures::torus(), L = fixtures::l3();
  for (auto [p, q] : {std::pair{0, 1}, {1, 1}, {2, 3}, {1, -2}}) cyl.push_back({T, torus_geodesic(T, p, q)});
  cyl.push_back({L, l3_core(L, {0, 1})});
  cyl.push_back({L, l3_core(L, {1, 1})});
  for (const Surface& S : {fixtures::l3(), fixtures::octagon()}) {
    int here = 0;
    for (int i = 0; here < 5 && i < 300; ++i) {
      auto g = random_geodesic(S, 4 + i % 7, rng);
      if (g && g->kind == GeodesicKind::Cylinder && geodesic_stats(*g).v > 1e-9) cyl.push_back({S, *g}), ++here;
    }
  }
  double worst_cyl = 0;
  for (const auto& [S, g] : cyl)
    worst_cyl = std::max(worst_cyl, std::abs(integrate(bump_function(build_collar(S, g), 0, 0)) - geodesic_stats(g).im));

  // Saddle connections between simple zeros: sandwich and delta halving.
  Surface P = fixtures::pillow6();
  int sandwiches = 0, sandwich_ok = 0;
  double rmin = 1e9, rmax = 0, cfit = 0;
  std::vector<std::pair<FlatGeodesic, Collar>> saddle_collars;
  for (const auto& c : enumerate_saddle_connections(P, 2.3)) {
    if (std::abs(c.holonomy.y) <= 1e-9) continue;
    auto g = as_geodesic(c);
    Collar C = build_collar(P, g);
    double im = C.im(), diff[2];
    bool ok = true;
    for (int k = 0; k < 2; ++k) {
      double d = k == 0 ? 0.01 : 0.005;
      double i0 = integrate(bump_function(C, d, 0)), i1 = integrate(bump_function(C, d, 1));
      ok = ok && i0 <= im && im <= i1;
      diff[k] = i1 - i0;
      cfit = std::max(cfit, diff[k] / (d * c.length));
    }
    double ratio = diff[0] / diff[1];
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
    sandwich_ok += ok && ratio >= 1.5 && ratio <= 2.5;
    ++sandwiches;
    saddle_collars.push_back({g, C});
  }

  // Horizontal test segments: crossings against segment integrals.
  std::uniform_real_distribution<double> len(0.5, 12);
  int segments = 0, seg_ok = 0;
  double worst_dev = 0;
  auto check_segments = [&](const Surface& S, const FlatGeodesic& beta, const BumpFunction& B) {
    double bound = 32 * beta.length() / ell_min(S);
    for (int i = 0; i < 12; ++i) {
      auto gamma = trace_ray(S, random_point(S, rng), {i % 2 ? 1.0 : -1.0, 0}, len(rng));
      if (gamma.hit) continue;
      double dev = std::abs(double(crossings_with_segment(S, beta, gamma)) - integrate(S, B, gamma));
      worst_dev = std::max(worst_dev, dev / bound);
      seg_ok += dev <= bound;
      ++segments;
    }
  };
  for (const auto& [S, g] : cyl) check_segments(S, g, bump_function(build_collar(S, g), 0, 0));
  for (std::size_t k = 0; k < saddle_collars.size(); k += 3)
    for (int side : {0, 1}) check_segments(P, saddle_collars[k].first, bump_function(saddle_collars[k].second, 0.05, side));

  bool pass = worst_cyl <= 1e-6 && sandwich_ok == sandwiches && sandwiches > 0 && seg_ok == segments;
  return {pass, "cylinder max |int - im| = " + fmt(worst_cyl) + " over " + std::to_string(cyl.size()) + "; sandwich " +
                    std::to_string(sandwich_ok) + "/" + std::to_string(sandwiches) + ", halving ratio in [" + fmt(rmin) +
                    ", " + fmt(rmax) + "], fitted C = " + fmt(cfit) + "; segments " + std::to_string(seg_ok) + "/" +
                    std::to_string(segments) + ", max dev/bound = " + fmt(worst_dev)};
}

Outcome sobolev_scaling() {
  Surface L = fixtures::l3();
  std::vector<double> deltas = {0.02, 0.01, 0.005};
  auto spread = [&](const Collar& C, int side, std::string& text) {
    std::vector<double> prod;
    for (double d : deltas) {
      double n = sobolev_norm(L, bump_function(C, d, side));
      prod.push_back(n * d);
      text += (text.empty() ? "" : ", ") + fmt(n);
    }
    return *std::max_element(prod.begin(), prod.end()) / *std::min_element(prod.begin(), prod.end()) - 1;
  };
  std::string core_norms;
  double core = spread(build_collar(L, l3_core(L, {0, 1})), 0, core_norms);
  // Diagnostic only: the vertical unit saddle connection bounding that cylinder (no side panels at a 6pi zero).
  std::string conn_norms;
  double conn = 0;
  for (const auto& c : enumerate_saddle_connections(L, 1.1))
    if (std::abs(c.holonomy.x) < 1e-12) {
      conn = spread(build_collar(L, as_geodesic(c)), 0, conn_norms);
      break;
    }
  return {core <= 0.25, "L3 vertical core: norms " + core_norms + " at delta 0.02, 0.01, 0.005, spread of norm*delta = " +
                            fmt(100 * core, 3) + "% (limit 25%); vertical unit connection side 0: norms " + conn_norms +
                            ", spread " + fmt(100 * conn, 3) + "%"};
}

Outcome greedy_partition_check() {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<long long> num(1, 400), den(1, 12), levels(1, 6);
  int good = 0, n = 10000;
  for (int i = 0; i < n; ++i) {
    Q ell(num(rng) * 5, den(rng));
    std::vector<Q> T;
    Q t(0);
    for (long long k = levels(rng); k > 0; --k) {
      t += Q(num(rng), den(rng));
      T.push_back(t);
    }
    good += partition_conditions_hold(greedy_partition(ell, T), ell);
  }
  auto P = greedy_partition<Q>(Q(10), {Q(2), Q(3)});
  bool example = P.leftover == Q(1) && P.multiplicity == std::vector<long>{0, 3};
  return {good == n && example, std::to_string(good) + "/" + std::to_string(n) +
                                    " rational inputs satisfy all three conditions; (10, [2,3]) -> leftover " +
                                    std::to_string(P.leftover.numerator()) + ", m = (" +
                                    std::to_string(P.multiplicity[0]) + "," + std::to_string(P.multiplicity[1]) + ")"};
}

Outcome sampler_contrapositive() {
  double T = 100, rho = 0.1, eps = 0.5, s = 1, dt = 0.01, budget = rho * eps * T - 2 * dt;
  std::mt19937_64 rng(909);
  std::vector<MembershipTrace> traces;
  int within = 0;
  for (int i = 0; i < 1000; ++i) {
    traces.push_back(random_trace(T, dt, s, budget, rng));
    within += excursion_measure(traces.back()) <= budget + 1e-9;
  }
  auto r = falsify_sampler_failure(traces, T, rho, eps, s);
  return {within == 1000 && r.traces == 1000 && r.valid == 1000 && r.consistent(),
          std::to_string(r.valid) + "/" + std::to_string(r.traces) + " itineraries valid (" + std::to_string(within) +
              " traces with excursion <= rho eps T - 2dt); failures with large excursion " +
              std::to_string(r.failures_with_large_excursion) + "/" + std::to_string(r.failures)};
}

Outcome equidistribution_decay() {
  auto start = Clock::now();
  double theta = std::atan((1 + std::sqrt(5.0)) / 2), T = 4;
  auto torus = equidistribution_series(fixtures::torus(), theta, {T, T + 2}, 10, 1010);
  auto l3 = equidistribution_series(fixtures::l3(), theta, {T, T + 2}, 10, 1010);
  double rt = torus.mean[1] / torus.mean[0], rl = l3.mean[1] / l3.mean[0];
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {rt < 0.9 && rl < 0.9 && secs < 600, "ratio T = 6 vs 4 over 10 bumps: torus " + fmt(rt) + ", L3 " + fmt(rl) +
                                                  " (limit 0.9); " + fmt(secs, 3) + " s (limit 600 s)"};
}

Outcome estimate_convergence() {
  Surface L = fixtures::l3();
  Surface S = normalize_area(L);
  auto h = curve_word(L, l3_core(L, {1, 0})), v = curve_word(L, l3_core(L, {0, 1}));
  std::vector<double> norms;
  bool monotone = true;
  for (double r : {1.0, 2.0, 3.0}) {
    norms.push_back(main_estimate(S, r, h, v).normalized);
    if (norms.size() > 1) monotone = monotone && norms.back() <= norms[norms.size() - 2];
  }
  Surface T = fixtures::torus();
  auto e = main_estimate(T, std::log(3.0), curve_word(T, torus_geodesic(T, 1, 0)), curve_word(T, torus_geodesic(T, 1, 3)));
  return {monotone && e.residual == 0, "L3 cores normalized residual " + fmt(norms[0]) + ", " + fmt(norms[1]) + ", " +
                                           fmt(norms[2]) + " at r = 1, 2, 3; torus residual " + fmt(e.residual)};
}

bool delaunay_contains_short_connections(const Surface& S, bool strict) {
  Surface D = delaunay_triangulation(S).surface;
  double L = std::sqrt(2.0) * ell_min(S);
  for (const auto& c : enumerate_saddle_connections(D, L)) {
    bool shorter = strict ? c.length < L - eps_geom : c.length <= L + eps_geom;
    if (shorter && !c.crossings.empty()) return false;
  }
  return true;
}

Outcome track_delaunay_lipschitz() {
  std::string text;
  bool ok = true;
  const char* names[] = {"torus", "L3", "octagon", "pillow6"};
  int i = 0;
  for (const Surface& S : {fixtures::torus(), fixtures::l3(), fixtures::octagon(), fixtures::pillow6()}) {
    auto tt = dual_train_track(S);
    double d = switch_defect(tt, vertical_counting_measure(S, tt));
    // Square-tiled fixtures balance exactly; the octagon's coordinates are rounded, so its
    // triangles close only to the rounding of their edge vectors.
    ok = ok && (i == 2 ? d <= 4 * std::numeric_limits<double>::epsilon() * S.max_edge_length() : d == 0);
    text += std::string(i ? ", " : "") + names[i] + " " + fmt(d);
    ++i;
  }
  bool del = delaunay_contains_short_connections(fixtures::torus(), true) &&
             delaunay_contains_short_connections(fixtures::l3(), true) &&
             delaunay_contains_short_connections(fixtures::octagon(), true) &&
             delaunay_contains_short_connections(fixtures::pillow6(), true) &&
             delaunay_contains_short_connections(apply_matrix(fixtures::l3(), a_t(0.05)), false);
  Surface L = fixtures::l3();
  double base = ell_min(L);
  auto fitted = [&](double h) {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
      worst = std::max(worst, std::abs(ell_min(perturb_periods(L, h, seed)) - base) / h);
    return worst;
  };
  double c4 = fitted(1e-4), c5 = fitted(1e-5), rel = std::abs(c4 - c5) / c4;
  return {ok && del && c4 > 0 && rel <= 0.25, "switch defects " + text + "; Delaunay inclusion " +
                                                  (del ? "holds" : "fails") + "; l_min Lipschitz C = " + fmt(c4) +
                                                  " (1e-4), " + fmt(c5) + " (1e-5), ratio spread " +
                                                  fmt(100 * rel, 3) + "%"};
}

Outcome convexity_probes() {
  int probes = 0, violations = 0, undecided = 0;
  std::mt19937_64 rng(1313);
  struct Case {
    Surface S;
    int probes;
  };
  for (auto& [S, want] : std::vector<Case>{{fixtures::l3(), 40}, {fixtures::octagon(), 30}, {fixtures::pillow6(), 30}}) {
    auto tt = dual_train_track(S);
    std::vector<IntegerMeasure> ws;
    for (int i = 0; i < 200000 && int(ws.size()) < 2 * want; ++i) {
      auto w = random_integer_measure(tt, 3, rng);
      if (w && std::any_of(w->begin(), w->end(), [](long x) { return x > 0; })) ws.push_back(*w);
    }
    int here = 0;
    for (int i = 0; here < want && i < 400; ++i) {
      auto alpha = random_geodesic(S, 4 + i % 6, rng);
      if (!alpha || int(ws.size()) < 2) continue;
      auto p = convexity_lipschitz_probe(S, tt, *alpha, ws[(2 * here) % ws.size()], ws[(2 * here + 1) % ws.size()]);
      violations += p.conclusive_violation;
      undecided += !p.conclusive_violation && !p.conclusive_equality;
      ++here;
    }
    probes += here;
  }
  Surface T = fixtures::torus();
  auto tt = dual_train_track(T);
  int equal = 0, linear = 0;
  for (int i = 0; i < 20; ++i) {
    auto v = random_integer_measure(tt, 5, rng), w = random_integer_measure(tt, 5, rng);
    if (!v || !w) continue;
    auto p = convexity_lipschitz_probe(T, tt, torus_geodesic(T, 1 + i % 3, 1 - i % 2), *v, *w);
    bool exact = p.sum.lo == p.sum.hi && p.doubled_v.lo == p.doubled_v.hi && p.doubled_w.lo == p.doubled_w.hi;
    equal += p.conclusive_equality && exact && 2 * p.sum.lo == p.doubled_v.lo + p.doubled_w.lo;
    ++linear;
  }
  return {probes == 100 && violations == 0 && linear > 0 && equal == linear,
          std::to_string(violations) + " conclusive violations over " + std::to_string(probes) + " probes (" +
              std::to_string(undecided) + " inconclusive); torus equality with width 0 in " + std::to_string(equal) + "/" +
              std::to_string(linear)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"torus exactness", torus_exactness},
      {"sandwich consistency under the flow", sandwich_consistency},
      {"crossing bound for short transversals", crossing_bound},
      {"rectangular decomposition horizontal sum", horizontal_sum},
      {"transported crossing estimate", transported_estimate},
      {"bump function identities", bump_identities},
      {"Sobolev norm scaling", sobolev_scaling},
      {"greedy partition", greedy_partition_check},
      {"sampler contrapositive", sampler_contrapositive},
      {"equidistribution decay", equidistribution_decay},
      {"estimate convergence", estimate_convergence},
      {"dual track, Delaunay inclusion, l_min Lipschitz", track_delaunay_lipschitz},
      {"convexity probes", convexity_probes},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = int(i) + 1;
    Outcome o;
    auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    bool known = known_failures.count(id) > 0;
    std::printf("%s %2d %s: %s [%.2f s]%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs, !o.pass && known ? " (known failure)" : o.pass && known ? " (listed as known failure)" : "");
    std::fflush(stdout);
    unexpected += !o.pass && !known;
  }
  return unexpected == 0 ? 0 : 1;
}
