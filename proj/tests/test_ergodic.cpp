#include <gtest/gtest.h>

#include <boost/rational.hpp>
#include <cmath>
#include <random>

#include "curves.hpp"
#include "fixtures.hpp"
#include "hts/ergodic.hpp"

using namespace hts;
using namespace curves;
using Q = boost::rational<long long>;

namespace {

MembershipTrace constant_trace(bool inside, double T, double dt, double s) {
  return trace_from_K(std::vector<char>(trace_cells(dt, T, s), inside), dt, T, s);
}

// K and K' given directly as interval lists, cells covering [-s, T + s).
MembershipTrace manual_trace(double T, double dt, double s, std::pair<double, double> K_out,
                             std::pair<double, double> Kp_out) {
  MembershipTrace tr;
  tr.dt = dt;
  tr.t0 = -s;
  tr.T = T;
  long n = trace_cells(dt, T, s);
  tr.K.assign(n, 1);
  tr.Kp.assign(n, 1);
  for (long k = 0; k < n; ++k) {
    double t = tr.cell_start(k) + dt / 2;
    if (t > K_out.first && t < K_out.second) tr.K[k] = 0;
    if (t > Kp_out.first && t < Kp_out.second) tr.Kp[k] = 0;
  }
  return tr;
}

std::vector<double> expected_times(std::initializer_list<double> xs) { return xs; }

void expect_times(const Itinerary& it, const std::vector<double>& want) {
  ASSERT_EQ(it.times.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(it.times[i], want[i], 1e-9) << i;
}

}  // namespace

TEST(GreedyPartition, Examples) {
  auto P = greedy_partition<Q>(Q(10), {Q(2), Q(3)});
  EXPECT_EQ(P.leftover, Q(1));
  EXPECT_EQ(P.multiplicity, (std::vector<long>{0, 3}));
  EXPECT_TRUE(partition_conditions_hold(P, Q(10)));

  auto P2 = greedy_partition<Q>(Q(3, 2), {Q(2)});
  EXPECT_EQ(P2.leftover, Q(3, 2));
  EXPECT_EQ(P2.multiplicity, (std::vector<long>{0}));

  auto P3 = greedy_partition<Q>(Q(6), {Q(2)});
  EXPECT_EQ(P3.leftover, Q(0));
  EXPECT_EQ(P3.multiplicity, (std::vector<long>{3}));

  auto D = greedy_partition(10.0, {2.0, 3.0});
  EXPECT_EQ(D.leftover, 1.0);
  EXPECT_EQ(D.multiplicity[1], 3);
}

TEST(GreedyPartition, RejectsBadThresholds) {
  EXPECT_THROW(greedy_partition<Q>(Q(5), {}), BadThresholds);
  EXPECT_THROW(greedy_partition<Q>(Q(5), {Q(3), Q(2)}), BadThresholds);
  EXPECT_THROW(greedy_partition<Q>(Q(5), {Q(2), Q(2)}), BadThresholds);
  EXPECT_THROW(greedy_partition<Q>(Q(5), {Q(0), Q(2)}), BadThresholds);
  EXPECT_THROW(greedy_partition<Q>(Q(0), {Q(1)}), BadThresholds);
}

TEST(GreedyPartition, RandomRationalInputs) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long long> num(1, 400), den(1, 12), levels(1, 6);
  for (int i = 0; i < 10000; ++i) {
    Q ell(num(rng) * 5, den(rng));
    std::vector<Q> T;
    Q t(0);
    for (long long k = levels(rng); k > 0; --k) {
      t += Q(num(rng), den(rng));
      T.push_back(t);
    }
    auto P = greedy_partition(ell, T);
    ASSERT_TRUE(partition_conditions_hold(P, ell)) << i;
  }
}

TEST(Recurrence, FractionOfSimpleTraces) {
  EXPECT_EQ(recurrence_fraction(constant_trace(true, 10, 0.01, 1)), 0);
  EXPECT_NEAR(recurrence_fraction(constant_trace(false, 10, 0.01, 1)), 1, 1e-12);
  double T = 8, dt = 0.01;
  auto tr = manual_trace(T, dt, 1, {0.25 * T, 0.5 * T}, {0.25 * T, 0.5 * T});
  EXPECT_NEAR(recurrence_fraction(tr), 0.25, dt / T);
}

TEST(Recurrence, L3OrbitMatchesShortestVerticalConnection) {
  // l_min(a_t L3) = e^{-|t|}: the unit vertical connections shrink forward, the horizontal ones backward.
  Surface S = fixtures::l3();
  double delta = 0.1, T = 5, dt = 0.01, s = 1;
  auto tr = orbit_trace(S, delta, T, dt, s);
  double exact = (T - std::log(1 / delta)) / T;
  EXPECT_NEAR(recurrence_fraction(tr), exact, dt / T);
  // The enlargement extends K by s on both sides.
  EXPECT_TRUE(tr.in_Kp(std::log(1 / delta) + s - 2 * dt));
  EXPECT_FALSE(tr.in_Kp(std::log(1 / delta) + s + 2 * dt));
  auto again = orbit_trace(S, delta, T, dt, s);
  EXPECT_EQ(again.K, tr.K);
  EXPECT_EQ(recurrence_fraction(again), recurrence_fraction(tr));
}

TEST(Itinerary, SamplerExamples) {
  double T = 10, rho = 0.1, s = 1, dt = 0.01;
  auto always = constant_trace(true, T, dt, s);
  auto it = sample_itinerary(always, T, rho, s);
  expect_times(it, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  EXPECT_TRUE(validate_itinerary(it, always, T, rho, 1, s).valid());
  auto strict = validate_itinerary(it, always, T, rho, 0.5, s);
  ASSERT_EQ(strict.violations.size(), 1u);
  EXPECT_EQ(strict.violations[0].condition, 6);
  EXPECT_EQ(strict.violations[0].n, 0);

  // Out of K' just after 2 until 6, back in K at 6.
  auto jump = manual_trace(T, dt, s, {2 + dt, 6}, {2 + dt, 6});
  expect_times(sample_itinerary(jump, T, rho, s), {1, 2, 6, 7, 8, 9, 10});

  auto empty = constant_trace(false, T, dt, s);
  auto none = sample_itinerary(empty, T, rho, s);
  expect_times(none, {1, 10});
  EXPECT_TRUE(validate_itinerary(none, empty, T, rho, 1, s).violates(0));
}

TEST(Itinerary, EachConditionIsReportedSeparately) {
  double T = 10, rho = 0.1, s = 1;
  auto always = constant_trace(true, T, 0.01, s);
  Itinerary shifted{{1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 10}};
  auto c = validate_itinerary(shifted, always, T, rho, 1, s);
  ASSERT_EQ(c.violations.size(), 1u);
  EXPECT_EQ(c.violations[0].condition, 2);

  EXPECT_TRUE(validate_itinerary(Itinerary{{1, 2, 10, 10}}, always, T, rho, 10, s).violates(3));
  EXPECT_TRUE(validate_itinerary(Itinerary{{1, 2, 9}}, always, T, rho, 10, s).violates(4));
  EXPECT_TRUE(validate_itinerary(Itinerary{{1, 2, 2.5, 10}}, always, T, rho, 10, s).violates(5));
  auto gap = manual_trace(T, 0.01, s, {4, 5}, {4, 5});
  EXPECT_TRUE(validate_itinerary(Itinerary{{1, 2, 4.5, 6, 10}}, gap, T, rho, 10, s).violates(1));
}

TEST(Itinerary, SamplerOutputSatisfiesStructuralConditions) {
  // Only N = 0 or condition (6) can fail.
  std::mt19937_64 rng(9);
  double T = 100, rho = 0.1, s = 1, dt = 0.01;
  for (int i = 0; i < 300; ++i) {
    auto tr = random_trace(T, dt, s, 40, rng);
    auto it = sample_itinerary(tr, T, rho, s);
    auto c = validate_itinerary(it, tr, T, rho, 0.5, s);
    for (auto v : c.violations) EXPECT_TRUE(v.condition == 0 || v.condition == 6) << v.condition;
  }
}

TEST(Itinerary, ContrapositiveOnRandomTraces) {
  std::mt19937_64 rng(4);
  double T = 100, rho = 0.1, eps = 0.5, s = 1, dt = 0.01;
  std::vector<MembershipTrace> small;
  for (int i = 0; i < 1000; ++i) small.push_back(random_trace(T, dt, s, rho * eps * T - 2 * dt, rng));
  auto r = falsify_sampler_failure(small, T, rho, eps, s);
  EXPECT_EQ(r.traces, 1000);
  EXPECT_EQ(r.valid, 1000);

  // Large budgets produce failures, every one of them with a large excursion.
  std::vector<MembershipTrace> large;
  for (int i = 0; i < 500; ++i) large.push_back(random_trace(T, dt, s, 40, rng));
  auto r2 = falsify_sampler_failure(large, T, rho, eps, s);
  EXPECT_GT(r2.failures, 0);
  EXPECT_TRUE(r2.consistent());

  auto all_in = constant_trace(true, T, dt, s);
  EXPECT_TRUE(validate_itinerary(sample_itinerary(all_in, T, rho, s), all_in, T, rho, eps, s).valid());

  // One excursion of measure 2 rho eps T right after a sampled time breaks condition (6).
  std::vector<char> K(trace_cells(dt, T, s), 1);
  for (long k = 0; k < long(K.size()); ++k) {
    double t = -s + (k + 0.5) * dt;
    if (t > 12 && t < 12 + 2 * rho * eps * T) K[k] = 0;
  }
  auto adv = trace_from_K(K, dt, T, s);
  auto it = sample_itinerary(adv, T, rho, s);
  auto c = validate_itinerary(it, adv, T, rho, eps, s);
  EXPECT_TRUE(c.violates(6));
  EXPECT_GT(excursion_measure(adv), rho * eps * T);
  SamplerReport one;
  record_sample(one, adv, T, rho, eps, s);
  EXPECT_EQ(one.failures, 1);
  EXPECT_TRUE(one.consistent());
  EXPECT_THROW(record_sample(one, adv, T, 0.9, 0.5, s), PreconditionViolation);
}

TEST(Itinerary, SummabilityBound) {
  std::mt19937_64 rng(13);
  for (double s : {0.5, 1.0, 2.0})
    for (int i = 0; i < 100; ++i) {
      auto tr = random_trace(100, 0.01, s, 30, rng);
      auto it = sample_itinerary(tr, 100, 0.1, s);
      for (double lambda : {0.5, 1.0, 2.0}) EXPECT_LT(summability_ratio(it, lambda), summability_constant(s, lambda));
    }
}

TEST(Equidistribution, GoldenTorusDecays) {
  double theta = std::atan((1 + std::sqrt(5.0)) / 2);
  auto run = equidistribution_series(fixtures::torus(), theta, {2, 4, 6}, 10, 21);
  EXPECT_GT(run.mean[0], run.mean[1]);
  EXPECT_GT(run.mean[1], run.mean[2]);
}

TEST(Equidistribution, RotatedL3VerticalCore) {
  Surface L = fixtures::l3();
  double theta = std::atan((1 + std::sqrt(5.0)) / 2);
  Surface S = normalize_area(apply_matrix(L, r_theta(theta)));
  auto B = bump_function(build_collar(S, tighten(S, curve_word(L, l3_core(L, {0, 1})))), 0, 0);
  double mass = integrate(B);
  auto start = centroid(S, 0);
  double e3 = equidistribution_error(S, trace_ray(S, start, {1, 0}, std::exp(3.0)), B, mass).normalized;
  double e5 = equidistribution_error(S, trace_ray(S, start, {1, 0}, std::exp(5.0)), B, mass).normalized;
  EXPECT_LT(e5 / e3, 0.9);
}

TEST(Equidistribution, Preconditions) {
  Surface T = fixtures::torus();
  auto B = bump_function(build_collar(T, torus_curve(T, 0, 1)), 0, 0);
  TracedSegment empty;
  empty.start = {0, {0.3, 0.3}};
  empty.start_dir = {1, 0};
  EXPECT_EQ(equidistribution_error(T, empty, B).error, 0);
  EXPECT_THROW(equidistribution_error(T, trace_ray(T, {0, {0.3, 0.2}}, normalized(Vec2{1, 1}), 1), B),
               PreconditionViolation);
  Surface L = fixtures::l3();
  auto BL = bump_function(build_collar(L, l3_core(L, {0, 1})), 0, 0);
  EXPECT_THROW(equidistribution_error(L, trace_ray(L, {0, {0.1, 0.3}}, {1, 0}, 1), BL), PreconditionViolation);
}

TEST(MainEstimate, TorusDeterminantCase) {
  Surface T = fixtures::torus();
  auto alpha = curve_word(T, torus_curve(T, 1, 0)), beta = curve_word(T, torus_curve(T, 1, 3));
  auto r = main_estimate(T, std::log(3.0), alpha, beta);
  EXPECT_NEAR(r.predicted, 3, 1e-9);
  EXPECT_EQ(r.lo, 3);
  EXPECT_EQ(r.hi, 3);
  EXPECT_NEAR(r.residual, 0, 1e-9);
}

TEST(MainEstimate, SmallTimeIsNotPointwise) {
  Surface T = fixtures::torus();
  auto a = torus_curve(T, 1, 1);
  auto w = curve_word(T, a);
  auto r = main_estimate(T, 1e-6, w, w);
  EXPECT_EQ(r.hi, 0);
  auto st = geodesic_stats(a);
  EXPECT_NEAR(r.residual, st.re * st.im, 1e-5);
  EXPECT_THROW(main_estimate(T, 0, w, w), PreconditionViolation);
  EXPECT_THROW(main_estimate(fixtures::l3(), 1, w, w), PreconditionViolation);
}

TEST(MainEstimate, L3CoresResidualShrinks) {
  Surface L = fixtures::l3();
  Surface S = normalize_area(L);
  auto h = curve_word(L, l3_core(L, {1, 0})), v = curve_word(L, l3_core(L, {0, 1}));
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 2.0, 3.0}) {
    auto rep = main_estimate(S, r, h, v);
    // predicted = (2/sqrt3) * (2/sqrt3) e^{-r} * e^r = 4/3 against i = 1.
    EXPECT_NEAR(rep.predicted, 4.0 / 3, 1e-9);
    EXPECT_EQ(rep.lo, 1);
    EXPECT_EQ(rep.hi, 1);
    EXPECT_LE(rep.normalized, prev);
    prev = rep.normalized;
  }
  EXPECT_THROW(main_estimate(S, 1, v, h), HorizontalGeodesic);
}

TEST(Equidistribution, InvariantUnderRelabeling) {
  // Permute triangles and rotate each triangle's edge labels; charts move with the new first vertex.
  Surface L = fixtures::l3();
  double theta = std::atan((1 + std::sqrt(5.0)) / 2);
  Surface S = normalize_area(apply_matrix(L, r_theta(theta)));
  auto relabel = shuffled_labels(S.num_triangles());
  Surface R = relabel.apply(S);

  auto w = curve_word(L, l3_core(L, {1, 1}));
  CurveWord wr = relabel(w);
  auto B = bump_function(build_collar(S, tighten(S, w)), 0, 0);
  auto BR = bump_function(build_collar(R, tighten(R, wr)), 0, 0);

  SurfacePoint x = centroid(S, 2);
  SurfacePoint xr = relabel(S, x);
  auto e = equidistribution_error(S, trace_ray(S, x, {1, 0}, std::exp(4.0)), B);
  auto er = equidistribution_error(R, trace_ray(R, xr, {1, 0}, std::exp(4.0)), BR);
  EXPECT_NEAR(e.segment_integral, er.segment_integral, 1e-9);
  EXPECT_NEAR(e.expected, er.expected, 1e-6);
  EXPECT_NEAR(e.error, er.error, 1e-6);
}
