#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "hts/flow.hpp"

using namespace hts;

TEST(Surface, TorusHasOneMarkedPoint) {
  Surface S = fixtures::torus();
  EXPECT_EQ(S.genus(), 1);
  ASSERT_EQ(S.num_vertices(), 1);
  EXPECT_NEAR(S.cone_angle(0), 2 * pi, 1e-12);
  EXPECT_TRUE(S.singularities()[0].marked());
  EXPECT_TRUE(stratum_signature(S).empty());
  EXPECT_DOUBLE_EQ(S.area(), 1.0);
}

TEST(Surface, L3IsGenusTwoWithOneZero) {
  Surface S = fixtures::l3();
  EXPECT_EQ(S.genus(), 2);
  ASSERT_EQ(S.num_vertices(), 1);
  EXPECT_NEAR(S.cone_angle(0), 6 * pi, 1e-12);
  EXPECT_EQ(stratum_signature(S), std::vector<int>{4});
  EXPECT_DOUBLE_EQ(S.area(), 3.0);
}

TEST(Surface, OctagonIsGenusTwoWithOneZero) {
  Surface S = fixtures::octagon();
  EXPECT_EQ(S.genus(), 2);
  EXPECT_EQ(stratum_signature(S), std::vector<int>{4});
}

TEST(Surface, PillowHasFourSimpleZeroes) {
  Surface S = fixtures::pillow6();
  EXPECT_EQ(S.genus(), 2);
  EXPECT_TRUE(S.has_flips());
  EXPECT_EQ(stratum_signature(S), (std::vector<int>{1, 1, 1, 1}));
}

TEST(Surface, GaussBonnetOnEveryFixture) {
  for (const Surface& S : {fixtures::torus(), fixtures::l3(), fixtures::octagon(), fixtures::pillow6()}) {
    int total = 0;
    for (const auto& s : S.singularities()) total += s.order;
    EXPECT_EQ(total, 4 * S.genus() - 4);
  }
}

TEST(Surface, RejectsMismatchedEdgeLengths) {
  const char* text = R"(triangles: [[[1,0],[0,1],[-1,-1]], [[2,2],[-2,0],[0,-2]]]
gluings: [[[0,0],[1,1],false],[[0,1],[1,2],false],[[0,2],[1,0],false]])";
  EXPECT_THROW(parse_surface(text), UnglueableEdge);
}

TEST(Surface, RejectsDegenerateAndUnparsable) {
  EXPECT_THROW(parse_surface("triangles: [[[1,0],[-1,0],[0,0]]]\ngluings: []"), DegenerateTriangle);
  EXPECT_THROW(parse_surface("triangles: [[[NaN,0],[0,1],[-1,-1]]]\ngluings: []"), ParseError);
  EXPECT_THROW(parse_surface("triangles: [[[1e999,0],[0,1],[-1,-1]]]\ngluings: []"), ParseError);
  EXPECT_THROW(parse_surface("gluings: []"), ParseError);
}

TEST(Surface, RejectsBadConeAngle) {
  // A single right-angled corner glued to itself cannot close up to a multiple of pi.
  const char* text = R"(triangles: [[[1,0],[0,1],[-1,-1]], [[1,1],[-1,0],[0,-1]]]
gluings: [[[0,0],[1,1],false],[[0,1],[0,2],false],[[1,0],[1,2],false]])";
  EXPECT_ANY_THROW(parse_surface(text));
}

TEST(Surface, RoundTripsThroughText) {
  Surface S = fixtures::pillow6();
  Surface T = parse_surface(format_surface(S));
  EXPECT_TRUE(same_canonical_form(S, T, 1e-12));
}

TEST(Surface, NormalizeArea) {
  Surface S = normalize_area(fixtures::l3());
  EXPECT_NEAR(S.area(), 1.0, eps_geom);
  EXPECT_NEAR(S.triangle(0)[0].x, 1 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(normalize_area(S).area(), 1.0, eps_geom);
  EXPECT_NEAR(scaled(S, 2.5).area(), 6.25, 1e-12);
}

TEST(DoubleCover, SquareDifferentialGivesTrivialCover) {
  Surface S = fixtures::l3();
  auto dc = orientation_double_cover(S);
  EXPECT_TRUE(dc.trivial);
  EXPECT_EQ(dc.cover.num_components(), 2);
  EXPECT_FALSE(dc.cover.has_flips());
  EXPECT_NEAR(dc.cover.area(), 2 * S.area(), 1e-12);
}

TEST(DoubleCover, RiemannHurwitzOnPillow) {
  Surface S = fixtures::pillow6();
  auto dc = orientation_double_cover(S);
  EXPECT_FALSE(dc.trivial);
  EXPECT_FALSE(dc.cover.has_flips());
  // 2g - 1 + (#odd zeroes)/2 with g = 2 and four simple zeroes.
  EXPECT_EQ(dc.cover.genus(), 5);
  EXPECT_NEAR(dc.cover.area(), 2 * S.area(), 1e-12);
  for (int t = 0; t < dc.cover.num_triangles(); ++t) EXPECT_EQ(dc.deck[dc.deck[t]], t);
}

TEST(LinearAction, DiagonalFlowOnVectors) {
  Vec2 v = a_t(std::log(2.0)) * Vec2{1, 1};
  EXPECT_NEAR(v.x, 2.0, 1e-15);
  EXPECT_NEAR(v.y, 0.5, 1e-15);
  Surface S = fixtures::l3();
  EXPECT_TRUE(same_canonical_form(apply_matrix(S, a_t(0)), S, 0));
  EXPECT_THROW(apply_matrix(S, Mat2{1, 2, 2, 4}), SingularMatrix);
  EXPECT_THROW(apply_matrix(S, Mat2{0, 1, 1, 0}), SingularMatrix);
}

TEST(LinearAction, QuarterTurnTwiceIsMinusIdentity) {
  Vec2 v = r_theta(pi / 2) * Vec2{1, 0};
  EXPECT_NEAR(v.x, 0, 1e-15);
  EXPECT_NEAR(v.y, 1, 1e-15);
  for (const Surface& S : {fixtures::l3(), fixtures::pillow6(), fixtures::octagon()}) {
    Surface R = apply_matrix(apply_matrix(S, r_theta(pi / 2)), r_theta(pi / 2));
    EXPECT_TRUE(same_canonical_form(R, S, 1e-12));
  }
}

TEST(LinearAction, CompositionMatchesProduct) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  Surface S = fixtures::pillow6();
  for (int i = 0; i < 100; ++i) {
    auto random_sl2 = [&] {
      while (true) {
        Mat2 M{U(rng), U(rng), U(rng), U(rng)};
        double d = M.det();
        if (d < 0.2) continue;
        double s = 1 / std::sqrt(d);
        return Mat2{M.a * s, M.b * s, M.c * s, M.d * s};
      }
    };
    Mat2 A = random_sl2(), B = random_sl2();
    EXPECT_TRUE(same_canonical_form(apply_matrix(apply_matrix(S, A), B), apply_matrix(S, B * A), 1e-9));
  }
}

TEST(LinearAction, FlowScalesHolonomyComponents) {
  Surface S = fixtures::octagon();
  Surface F = apply_matrix(S, a_t(0.7));
  for (int t = 0; t < S.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(F.triangle(t)[i].x, std::exp(0.7) * S.triangle(t)[i].x, 1e-14);
      EXPECT_NEAR(F.triangle(t)[i].y, std::exp(-0.7) * S.triangle(t)[i].y, 1e-14);
    }
}

TEST(TraceRay, TorusHorizontalWrapsTwice) {
  Surface S = fixtures::torus();
  // (0.5, 0.5) lies on the diagonal shared by both triangles; use the lower-right one.
  auto seg = trace_ray(S, {0, {0.5, 0.5}}, {1, 0}, 2.0);
  EXPECT_FALSE(seg.hit);
  EXPECT_NEAR(seg.length, 2.0, 1e-12);
  Vec2 end = seg.end.p;
  if (seg.end.tri == 1) end = S.gluing_map({1, 0}).apply(end);
  EXPECT_NEAR(end.x, 0.5, 1e-12);
  EXPECT_NEAR(end.y, 0.5, 1e-12);
}

TEST(TraceRay, TorusDiagonalHitsTheMarkedPoint) {
  Surface S = fixtures::torus();
  auto seg = trace_ray(S, {0, {0.5, 0.5}}, {1, 1}, std::sqrt(2.0) / 2);
  ASSERT_TRUE(seg.hit);
  EXPECT_EQ(seg.hit->vertex, 0);
  EXPECT_NEAR(seg.hit->s, std::sqrt(2.0) / 2, 1e-12);
}

// Independent model of the bottom row of L3: squares 0 and 1 alternate; inside a square a
// height-1/2 rightward ray leaves the upper-left triangle through the diagonal at x = 1/2 and the
// lower-right triangle through the right side at x = 1.
TEST(TraceRay, L3HorizontalMatchesGridModel) {
  Surface S = fixtures::l3();
  auto seg = trace_ray(S, {0, {0.5, 0.5}}, {1, 0}, 7.0);
  std::vector<HalfEdge> expect;
  std::vector<double> at;
  int square = 0;
  for (int half = 1; half <= 14; ++half) {
    if (half % 2 == 1) {
      expect.push_back({2 * square, 1});
      square = 1 - square;
    } else {
      expect.push_back({2 * square + 1, 0});
    }
    at.push_back(half * 0.5);
  }
  ASSERT_FALSE(seg.hit);
  ASSERT_EQ(seg.crossings.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(seg.crossings[i].exit, expect[i]) << i;
    EXPECT_NEAR(seg.crossings[i].s, at[i], 1e-12);
  }
}

TEST(TraceRay, LengthAdditivity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  Surface S = fixtures::pillow6();
  for (int trial = 0; trial < 50; ++trial) {
    double th = 2 * pi * U(rng);
    Vec2 d{std::cos(th), std::sin(th)};
    SurfacePoint p = centroid(S, int(U(rng) * S.num_triangles()));
    double a = 3 * U(rng), b = 3 * U(rng);
    auto whole = trace_ray(S, p, d, a + b);
    auto first = trace_ray(S, p, d, a);
    if (whole.hit || first.hit) continue;
    auto second = trace_ray(S, first.end, first.end_dir, b);
    ASSERT_EQ(whole.crossings.size(), first.crossings.size() + second.crossings.size());
    for (std::size_t i = 0; i < second.crossings.size(); ++i)
      EXPECT_EQ(whole.crossings[first.crossings.size() + i].exit, second.crossings[i].exit);
    EXPECT_EQ(whole.end.tri, second.end.tri);
    EXPECT_TRUE(near(whole.end.p, second.end.p, 1e-9));
  }
}

TEST(TraceRay, FlipGluingsNegateDirection) {
  Surface S = fixtures::pillow6();
  auto seg = trace_ray(S, centroid(S, 0), {0.3, 1}, 40);
  int flips = 0;
  for (const auto& c : seg.crossings) flips += S.flip(c.exit);
  EXPECT_EQ(seg.direction_flipped, flips % 2 == 1);
  EXPECT_GT(flips, 0);
}
