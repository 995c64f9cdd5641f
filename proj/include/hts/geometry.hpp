#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace hts {

inline constexpr double eps_geom = 1e-9;
inline constexpr double eps_ang = 1e-9;
inline constexpr double pi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline Vec2 normalized(Vec2 a) { return a / norm(a); }
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline bool near(Vec2 a, Vec2 b, double tol = eps_geom) { return norm(a - b) <= tol; }

// Counterclockwise angle from a to b in [0, 2pi).
inline double ccw_angle(Vec2 a, Vec2 b) {
  double t = std::atan2(cross(a, b), dot(a, b));
  if (t < 0) t += 2 * pi;
  return t;
}

// Lexicographic sign: +1 when v is lexicographically positive.
inline int lex_sign(Vec2 v, double tol = eps_geom) {
  if (v.x > tol) return 1;
  if (v.x < -tol) return -1;
  return v.y >= 0 ? 1 : -1;
}

inline std::ostream& operator<<(std::ostream& os, Vec2 v) { return os << '(' << v.x << ',' << v.y << ')'; }

struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;  // [[a b] [c d]]

  constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  constexpr Mat2 operator*(const Mat2& m) const {
    return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
  }
  constexpr double det() const { return a * d - b * c; }

  static Mat2 flow(double t) { return {std::exp(t), 0, 0, std::exp(-t)}; }
  static Mat2 rotation(double theta) {
    return {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
  }
  static constexpr Mat2 scale(double s) { return {s, 0, 0, s}; }
};

// Chart change z -> sign * z + shift. Half-translation transitions have sign = +-1.
struct Chart {
  int sign = 1;
  Vec2 shift{};

  constexpr Vec2 apply(Vec2 z) const { return z * double(sign) + shift; }
  constexpr Vec2 apply_vec(Vec2 v) const { return v * double(sign); }
  constexpr Chart inverse() const { return {sign, shift * double(-sign)}; }
  // (this o o)(z) = this(o(z))
  constexpr Chart compose(const Chart& o) const { return {sign * o.sign, apply(o.shift)}; }
};

// Twice the signed area of (a, b, c).
constexpr double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

// Distance from p to segment [a, b].
inline double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double L2 = norm2(ab);
  if (L2 == 0) return norm(p - a);
  double t = std::clamp(dot(p - a, ab) / L2, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

}  // namespace hts
