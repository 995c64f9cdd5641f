#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hts/geodesic.hpp"

namespace curves {

using namespace hts;

inline CurveWord closed_word(const Surface& S, SurfacePoint p, Vec2 dir, double max_len) {
  auto tr = closed_trajectory(S, p, dir, max_len);
  if (!tr) throw std::runtime_error("no closed trajectory");
  return word_of_trace(*tr);
}

inline FlatGeodesic torus_curve(const Surface& T, int p, int q, Vec2 base = {0.6, 0.2}) {
  return tighten(T, closed_word(T, {0, base}, {double(p), double(q)}, std::hypot(p, q) + 1));
}

// Horizontal/vertical cores of the L3 fixture; (0.5, 0.25) lies in the lower-left square.
inline FlatGeodesic l3_core(const Surface& S, Vec2 dir, Vec2 base = {0.5, 0.25}) {
  return tighten(S, closed_word(S, {0, base}, dir, 5));
}

// Same surface with triangles permuted and each triangle's sides rotated; charts follow the new
// first vertex.
struct Relabeling {
  std::vector<int> perm, rot;
  HalfEdge operator()(HalfEdge h) const { return {perm[h.tri], (h.edge - rot[h.tri] + 3) % 3}; }
  CurveWord operator()(const CurveWord& w) const {
    CurveWord out;
    for (auto h : w) out.push_back((*this)(h));
    return out;
  }
  SurfacePoint operator()(const Surface& S, SurfacePoint x) const {
    return {perm[x.tri], x.p - S.vertex_positions(x.tri)[rot[x.tri]]};
  }
  Surface apply(const Surface& S) const {
    SurfaceSpec spec = S.spec(), re;
    re.triangles.resize(spec.triangles.size());
    for (std::size_t t = 0; t < spec.triangles.size(); ++t)
      for (int k = 0; k < 3; ++k) re.triangles[perm[t]][k] = spec.triangles[t][(k + rot[t]) % 3];
    for (auto g : spec.gluings) re.gluings.push_back({(*this)(g.a), (*this)(g.b), g.flip});
    return Surface(re);
  }
};

inline Relabeling shuffled_labels(int n) {
  Relabeling r;
  for (int t = 0; t < n; ++t) r.perm.push_back(t), r.rot.push_back(t % 3);
  for (int t = 0; t < n; ++t) std::swap(r.perm[t], r.perm[(5 * t + 3) % n]);
  return r;
}

}  // namespace curves
