#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"

namespace voxmorph {

struct HullResult {
  double volume = 0.0;
  bool degenerate = false; // fewer than 4 points, or all collinear/coplanar
};

namespace detail {

// Signed volume (x6) of tetrahedron (a, b, c, d).
inline double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Vec3 ab = b - a, ac = c - a, ad = d - a;
  return ab.dot(ac.cross(ad));
}

struct HullFace {
  int a, b, c;
  bool alive = true;
};

} // namespace detail

// Incremental 3D convex hull; returns the enclosed volume. Points processed
// in stable index order after a deterministic extreme-point seed, so results
// are reproducible for identical input. Degenerate inputs (all points
// collinear or coplanar) are reported rather than given a zero hull.
inline HullResult convex_hull_volume(const std::vector<Vec3>& pts) {
  HullResult out;
  const std::size_t n = pts.size();
  if (n < 4) {
    out.degenerate = true;
    return out;
  }

  double scale = 0.0;
  for (const auto& p : pts)
    scale = std::max({scale, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
  if (scale == 0.0) scale = 1.0;
  const double eps_len = 1e-12 * scale;
  const double eps_area = 1e-12 * scale * scale;
  const double eps_vol = 1e-12 * scale * scale * scale;

  // seed tetrahedron from deterministic extremes
  std::size_t i0 = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const Vec3 &p = pts[i], &q = pts[i0];
    if (p.x < q.x || (p.x == q.x && (p.y < q.y || (p.y == q.y && p.z < q.z)))) i0 = i;
  }
  std::size_t i1 = i0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = (pts[i] - pts[i0]).norm();
    if (d > best) { best = d; i1 = i; }
  }
  if (best <= eps_len) {
    out.degenerate = true; // all points coincident
    return out;
  }
  std::size_t i2 = i0;
  best = -1.0;
  Vec3 axis = pts[i1] - pts[i0];
  for (std::size_t i = 0; i < n; ++i) {
    double d = axis.cross(pts[i] - pts[i0]).norm();
    if (d > best) { best = d; i2 = i; }
  }
  if (best <= eps_area) {
    out.degenerate = true; // collinear
    return out;
  }
  std::size_t i3 = i0;
  best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::abs(detail::orient3d(pts[i0], pts[i1], pts[i2], pts[i]));
    if (d > best) { best = d; i3 = i; }
  }
  if (best <= eps_vol) {
    out.degenerate = true; // coplanar
    return out;
  }

  int a = static_cast<int>(i0), b = static_cast<int>(i1),
      c = static_cast<int>(i2), d = static_cast<int>(i3);
  if (detail::orient3d(pts[a], pts[b], pts[c], pts[d]) > 0.0)
    std::swap(b, c); // make d lie below (a, b, c): faces wind outward

  std::vector<detail::HullFace> faces{{a, b, c}, {a, c, d}, {a, d, b}, {b, d, c}};

  const double eps_vis = 1e-10 * scale * scale * scale;
  std::vector<char> visible;
  std::vector<std::pair<int, int>> horizon;
  for (std::size_t i = 0; i < n; ++i) {
    int p = static_cast<int>(i);
    if (p == a || p == b || p == c || p == d) continue;
    visible.assign(faces.size(), 0);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!faces[f].alive) continue;
      if (detail::orient3d(pts[faces[f].a], pts[faces[f].b], pts[faces[f].c], pts[p]) >
          eps_vis) {
        visible[f] = 1;
        any = true;
      }
    }
    if (!any) continue;
    // horizon: directed edges of visible faces whose reverse edge is not
    // shared with another visible face; collected against the visibility
    // snapshot before any face is retired
    horizon.clear();
    auto edge_visible = [&](int u, int v) {
      for (std::size_t f = 0; f < faces.size(); ++f) {
        if (!faces[f].alive || !visible[f]) continue;
        const auto& fc = faces[f];
        if ((fc.a == u && fc.b == v) || (fc.b == u && fc.c == v) ||
            (fc.c == u && fc.a == v))
          return true;
      }
      return false;
    };
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!faces[f].alive || !visible[f]) continue;
      const auto& fc = faces[f];
      int e[3][2] = {{fc.a, fc.b}, {fc.b, fc.c}, {fc.c, fc.a}};
      for (auto& ed : e)
        if (!edge_visible(ed[1], ed[0])) horizon.emplace_back(ed[0], ed[1]);
    }
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (visible[f]) faces[f].alive = false;
    for (const auto& ed : horizon)
      faces.push_back({ed.first, ed.second, p});
  }

  // interior reference: centroid of the seed tetrahedron
  Vec3 g = (pts[a] + pts[b] + pts[c] + pts[d]) * 0.25;
  double vol6 = 0.0;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    // faces wind outward, so each tetra over g contributes positively
    vol6 += -detail::orient3d(pts[f.a], pts[f.b], pts[f.c], g);
  }
  out.volume = vol6 / 6.0;
  return out;
}

} // namespace voxmorph
