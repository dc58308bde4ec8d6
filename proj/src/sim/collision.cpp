#include "splatsim/sim/collision.hpp"

#include <algorithm>
#include <numeric>

#include "splatsim/sim/geometry.hpp"

namespace splatsim::sim {
namespace {

void sweep_bounds(const BodySweep& s, Vec3& lo, Vec3& hi) {
  lo = Vec3(std::min(s.from.x(), s.to.x()) - s.radius, std::min(s.from.y(), s.to.y()) - s.radius, s.z_lo - s.radius);
  hi = Vec3(std::max(s.from.x(), s.to.x()) + s.radius, std::max(s.from.y(), s.to.y()) + s.radius, s.z_hi + s.radius);
  // Keeps the prefilter conservative against rounding in the exact predicate.
  lo.array() -= 1e-9;
  hi.array() += 1e-9;
}

bool boxes_overlap(const Vec3& alo, const Vec3& ahi, const Vec3& blo, const Vec3& bhi) {
  return (alo.array() <= bhi.array()).all() && (blo.array() <= ahi.array()).all();
}

}  // namespace

double triangle_distance(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                         const Vec3& b1, const Vec3& b2) {
  // The closest pair always involves an edge of one of the triangles, and an
  // intersection always has an edge of one crossing the other.
  double best = segment_triangle_distance(a0, a1, b0, b1, b2);
  best = std::min(best, segment_triangle_distance(a1, a2, b0, b1, b2));
  best = std::min(best, segment_triangle_distance(a2, a0, b0, b1, b2));
  best = std::min(best, segment_triangle_distance(b0, b1, a0, a1, a2));
  best = std::min(best, segment_triangle_distance(b1, b2, a0, a1, a2));
  best = std::min(best, segment_triangle_distance(b2, b0, a0, a1, a2));
  return best;
}

bool sweep_touches_triangle(const BodySweep& s, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 p0(s.from.x(), s.from.y(), s.z_lo), p1(s.from.x(), s.from.y(), s.z_hi);
  if (s.from == s.to) return segment_triangle_distance(p0, p1, a, b, c) <= s.radius;
  const Vec3 q0(s.to.x(), s.to.y(), s.z_lo), q1(s.to.x(), s.to.y(), s.z_hi);
  // Swept core is the parallelogram p0 q0 q1 p1.
  return triangle_distance(p0, q0, q1, a, b, c) <= s.radius ||
         triangle_distance(p0, q1, p1, a, b, c) <= s.radius;
}

std::vector<std::uint32_t> sweep_contacts_brute_force(const mesh::TriangleMesh& mesh, const BodySweep& sweep) {
  std::vector<std::uint32_t> hits;
  for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    if (sweep_touches_triangle(sweep, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]])) hits.push_back(f);
  }
  return hits;
}

CollisionIndex::CollisionIndex(mesh::TriangleMesh mesh, int leaf_size) : mesh_(std::move(mesh)) {
  const auto n = static_cast<std::uint32_t>(mesh_.faces.size());
  if (n == 0) return;
  tri_lo_.resize(n);
  tri_hi_.resize(n);
  centroid_.resize(n);
  for (std::uint32_t f = 0; f < n; ++f) {
    const auto& t = mesh_.faces[f];
    const Vec3 &a = mesh_.vertices[t[0]], &b = mesh_.vertices[t[1]], &c = mesh_.vertices[t[2]];
    tri_lo_[f] = a.cwiseMin(b).cwiseMin(c);
    tri_hi_[f] = a.cwiseMax(b).cwiseMax(c);
    centroid_[f] = (a + b + c) / 3.0;
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * n / std::max(1, leaf_size) + 1);
  build(0, n, std::max(1, leaf_size));
}

std::uint32_t CollisionIndex::build(std::uint32_t begin, std::uint32_t end, int leaf_size) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Vec3 lo = tri_lo_[order_[begin]], hi = tri_hi_[order_[begin]];
  Vec3 clo = centroid_[order_[begin]], chi = clo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(tri_lo_[order_[i]]);
    hi = hi.cwiseMax(tri_hi_[order_[i]]);
    clo = clo.cwiseMin(centroid_[order_[i]]);
    chi = chi.cwiseMax(centroid_[order_[i]]);
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  if (end - begin <= static_cast<std::uint32_t>(leaf_size)) {
    nodes_[id].first = begin;
    nodes_[id].count = end - begin;
    return id;
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return centroid_[a][axis] < centroid_[b][axis] ||
                            (centroid_[a][axis] == centroid_[b][axis] && a < b);
                   });
  const std::uint32_t left = build(begin, mid, leaf_size);
  const std::uint32_t right = build(mid, end, leaf_size);
  nodes_[id].first = left;
  nodes_[id].right = right;
  return id;
}

template <typename Visit>
bool CollisionIndex::traverse(const BodySweep& sweep, Visit&& visit) const {
  if (nodes_.empty()) return false;
  Vec3 qlo, qhi;
  sweep_bounds(sweep, qlo, qhi);
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!boxes_overlap(node.lo, node.hi, qlo, qhi)) continue;
    if (node.count == 0) {
      stack.push_back(node.right);
      stack.push_back(node.first);
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const std::uint32_t f = order_[i];
      if (!boxes_overlap(tri_lo_[f], tri_hi_[f], qlo, qhi)) continue;
      const auto& t = mesh_.faces[f];
      if (sweep_touches_triangle(sweep, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]) && visit(f))
        return true;
    }
  }
  return false;
}

std::vector<std::uint32_t> CollisionIndex::contacts(const BodySweep& sweep) const {
  std::vector<std::uint32_t> hits;
  traverse(sweep, [&](std::uint32_t f) {
    hits.push_back(f);
    return false;
  });
  std::sort(hits.begin(), hits.end());
  return hits;
}

bool CollisionIndex::touches(const BodySweep& sweep) const {
  return traverse(sweep, [](std::uint32_t) { return true; });
}

}  // namespace splatsim::sim
