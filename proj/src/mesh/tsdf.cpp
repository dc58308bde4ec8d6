#include "splatsim/mesh/tsdf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "splatsim/common/error.hpp"
#include "splatsim/common/log.hpp"

namespace splatsim::mesh {

TsdfVolume::TsdfVolume(const Vec3& origin, const std::array<int, 3>& dims, double voxel,
                       double truncation)
    : origin_(origin), dims_(dims), voxel_(voxel), truncation_(truncation) {
  if (!(voxel > 0) || !std::isfinite(voxel)) throw InvalidParameter("TSDF voxel size must be positive");
  if (!(truncation >= 2 * voxel) || !std::isfinite(truncation))
    throw InvalidParameter("TSDF truncation must be at least twice the voxel size");
  if (!origin.allFinite()) throw InvalidParameter("TSDF origin must be finite");
  for (const int d : dims)
    if (d < 2) throw InvalidParameter("TSDF dims must be at least 2 per axis");
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  sdf_.assign(n, static_cast<float>(truncation));
  weight_.assign(n, 0.0f);
}

TsdfVolume TsdfVolume::covering(const Vec3& lo, const Vec3& hi, double voxel, double truncation) {
  if (!lo.allFinite() || !hi.allFinite() || (hi.array() < lo.array()).any())
    throw InvalidParameter("TSDF bounds must be finite with lo <= hi");
  if (!(voxel > 0)) throw InvalidParameter("TSDF voxel size must be positive");
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a)
    dims[a] = std::max(2, static_cast<int>(std::ceil((hi[a] - lo[a]) / voxel - 1e-9)) + 1);
  return TsdfVolume(lo, dims, voxel, truncation);
}

void TsdfVolume::set(int i, int j, int k, double sdf, double weight) {
  if (!(weight >= 0)) throw InvalidParameter("TSDF weight must be non-negative");
  if (!std::isfinite(sdf)) throw InvalidParameter("TSDF value must be finite");
  const auto idx = index(i, j, k);
  sdf_[idx] = static_cast<float>(std::clamp(sdf, -truncation_, truncation_));
  weight_[idx] = static_cast<float>(weight);
}

void TsdfVolume::fuse(std::size_t idx, double sdf) {
  const double clamped = std::clamp(sdf, -truncation_, truncation_);
  const double w = weight_[idx];
  const double fused = (w * sdf_[idx] + clamped) / (w + 1.0);
  sdf_[idx] = static_cast<float>(std::clamp(fused, -truncation_, truncation_));
  weight_[idx] = static_cast<float>(w + 1.0);
}

namespace {

constexpr double kDepthJump = 0.1;

bool valid_depth(double d) { return d > 0 && std::isfinite(d); }

// Bilinear between the four surrounding pixel centers when all are valid and continuous,
// otherwise the containing pixel; 0 means no observation.
double sample_depth(const ImageD& depth, double u, double v, int px, int py) {
  const double nearest = depth.at(px, py);
  if (!valid_depth(nearest)) return 0.0;
  const double fx = u - 0.5, fy = v - 0.5;
  const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= depth.width || y0 + 1 >= depth.height) return nearest;
  const double d00 = depth.at(x0, y0), d10 = depth.at(x0 + 1, y0);
  const double d01 = depth.at(x0, y0 + 1), d11 = depth.at(x0 + 1, y0 + 1);
  if (!valid_depth(d00) || !valid_depth(d10) || !valid_depth(d01) || !valid_depth(d11)) return nearest;
  const double lo = std::min({d00, d10, d01, d11}), hi = std::max({d00, d10, d01, d11});
  if (hi - lo > kDepthJump * lo) return nearest;  // occlusion boundary
  const double ax = fx - x0, ay = fy - y0;
  return (1 - ay) * ((1 - ax) * d00 + ax * d10) + ay * ((1 - ax) * d01 + ax * d11);
}

}  // namespace

void tsdf_integrate(TsdfVolume& volume, const ImageD& depth, const splat::Camera& camera,
                    const Mask* skip) {
  if (depth.width != camera.width || depth.height != camera.height || depth.channels != 1)
    throw DimensionMismatch("tsdf_integrate: depth map does not match the camera");
  if (skip) require_same_size(depth, *skip, "tsdf_integrate mask");
  const auto& dims = volume.dims();
  const double trunc = volume.truncation();
  // Samples are independent, so slices can be processed in any order.
#pragma omp parallel for schedule(static)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p = camera.to_camera(volume.position(i, j, k));
        if (!(p.z() > 0)) continue;
        const double u = camera.fx * p.x() / p.z() + camera.cx;
        const double v = camera.fy * p.y() / p.z() + camera.cy;
        if (!(u >= 0 && v >= 0 && u < camera.width && v < camera.height)) continue;
        const int px = static_cast<int>(u), py = static_cast<int>(v);
        if (skip && skip->at(px, py)) continue;
        const double d = sample_depth(depth, u, v, px, py);
        if (!(d > 0)) continue;
        const double sdf = d - p.z();
        if (sdf < -trunc) continue;
        volume.fuse(volume.index(i, j, k), sdf);
      }
}

// ---------------------------------------------------------------- table generation

const std::array<std::array<int, 2>, 12>& marching_cubes_edges() {
  static const auto edges = [] {
    std::array<std::array<int, 2>, 12> e{};
    int n = 0;
    for (int a = 0; a < 8; ++a)
      for (int bit = 1; bit < 8; bit <<= 1)
        if (!(a & bit)) e[n++] = {a, a | bit};
    return e;
  }();
  return edges;
}

namespace {

int edge_between(int a, int b) {
  const auto& edges = marching_cubes_edges();
  for (int e = 0; e < 12; ++e)
    if ((edges[e][0] == a && edges[e][1] == b) || (edges[e][0] == b && edges[e][1] == a)) return e;
  return -1;
}

Vec3 corner_offset(int c) { return Vec3(c & 1, (c >> 1) & 1, (c >> 2) & 1); }

// Boundary segments of the inside region on each cube face. On a face with two diagonal
// inside corners, the inside corners are kept separate, so neighbouring cubes always agree.
std::vector<std::array<int, 2>> face_segments(int config) {
  std::vector<std::array<int, 2>> segs;
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      const int u = 1 << ((axis + 1) % 3), v = 1 << ((axis + 2) % 3);
      const int base = side << axis;
      const std::array<int, 4> ring{base, base | u, base | u | v, base | v};
      auto inside = [&](int c) { return (config >> c) & 1; };
      std::vector<int> crossing;
      for (int q = 0; q < 4; ++q)
        if (inside(ring[q]) != inside(ring[(q + 1) % 4]))
          crossing.push_back(edge_between(ring[q], ring[(q + 1) % 4]));
      if (crossing.size() == 2) {
        segs.push_back({crossing[0], crossing[1]});
      } else if (crossing.size() == 4) {
        for (int q = 0; q < 4; ++q)
          if (inside(ring[q]))
            segs.push_back({edge_between(ring[(q + 3) % 4], ring[q]), edge_between(ring[q], ring[(q + 1) % 4])});
      }
    }
  return segs;
}

std::vector<std::array<int, 3>> triangulate_config(int config) {
  const auto& edges = marching_cubes_edges();
  const auto segs = face_segments(config);
  std::array<std::vector<int>, 12> adj;
  for (const auto& s : segs) {
    adj[s[0]].push_back(s[1]);
    adj[s[1]].push_back(s[0]);
  }
  std::array<bool, 12> seen{};
  std::vector<std::array<int, 3>> tris;
  for (int start = 0; start < 12; ++start) {
    if (seen[start] || adj[start].empty()) continue;
    std::vector<int> loop{start};
    seen[start] = true;
    int prev = -1, cur = start;
    while (true) {
      const int next = adj[cur][0] != prev ? adj[cur][0] : adj[cur][1];
      if (next == start) break;
      loop.push_back(next);
      seen[next] = true;
      prev = cur;
      cur = next;
    }
    // Orient so the polygon normal points from inside corners to outside corners.
    Vec3 newell = Vec3::Zero(), outward = Vec3::Zero();
    for (std::size_t q = 0; q < loop.size(); ++q) {
      const auto& e0 = edges[loop[q]];
      const auto& e1 = edges[loop[(q + 1) % loop.size()]];
      const Vec3 p0 = 0.5 * (corner_offset(e0[0]) + corner_offset(e0[1]));
      const Vec3 p1 = 0.5 * (corner_offset(e1[0]) + corner_offset(e1[1]));
      newell += p0.cross(p1);
      const bool first_inside = (config >> e0[0]) & 1;
      outward += first_inside ? Vec3(corner_offset(e0[1]) - corner_offset(e0[0]))
                              : Vec3(corner_offset(e0[0]) - corner_offset(e0[1]));
    }
    if (newell.dot(outward) < 0) std::reverse(loop.begin(), loop.end());
    for (std::size_t q = 1; q + 1 < loop.size(); ++q) tris.push_back({loop[0], loop[q], loop[q + 1]});
  }
  return tris;
}

}  // namespace

const std::array<std::vector<std::array<int, 3>>, 256>& marching_cubes_table() {
  static const auto table = [] {
    std::array<std::vector<std::array<int, 3>>, 256> t;
    for (int c = 0; c < 256; ++c) t[c] = triangulate_config(c);
    return t;
  }();
  return table;
}

// ---------------------------------------------------------------- extraction

TriangleMesh marching_cubes(const TsdfVolume& volume) {
  const auto& table = marching_cubes_table();
  const auto& edges = marching_cubes_edges();
  const auto& dims = volume.dims();
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_edge;
  auto sample_index = [&](int i, int j, int k) { return volume.index(i, j, k); };
  const auto& sdf = volume.sdf_values();
  const auto& w = volume.weights();

  for (int k = 0; k + 1 < dims[2]; ++k)
    for (int j = 0; j + 1 < dims[1]; ++j)
      for (int i = 0; i + 1 < dims[0]; ++i) {
        std::array<double, 8> val{};
        int config = 0;
        bool observed = true;
        for (int c = 0; c < 8; ++c) {
          const auto idx = sample_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          if (!(w[idx] > 0)) {
            observed = false;
            break;
          }
          val[c] = sdf[idx];
          if (val[c] < 0) config |= 1 << c;
        }
        if (!observed || config == 0 || config == 255) continue;
        for (const auto& tri : table[config]) {
          Face f{};
          for (int q = 0; q < 3; ++q) {
            const int a = edges[tri[q]][0], b = edges[tri[q]][1];
            const int ia = i + (a & 1), ja = j + ((a >> 1) & 1), ka = k + ((a >> 2) & 1);
            const int axis = std::countr_zero(static_cast<unsigned>(a ^ b));
            const int ib = i + (b & 1), jb = j + ((b >> 1) & 1), kb = k + ((b >> 2) & 1);
            // A crossing exactly on a sample is keyed by the sample, so every cube touching it
            // shares one vertex and the collapsed triangles drop out without opening holes.
            const double t = val[a] / (val[a] - val[b]);
            std::uint64_t key = static_cast<std::uint64_t>(sample_index(ia, ja, ka)) * 4 + axis;
            if (t == 0) key = static_cast<std::uint64_t>(sample_index(ia, ja, ka)) * 4 + 3;
            if (t == 1) key = static_cast<std::uint64_t>(sample_index(ib, jb, kb)) * 4 + 3;
            auto [it, inserted] = vertex_of_edge.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (inserted) {
              const Vec3 pa = volume.position(ia, ja, ka);
              mesh.vertices.push_back(pa + t * (volume.position(ib, jb, kb) - pa));
            }
            f[q] = it->second;
          }
          mesh.faces.push_back(f);
        }
      }
  if (mesh.faces.empty()) {
    warn("marching_cubes: volume has no observed zero crossing; mesh is empty");
    return mesh;
  }
  mesh.remove_degenerate();
  mesh.compute_normals();
  return mesh;
}

}  // namespace splatsim::mesh
