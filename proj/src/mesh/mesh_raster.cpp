#include "splatsim/mesh/mesh_raster.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/common/error.hpp"

namespace splatsim::mesh {
namespace {

// Sutherland-Hodgman against z >= z_near; a triangle yields at most a quad.
int clip_near(const std::array<Vec3, 3>& in, double z_near, std::array<Vec3, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= z_near, b_in = b.z() >= z_near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) out[n++] = a + (z_near - a.z()) / (b.z() - a.z()) * (b - a);
  }
  return n;
}

void raster_triangle(MeshRender& r, const splat::Camera& cam, const Vec3& a, const Vec3& b,
                     const Vec3& c, const Vec3& normal, std::int32_t face) {
  const auto project = [&](const Vec3& p) {
    return Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
  };
  const Vec2 pa = project(a), pb = project(b), pc = project(c);
  const double area = (pb - pa).x() * (pc - pa).y() - (pb - pa).y() * (pc - pa).x();
  if (!(std::abs(area) > 1e-12)) return;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({pa.x(), pb.x(), pc.x()}) - 0.5)));
  const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({pa.x(), pb.x(), pc.x()}) - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({pa.y(), pb.y(), pc.y()}) - 0.5)));
  const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({pa.y(), pb.y(), pc.y()}) - 0.5)));
  const double inv_za = 1 / a.z(), inv_zb = 1 / b.z(), inv_zc = 1 / c.z();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);
      const auto edge = [](const Vec2& u, const Vec2& v, const Vec2& q) {
        return (v - u).x() * (q - u).y() - (v - u).y() * (q - u).x();
      };
      double wa = edge(pb, pc, p) / area, wb = edge(pc, pa, p) / area, wc = edge(pa, pb, p) / area;
      if (wa < 0 || wb < 0 || wc < 0) continue;
      const double z = 1.0 / (wa * inv_za + wb * inv_zb + wc * inv_zc);
      double& d = r.depth.at(x, y);
      if (d > 0 && !(z < d)) continue;
      d = z;
      r.face.at(x, y) = face;
      for (int k = 0; k < 3; ++k) r.normal.at(x, y, k) = normal[k];
    }
}

}  // namespace

void render_mesh_into(MeshRender& r, const TriangleMesh& mesh, const splat::Camera& cam,
                      std::int32_t face_offset, double z_near) {
  if (!(z_near > 0)) throw InvalidParameter("render_mesh: z_near must be positive");
  if (r.depth.empty()) {
    r.depth = ImageD(cam.width, cam.height, 1, 0.0);
    r.normal = ImageD(cam.width, cam.height, 3, 0.0);
    r.face = Image<std::int32_t>(cam.width, cam.height, 1, -1);
  }
  if (r.depth.width != cam.width || r.depth.height != cam.height)
    throw DimensionMismatch("render_mesh_into: target does not match the camera");
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const std::array<Vec3, 3> tri{cam.to_camera(mesh.vertices[t[0]]), cam.to_camera(mesh.vertices[t[1]]),
                                  cam.to_camera(mesh.vertices[t[2]])};
    Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    const double len = n.norm();
    if (!(len > 0)) continue;
    n /= len;
    if (n.dot(tri[0]) > 0) n = -n;
    std::array<Vec3, 4> poly;
    const int count = clip_near(tri, z_near, poly);
    for (int k = 1; k + 1 < count; ++k)
      raster_triangle(r, cam, poly[0], poly[k], poly[k + 1], n, face_offset + static_cast<std::int32_t>(f));
  }
}

MeshRender render_mesh(const TriangleMesh& mesh, const splat::Camera& camera, double z_near) {
  MeshRender r;
  render_mesh_into(r, mesh, camera, 0, z_near);
  return r;
}

}  // namespace splatsim::mesh
