#include "splatsim/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatsim/common/error.hpp"
#include "splatsim/mesh/mesh_raster.hpp"

namespace splatsim::sim {

ComposedFrame compose_frame(const ImageD& splat_color, const ImageD& splat_depth, const ImageD& splat_alpha,
                            const ImageD& fg_color, const ImageD& fg_depth, double min_alpha) {
  require_same_size(splat_color, splat_depth, "compose_frame splat depth");
  require_same_size(splat_color, splat_alpha, "compose_frame splat alpha");
  require_same_size(splat_color, fg_color, "compose_frame foreground color");
  require_same_size(splat_color, fg_depth, "compose_frame foreground depth");
  if (splat_color.channels != 3 || fg_color.channels != 3) throw DimensionMismatch("compose_frame expects RGB layers");
  ComposedFrame out{splat_color, ImageD(splat_color.width, splat_color.height, 1, 0.0)};
  constexpr double kFar = std::numeric_limits<double>::infinity();
  for (int y = 0; y < splat_color.height; ++y)
    for (int x = 0; x < splat_color.width; ++x) {
      const double a = splat_alpha.at(x, y);
      const double ds = a >= min_alpha ? splat_depth.at(x, y) / a : kFar;
      const double df = fg_depth.at(x, y) > 0 ? fg_depth.at(x, y) : kFar;
      if (df < ds) {
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = fg_color.at(x, y, c);
        out.depth.at(x, y) = df;
      } else if (ds < kFar) {
        out.depth.at(x, y) = ds;
      }
    }
  return out;
}

void ColoredMesh::append(const mesh::TriangleMesh& m, const Vec3& color) {
  mesh.append(m);
  face_colors.insert(face_colors.end(), m.faces.size(), color);
}

void render_colored(const ColoredMesh& layer, const splat::Camera& camera, ImageD& color, ImageD& depth) {
  color = ImageD(camera.width, camera.height, 3, 0.0);
  const auto r = mesh::render_mesh(layer.mesh, camera);
  depth = r.depth;
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      const int f = r.face.at(x, y);
      if (f < 0) continue;
      const double light = 0.45 + 0.55 * std::abs(r.normal.at(x, y, 2));
      for (int c = 0; c < 3; ++c) color.at(x, y, c) = std::clamp(layer.face_colors[f][c] * light, 0.0, 1.0);
    }
}

void validate(const CameraRig& rig) {
  if (rig.width < 1 || rig.height < 1) throw InvalidParameter("camera resolution must be positive");
  if (!(rig.focal > 0)) throw InvalidParameter("camera focal length must be positive");
  if (!(rig.perturb_position >= 0) || !(rig.perturb_rotation_deg >= 0))
    throw InvalidParameter("camera perturbation magnitudes must be non-negative");
}

CameraPerturbation sample_perturbation(const CameraRig& rig, std::mt19937_64& rng) {
  CameraPerturbation p;
  const double rot = deg2rad(rig.perturb_rotation_deg);
  for (int k = 0; k < 3; ++k) p.offset[k] = uniform(rng, -rig.perturb_position, rig.perturb_position);
  for (int k = 0; k < 3; ++k) p.angles[k] = uniform(rng, -rot, rot);
  return p;
}

splat::Camera mount_camera(const CameraRig& rig, const Vec2& position, double heading, double ground_z,
                           const CameraPerturbation& perturbation) {
  const Vec3 forward(std::cos(heading), std::sin(heading), 0.0);
  const Vec3 right(std::sin(heading), -std::cos(heading), 0.0);
  const Vec3 down(0, 0, -1);
  // Rows are the camera axes in world coordinates (x right, y down, z forward).
  Mat3 level;
  level.row(0) = right;
  level.row(1) = down;
  level.row(2) = forward;
  const Mat3 pitch = Eigen::AngleAxisd(deg2rad(rig.pitch_deg), Vec3::UnitX()).toRotationMatrix();
  const Mat3 jitter = (Eigen::AngleAxisd(perturbation.angles.z(), Vec3::UnitZ()) *
                       Eigen::AngleAxisd(perturbation.angles.y(), Vec3::UnitY()) *
                       Eigen::AngleAxisd(perturbation.angles.x(), Vec3::UnitX())).toRotationMatrix();
  splat::Camera cam;
  cam.width = rig.width;
  cam.height = rig.height;
  cam.fx = cam.fy = rig.focal;
  cam.cx = rig.width / 2.0;
  cam.cy = rig.height / 2.0;
  cam.rotation = jitter * pitch * level;
  const Vec3 mount = Vec3(position.x(), position.y(), ground_z + rig.mount_height) + rig.mount_forward * forward;
  const Vec3 eye = mount + cam.rotation.transpose() * perturbation.offset;
  cam.translation = -cam.rotation * eye;
  return cam;
}

}  // namespace splatsim::sim
