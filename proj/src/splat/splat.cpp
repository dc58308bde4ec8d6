#include "splatsim/splat/splat.hpp"

#include "splatsim/common/error.hpp"

namespace splatsim::splat {

void validate(const Splat& s) {
  if (!s.mean.allFinite() || !s.rotation.allFinite() || !s.scales.allFinite() ||
      !std::isfinite(s.opacity) || !s.color.allFinite())
    throw InvalidParameter("splat has non-finite parameters");
  if ((s.scales.array() <= 0).any()) throw InvalidParameter("splat scales must be positive");
  if (!(s.opacity > 0 && s.opacity < 1)) throw InvalidParameter("splat opacity must be in (0,1)");
  if (s.rotation.norm() < 1e-12) throw InvalidParameter("splat rotation quaternion is zero");
}

Mat3 rotation_matrix(const Vec4& q_raw) {
  const Vec4 q = q_raw.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat4 Camera::world_to_camera() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void Camera::set_world_to_camera(const Mat4& m) {
  rotation = m.topLeftCorner<3, 3>();
  translation = m.topRightCorner<3, 1>();
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                       int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.unitOrthogonal();
  right.normalize();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  return cam;
}

void validate(const Camera& cam) {
  if (!(cam.fx > 0 && cam.fy > 0)) throw InvalidParameter("camera focal lengths must be positive");
  if (cam.width <= 0 || cam.height <= 0) throw InvalidParameter("camera size must be positive");
  if (!std::isfinite(cam.cx) || !std::isfinite(cam.cy) || !cam.rotation.allFinite() ||
      !cam.translation.allFinite())
    throw InvalidParameter("camera has non-finite parameters");
  if ((cam.rotation * cam.rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw InvalidParameter("camera rotation is not orthonormal");
}

}  // namespace splatsim::splat
