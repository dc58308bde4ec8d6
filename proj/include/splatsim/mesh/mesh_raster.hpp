#pragma once

#include <cstdint>

#include "splatsim/common/image.hpp"
#include "splatsim/mesh/triangle_mesh.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::mesh {

struct MeshRender {
  ImageD depth;                  // camera z, 0 where no face is hit
  ImageD normal;                 // 3 channels, camera frame, facing the camera, 0 where empty
  Image<std::int32_t> face;      // face index, -1 where empty
};

/// Z-buffered rasterization sampled at pixel centers, with perspective-correct depth and
/// clipping at the near plane. Equal depths keep the lower face index.
MeshRender render_mesh(const TriangleMesh& mesh, const splat::Camera& camera, double z_near = 0.01);

/// Depth-tests `mesh` against an existing render, overwriting pixels where it is closer.
/// `face_offset` is added to the stored face indices.
void render_mesh_into(MeshRender& target, const TriangleMesh& mesh, const splat::Camera& camera,
                      std::int32_t face_offset = 0, double z_near = 0.01);

}  // namespace splatsim::mesh
