#pragma once

#include <filesystem>
#include <string>

#include "splatsim/data/frames.hpp"

namespace splatsim::data {

struct LoadOptions {
  std::size_t test_every = 8;  // frames with index % test_every == 0 are held out
  bool load_masks = true;
};

/// Reads the on-disk layout:
///   cameras.json  {fx, fy, cx, cy, width, height, frames: [{file, w2c: 16 row-major}]}
///   images/<file>               RGB PNG
///   depth/<stem>.pfm | .png     meters (PFM) or millimeters (16-bit PNG)
///   masks/<stem>.png            optional, non-zero = dynamic
/// Throws IoError naming the frame for any missing or mismatched file and for malformed
/// JSON; InvalidParameter for non-positive intrinsics or a non-rigid pose.
FrameDataset load_dataset(const std::filesystem::path& root, const LoadOptions& opts = {});

/// Writes the layout read by load_dataset. All frames must share intrinsics and size.
/// `depth_ext` is ".pfm" or ".png".
void save_dataset(const std::filesystem::path& root, const FrameDataset& dataset,
                  const std::string& depth_ext = ".pfm");

/// Cameras only (no images), from a cameras.json file.
std::vector<splat::Camera> load_cameras(const std::filesystem::path& cameras_json);

}  // namespace splatsim::data
