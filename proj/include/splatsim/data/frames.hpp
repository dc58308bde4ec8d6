#pragma once

#include <string>
#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::data {

/// One posed training or test frame, fully loaded.
struct Frame {
  std::string name;
  splat::Camera camera;
  ImageD image;        // RGB in [0,1]
  ImageD depth;        // predicted depth, 0 = unknown; empty when absent
  Mask dynamic_mask;   // set = dynamic pixel; empty when absent
};

struct FrameDataset {
  std::vector<Frame> frames;
  std::vector<std::size_t> train;  // indices into frames
  std::vector<std::size_t> test;

  /// Every `every`-th frame (index % every == 0) goes to test, the rest to train.
  void split_every(std::size_t every = 8) {
    train.clear();
    test.clear();
    for (std::size_t i = 0; i < frames.size(); ++i) (i % every == 0 ? test : train).push_back(i);
  }
};

}  // namespace splatsim::data
