#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatsim/common/error.hpp"

namespace splatsim {

/// Row-major interleaved image: data[(y * width + x) * channels + c].
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  [[nodiscard]] bool empty() const { return data.empty(); }
  [[nodiscard]] std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  [[nodiscard]] std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  template <typename U>
  [[nodiscard]] bool same_shape(const Image<U>& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  template <typename U>
  [[nodiscard]] bool same_size(const Image<U>& o) const {
    return width == o.width && height == o.height;
  }
};

using ImageD = Image<double>;
using ImageF = Image<float>;
using Image8 = Image<std::uint8_t>;
/// Single-channel boolean mask (non-zero = set).
using Mask = Image<std::uint8_t>;

template <typename A, typename B>
void require_same_size(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!a.same_size(b)) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
  }
}

}  // namespace splatsim
