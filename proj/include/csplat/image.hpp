#pragma once

#include <cstddef>
#include <vector>

namespace csplat {

/// Row-major H x W x C float image. Channels interleaved; C is 1 or 3.
class Image {
public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels),
        data_(std::size_t(height) * width * channels, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  float& at(int y, int x, int c = 0) {
    return data_[(std::size_t(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c = 0) const {
    return data_[(std::size_t(y) * width_ + x) * channels_ + c];
  }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ &&
           channels_ == o.channels_;
  }

  bool operator==(const Image& o) const {
    return same_shape(o) && data_ == o.data_;
  }

private:
  int height_ = 0, width_ = 0, channels_ = 0;
  std::vector<float> data_;
};

} // namespace csplat
