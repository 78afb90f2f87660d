#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlpsynth/error.hpp"

namespace tlpsynth {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// Square W x W RGB8 raster holding an encoded trace. Row-major storage;
/// (0,0,0) pixels are padding.
class TraceImage {
 public:
  TraceImage() = default;
  explicit TraceImage(int width) : width_(width) {
    if (width < 1) throw Error("image width must be >= 1");
    px_.resize(static_cast<std::size_t>(width) * width);
  }

  int width() const { return width_; }
  std::size_t pixel_count() const { return px_.size(); }

  Rgb& operator()(int row, int col) {
    return px_[static_cast<std::size_t>(row) * width_ + col];
  }
  const Rgb& operator()(int row, int col) const {
    return px_[static_cast<std::size_t>(row) * width_ + col];
  }

  Rgb& at(int row, int col) {
    check(row, col);
    return (*this)(row, col);
  }
  const Rgb& at(int row, int col) const {
    check(row, col);
    return (*this)(row, col);
  }

  std::vector<Rgb>& pixels() { return px_; }
  const std::vector<Rgb>& pixels() const { return px_; }

  bool operator==(const TraceImage&) const = default;

 private:
  void check(int row, int col) const {
    if (row < 0 || row >= width_ || col < 0 || col >= width_) {
      throw Error("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                  ") outside " + std::to_string(width_) + "x" + std::to_string(width_));
    }
  }

  int width_ = 0;
  std::vector<Rgb> px_;
};

inline void require_same_size(const TraceImage& a, const TraceImage& b,
                              const char* what) {
  if (a.width() != b.width()) {
    throw Error(std::string(what) + ": image dimensions differ (" +
                std::to_string(a.width()) + " vs " + std::to_string(b.width()) + ")");
  }
}

}  // namespace tlpsynth
