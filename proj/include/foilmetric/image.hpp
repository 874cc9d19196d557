#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace foilmetric {

/// Row-major 2-D scalar raster. Holds intensities (nominally [0,1]) as well
/// as signed derived fields such as gradients.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  /// Throws SizeError on bad dimensions, FormatError on non-finite data.
  GrayImage(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double at(int x, int y) const { return data_[index(x, y)]; }
  double& at(int x, int y) { return data_[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const GrayImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Integer label raster. 0 is background, 1..n_cells are cell identities.
/// Labels are always canonical: dense, and numbered in order of first
/// appearance in a row-major scan.
class LabelMask {
 public:
  using Label = std::uint32_t;

  LabelMask() = default;
  /// All-background mask.
  LabelMask(int width, int height);

  /// Renumbers arbitrary non-negative labels into canonical form.
  static LabelMask from_raw(int width, int height, std::vector<Label> raw);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t n_cells() const { return n_cells_; }
  std::size_t size() const { return labels_.size(); }

  Label at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  std::span<const Label> labels() const { return labels_; }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t n_cells_ = 0;
  std::vector<Label> labels_;
};

/// Description carried alongside an exchanged mask.
struct MaskMetadata {
  int width = 0;
  int height = 0;
  std::string backend_name;
  std::size_t n_cells = 0;
  std::optional<double> px_per_unit;
  std::string source_image;

  friend bool operator==(const MaskMetadata&, const MaskMetadata&) = default;
};

/// Boolean raster used for binarized boundary maps.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryImage() = default;
  BinaryImage(int w, int h, bool fill = false)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill ? 1 : 0) {}

  bool at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool v) {
    data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
         static_cast<std::size_t>(x)] = v ? 1 : 0;
  }
  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

}  // namespace foilmetric
