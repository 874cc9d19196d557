#include "foilmetric/image.hpp"

#include <cmath>
#include <unordered_map>

#include "foilmetric/error.hpp"

namespace foilmetric {

namespace {

std::size_t checked_area(int width, int height) {
  if (width < 1 || height < 1) {
    throw SizeError("image dimensions must be positive, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height), data_(checked_area(width, height), fill) {
  if (!std::isfinite(fill)) throw FormatError("non-finite fill value");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != checked_area(width, height)) {
    throw SizeError("data length does not match " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw FormatError("image contains a non-finite value");
  }
}

LabelMask::LabelMask(int width, int height)
    : width_(width), height_(height), labels_(checked_area(width, height), 0) {}

LabelMask LabelMask::from_raw(int width, int height, std::vector<Label> raw) {
  if (raw.size() != checked_area(width, height)) {
    throw SizeError("label data length does not match mask dimensions");
  }
  LabelMask mask;
  mask.width_ = width;
  mask.height_ = height;

  // Fast path when labels are already small: dense lookup table.
  Label max_label = 0;
  for (Label v : raw) max_label = std::max(max_label, v);

  Label next = 0;
  if (max_label <= raw.size() + 1) {
    std::vector<Label> remap(static_cast<std::size_t>(max_label) + 1, 0);
    for (Label& v : raw) {
      if (v == 0) continue;
      Label& slot = remap[v];
      if (slot == 0) slot = ++next;
      v = slot;
    }
  } else {
    std::unordered_map<Label, Label> remap;
    for (Label& v : raw) {
      if (v == 0) continue;
      auto [it, inserted] = remap.try_emplace(v, next + 1);
      if (inserted) ++next;
      v = it->second;
    }
  }
  mask.n_cells_ = next;
  mask.labels_ = std::move(raw);
  return mask;
}

}  // namespace foilmetric
