#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foilmetric/features.hpp"
#include "foilmetric/image.hpp"
#include "foilmetric/stats.hpp"

namespace foilmetric::report {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {}

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, std::array<std::uint8_t, 3> c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    data[i] = c[0];
    data[i + 1] = c[1];
    data[i + 2] = c[2];
  }
};

struct OutlinePixel {
  int x = 0;
  int y = 0;
  LabelMask::Label label = 0;
  friend bool operator==(const OutlinePixel&, const OutlinePixel&) = default;
};

/// Cell pixels with at least one 4-neighbour carrying a different label or
/// lying off the image. Returned in scan order.
std::vector<OutlinePixel> extract_outlines(const LabelMask& mask);

struct OverlayLines {
  stats::Orientation orientation = stats::Orientation::Vertical;
  std::vector<int> positions;
};

/// Gray replicated to RGB; transect rules in black, outlines in pure red,
/// centroid markers as filled black discs of radius 3 centred on the rounded
/// centroid. Throws SizeError when an outline or line falls outside the image.
RgbImage render_overlay(const GrayImage& img, const std::vector<OutlinePixel>& outlines,
                        const std::vector<features::Centroid>& markers = {},
                        const OverlayLines& lines = {});

/// Self-contained SVG: density-normalized gray bars, red KDE polyline, axes
/// with ticks. Output depends only on the inputs.
std::string plot_svg(const stats::Histogram& hist, const stats::KdeCurve* kde,
                     const std::string& title, const std::string& x_label);

void emit_plot(const stats::Histogram& hist, const stats::KdeCurve* kde,
               const std::string& title, const std::string& x_label,
               const std::filesystem::path& path);

}  // namespace foilmetric::report
