#pragma once

#include <optional>
#include <string>
#include <vector>

#include "foilmetric/image.hpp"

namespace foilmetric::features {

struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct BoundingBox {
  int x_min = 0;
  int x_max = 0;
  int y_min = 0;
  int y_max = 0;
  int size_x() const { return x_max - x_min + 1; }
  int size_y() const { return y_max - y_min + 1; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Centroid {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Centroid&, const Centroid&) = default;
};

/// Extreme-point spans. dx joins the leftmost and rightmost member pixels,
/// dy the topmost and bottommost.
struct Axes {
  double dx = 0.0;
  double dy = 0.0;
  friend bool operator==(const Axes&, const Axes&) = default;
};

struct PhysicalMeasures {
  double area = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  friend bool operator==(const PhysicalMeasures&, const PhysicalMeasures&) = default;
};

struct CellRecord {
  LabelMask::Label label = 0;
  std::size_t area_px = 0;
  Centroid centroid;
  BoundingBox bbox;
  int size_x = 0;
  int size_y = 0;
  double dx = 0.0;
  double dy = 0.0;
  bool touches_border = false;
  std::optional<PhysicalMeasures> physical;

  friend bool operator==(const CellRecord&, const CellRecord&) = default;
};

// Single-cell queries. Each throws LookupError when k is 0 or not present.
std::size_t cell_area(const LabelMask& mask, LabelMask::Label k);
Centroid cell_centroid(const LabelMask& mask, LabelMask::Label k);
BoundingBox cell_bbox(const LabelMask& mask, LabelMask::Label k);
Axes cell_axes(const LabelMask& mask, LabelMask::Label k);

/// One record per cell, sorted by label, from a single scan of the mask.
/// Physical measures are filled when px_per_unit is given
/// (area / ppu^2, spans / ppu).
std::vector<CellRecord> measure_all(const LabelMask& mask,
                                    std::optional<double> px_per_unit = std::nullopt);

/// Header plus one row per record; floats printed with 6 significant digits.
/// The physical columns appear only when every record has them.
std::string to_csv(const std::vector<CellRecord>& records);

}  // namespace foilmetric::features
