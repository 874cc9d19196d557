#include "foilmetric/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "foilmetric/error.hpp"

namespace foilmetric::features {

namespace {

// Running per-cell accumulator. Coordinates sums stay integral so the
// centroid is a single correctly rounded division.
struct Accumulator {
  std::size_t area = 0;
  long long sum_x = 0;
  long long sum_y = 0;
  BoundingBox box{std::numeric_limits<int>::max(), -1, std::numeric_limits<int>::max(), -1};
  PixelPoint left, right, top, bottom;
  bool border = false;

  void add(int x, int y, bool on_border) {
    if (area == 0) left = right = top = bottom = {x, y};
    ++area;
    sum_x += x;
    sum_y += y;
    box.x_min = std::min(box.x_min, x);
    box.x_max = std::max(box.x_max, x);
    box.y_min = std::min(box.y_min, y);
    box.y_max = std::max(box.y_max, y);
    // Ties on the primary coordinate go to the smaller secondary coordinate.
    if (x < left.x || (x == left.x && y < left.y)) left = {x, y};
    if (x > right.x || (x == right.x && y < right.y)) right = {x, y};
    if (y < top.y || (y == top.y && x < top.x)) top = {x, y};
    if (y > bottom.y || (y == bottom.y && x < bottom.x)) bottom = {x, y};
    border = border || on_border;
  }
};

double distance(PixelPoint a, PixelPoint b) {
  const long long ddx = b.x - a.x;
  const long long ddy = b.y - a.y;
  return std::sqrt(static_cast<double>(ddx * ddx + ddy * ddy));
}

Accumulator scan_one(const LabelMask& mask, LabelMask::Label k) {
  if (k == 0) throw LookupError("label 0 is background");
  Accumulator acc;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == k) {
        acc.add(x, y,
                x == 0 || y == 0 || x == mask.width() - 1 || y == mask.height() - 1);
      }
    }
  }
  if (acc.area == 0) throw LookupError("label " + std::to_string(k) + " not in mask");
  return acc;
}

CellRecord to_record(LabelMask::Label k, const Accumulator& a,
                     std::optional<double> px_per_unit) {
  CellRecord r;
  r.label = k;
  r.area_px = a.area;
  r.centroid = {static_cast<double>(a.sum_x) / static_cast<double>(a.area),
                static_cast<double>(a.sum_y) / static_cast<double>(a.area)};
  r.bbox = a.box;
  r.size_x = a.box.size_x();
  r.size_y = a.box.size_y();
  r.dx = distance(a.left, a.right);
  r.dy = distance(a.top, a.bottom);
  r.touches_border = a.border;
  if (px_per_unit) {
    const double s = *px_per_unit;
    r.physical = PhysicalMeasures{static_cast<double>(a.area) / (s * s), r.dx / s, r.dy / s};
  }
  return r;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::size_t cell_area(const LabelMask& mask, LabelMask::Label k) {
  return scan_one(mask, k).area;
}

Centroid cell_centroid(const LabelMask& mask, LabelMask::Label k) {
  return to_record(k, scan_one(mask, k), std::nullopt).centroid;
}

BoundingBox cell_bbox(const LabelMask& mask, LabelMask::Label k) {
  return scan_one(mask, k).box;
}

Axes cell_axes(const LabelMask& mask, LabelMask::Label k) {
  const CellRecord r = to_record(k, scan_one(mask, k), std::nullopt);
  return {r.dx, r.dy};
}

std::vector<CellRecord> measure_all(const LabelMask& mask, std::optional<double> px_per_unit) {
  if (px_per_unit && !(*px_per_unit > 0.0)) {
    throw ValidationError("px_per_unit must be positive");
  }
  std::vector<Accumulator> acc(mask.n_cells() + 1);
  const int w = mask.width();
  const int h = mask.height();
  for (int y = 0; y < h; ++y) {
    const bool edge_row = y == 0 || y == h - 1;
    for (int x = 0; x < w; ++x) {
      const auto k = mask.at(x, y);
      if (k != 0) acc[k].add(x, y, edge_row || x == 0 || x == w - 1);
    }
  }
  std::vector<CellRecord> out;
  out.reserve(mask.n_cells());
  for (std::size_t k = 1; k < acc.size(); ++k) {
    out.push_back(to_record(static_cast<LabelMask::Label>(k), acc[k], px_per_unit));
  }
  return out;
}

std::string to_csv(const std::vector<CellRecord>& records) {
  const bool phys = !records.empty() &&
                    std::all_of(records.begin(), records.end(),
                                [](const CellRecord& r) { return r.physical.has_value(); });
  std::string out =
      "label,area_px,centroid_x,centroid_y,bbox_xmin,bbox_xmax,bbox_ymin,bbox_ymax,"
      "size_x,size_y,dx,dy,touches_border";
  if (phys) out += ",area_phys,dx_phys,dy_phys";
  out += "\n";
  for (const auto& r : records) {
    out += std::to_string(r.label) + "," + std::to_string(r.area_px) + "," +
           fmt6(r.centroid.x) + "," + fmt6(r.centroid.y) + "," + std::to_string(r.bbox.x_min) +
           "," + std::to_string(r.bbox.x_max) + "," + std::to_string(r.bbox.y_min) + "," +
           std::to_string(r.bbox.y_max) + "," + std::to_string(r.size_x) + "," +
           std::to_string(r.size_y) + "," + fmt6(r.dx) + "," + fmt6(r.dy) + "," +
           (r.touches_border ? "1" : "0");
    if (phys) {
      out += "," + fmt6(r.physical->area) + "," + fmt6(r.physical->dx) + "," +
             fmt6(r.physical->dy);
    }
    out += "\n";
  }
  return out;
}

}  // namespace foilmetric::features
