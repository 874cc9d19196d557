#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's measurement or statistics code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "foilmetric/features.hpp"
#include "foilmetric/image.hpp"

namespace oracle {

using foilmetric::BinaryImage;
using foilmetric::GrayImage;
using foilmetric::LabelMask;

// Random label mask: overlapping rectangles of random labels plus scattered
// single pixels. Labels are canonicalized by LabelMask::from_raw.
inline LabelMask random_mask(std::mt19937_64& rng, int w, int h, int max_label = 12) {
  std::vector<LabelMask::Label> raw(static_cast<std::size_t>(w) * h, 0);
  std::uniform_int_distribution<int> lab(1, max_label);
  std::uniform_int_distribution<int> rx(0, w - 1), ry(0, h - 1);
  std::uniform_int_distribution<int> n_rect(3, 15);
  const int rects = n_rect(rng);
  for (int r = 0; r < rects; ++r) {
    int x0 = rx(rng), x1 = rx(rng), y0 = ry(rng), y1 = ry(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const auto k = static_cast<LabelMask::Label>(lab(rng) * 37);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) raw[static_cast<std::size_t>(y) * w + x] = k;
  }
  std::uniform_int_distribution<int> n_dots(0, 40);
  const int dots = n_dots(rng);
  for (int d = 0; d < dots; ++d) {
    const int x = rx(rng), y = ry(rng);
    raw[static_cast<std::size_t>(y) * w + x] = static_cast<LabelMask::Label>(lab(rng) * 37);
  }
  return LabelMask::from_raw(w, h, std::move(raw));
}

struct RescanRecord {
  std::size_t area = 0;
  double cx = 0.0, cy = 0.0;
  int x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  double dx = 0.0, dy = 0.0;
  bool touches_border = false;
};

// One full rescan of the mask per label.
inline RescanRecord rescan(const LabelMask& m, LabelMask::Label k) {
  RescanRecord r;
  long long sx = 0, sy = 0;
  int lx = 0, ly = 0, rxx = 0, ryy = 0, tx = 0, ty = 0, bx = 0, by = 0;
  bool first = true;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y) != k) continue;
      ++r.area;
      sx += x;
      sy += y;
      if (x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1) r.touches_border = true;
      if (first) {
        r.x_min = r.x_max = x;
        r.y_min = r.y_max = y;
        lx = rxx = tx = bx = x;
        ly = ryy = ty = by = y;
        first = false;
        continue;
      }
      r.x_min = std::min(r.x_min, x);
      r.x_max = std::max(r.x_max, x);
      r.y_min = std::min(r.y_min, y);
      r.y_max = std::max(r.y_max, y);
      // leftmost / rightmost: ties to the smaller y; top / bottom: ties to the smaller x
      if (x < lx || (x == lx && y < ly)) lx = x, ly = y;
      if (x > rxx || (x == rxx && y < ryy)) rxx = x, ryy = y;
      if (y < ty || (y == ty && x < tx)) tx = x, ty = y;
      if (y > by || (y == by && x < bx)) bx = x, by = y;
    }
  }
  r.cx = static_cast<double>(sx) / static_cast<double>(r.area);
  r.cy = static_cast<double>(sy) / static_cast<double>(r.area);
  const long long ddx = rxx - lx, ddy = ryy - ly;
  const long long tdx = bx - tx, tdy = by - ty;
  r.dx = std::sqrt(static_cast<double>(ddx * ddx + ddy * ddy));
  r.dy = std::sqrt(static_cast<double>(tdx * tdx + tdy * tdy));
  return r;
}

// Brute-force Euclidean distance to the nearest unset pixel.
inline std::vector<double> brute_edt(const BinaryImage& fg) {
  std::vector<double> out(fg.data.size(), 0.0);
  for (int y = 0; y < fg.height; ++y) {
    for (int x = 0; x < fg.width; ++x) {
      if (!fg.at(x, y)) continue;
      long long best = std::numeric_limits<long long>::max();
      for (int v = 0; v < fg.height; ++v)
        for (int u = 0; u < fg.width; ++u)
          if (!fg.at(u, v)) {
            const long long d = 1LL * (u - x) * (u - x) + 1LL * (v - y) * (v - y);
            best = std::min(best, d);
          }
      out[static_cast<std::size_t>(y) * fg.width + x] =
          best == std::numeric_limits<long long>::max() ? -1.0 : std::sqrt(double(best));
    }
  }
  return out;
}

// lnGamma by upward recurrence to x >= 10, then the Stirling series.
inline double ln_gamma(double x) {
  double shift = 0.0;
  while (x < 10.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double x2 = x * x;
  const double series = 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x2 * x2 * x) -
                        1.0 / (1680.0 * x2 * x2 * x2 * x);
  return shift + (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

inline std::vector<std::size_t> counts_by_edges(const std::vector<double>& data, int m) {
  const double lo = *std::min_element(data.begin(), data.end());
  const double hi = *std::max_element(data.begin(), data.end());
  std::vector<std::size_t> c(static_cast<std::size_t>(m), 0);
  for (double x : data) {
    int j = 0;
    while (j + 1 < m && x >= lo + (hi - lo) * (j + 1) / m) ++j;
    ++c[static_cast<std::size_t>(j)];
  }
  return c;
}

inline double knuth_F(const std::vector<double>& data, int m) {
  const auto c = counts_by_edges(data, m);
  const double n = static_cast<double>(data.size());
  double f = n * std::log(double(m)) + ln_gamma(0.5 * m) - m * ln_gamma(0.5) - ln_gamma(n + 0.5 * m);
  for (auto nj : c) f += ln_gamma(double(nj) + 0.5);
  return f;
}

// Direct KDE summation at one point.
inline double kde_at(const std::vector<double>& data, double h, double x) {
  double s = 0.0;
  for (double xi : data) {
    const double z = (x - xi) / h;
    s += std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  }
  return s / (static_cast<double>(data.size()) * h);
}

// Half-sample symmetric reflection into [0, n).
inline int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Full 2-D truncated Gaussian sum at (x, y), radius ceil(3 sigma).
inline double gauss2d_at(const GrayImage& img, double sigma, int x, int y) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  double wsum = 0.0, acc = 0.0;
  for (int v = -r; v <= r; ++v) {
    for (int u = -r; u <= r; ++u) {
      const double w = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
      wsum += w;
      acc += w * img.at(reflect(x + u, img.width()), reflect(y + v, img.height()));
    }
  }
  return acc / wsum;
}

// Random smooth field: sum of a few random Gaussian bumps and a plane.
inline GrayImage smooth_field(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  GrayImage img(w, h, 0.0);
  const int bumps = 3 + static_cast<int>(U(rng) * 5);
  struct B { double x, y, s, a; };
  std::vector<B> bs;
  for (int i = 0; i < bumps; ++i) bs.push_back({U(rng) * w, U(rng) * h, 2.0 + U(rng) * 8.0, U(rng) * 2 - 1});
  const double px = U(rng) * 0.02, py = U(rng) * 0.02;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = px * x + py * y;
      for (const auto& b : bs)
        v += b.a * std::exp(-((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (2 * b.s * b.s));
      img.at(x, y) = v;
    }
  return img;
}

}  // namespace oracle
