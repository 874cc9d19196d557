#include "foilmetric/preproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "foilmetric/error.hpp"

namespace foilmetric::preproc {

std::string to_string(DilationDirection d) {
  switch (d) {
    case DilationDirection::NorthSouth: return "north-south";
    case DilationDirection::EastWest: return "east-west";
    case DilationDirection::Isotropic: return "isotropic";
  }
  return "isotropic";
}

DilationDirection parse_dilation_direction(const std::string& s) {
  if (s == "north-south" || s == "ns") return DilationDirection::NorthSouth;
  if (s == "east-west" || s == "ew") return DilationDirection::EastWest;
  if (s == "isotropic" || s == "iso") return DilationDirection::Isotropic;
  throw ValidationError("unknown dilation direction '" + s + "'");
}

void PreprocConfig::validate() const {
  if (!(gauss_sigma >= 0.0) || !std::isfinite(gauss_sigma)) {
    throw ValidationError("gauss_sigma must be >= 0");
  }
  if (overlay_n < 1) throw ValidationError("overlay_n must be >= 1");
  if (alpha == 0.0 && beta == 0.0) throw ValidationError("alpha and beta cannot both be 0");
  if (dilation_iterations < 0) throw ValidationError("dilation_iterations must be >= 0");
  if (binarize_threshold && !(*binarize_threshold >= 0.0 && *binarize_threshold <= 1.0)) {
    throw ValidationError("binarize_threshold must lie in [0,1]");
  }
}

namespace {

// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

constexpr std::array<std::array<int, 2>, 4> kSectorStep = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

}  // namespace

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int i = 0; i <= radius; ++i) {
    taps[i] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += (i == 0 ? 1.0 : 2.0) * taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

GrayImage gaussian_smooth(const GrayImage& img, double sigma) {
  if (sigma < 0.0) throw ValidationError("sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto taps = gaussian_kernel_1d(sigma);
  const int radius = static_cast<int>(taps.size()) - 1;
  const int w = img.width();
  const int h = img.height();

  GrayImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = taps[0] * img.at(x, y);
      for (int k = 1; k <= radius; ++k) {
        acc += taps[k] * (img.at(reflect(x - k, w), y) + img.at(reflect(x + k, w), y));
      }
      tmp.at(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = taps[0] * tmp.at(x, y);
      for (int k = 1; k <= radius; ++k) {
        acc += taps[k] * (tmp.at(x, reflect(y - k, h)) + tmp.at(x, reflect(y + k, h)));
      }
      out.at(x, y) = acc;
    }
  }
  // Rounding can push a constant image one ulp outside its range.
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  for (double& v : out.data()) v = std::clamp(v, *lo, *hi);
  return out;
}

Gradients directional_gradients(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw SizeError("gradients need an image of at least 3x3");
  Gradients g{GrayImage(w, h), GrayImage(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0) {
        g.gx.at(x, y) = 2.0 * (img.at(1, y) - img.at(0, y));
      } else if (x == w - 1) {
        g.gx.at(x, y) = 2.0 * (img.at(w - 1, y) - img.at(w - 2, y));
      } else {
        g.gx.at(x, y) = img.at(x + 1, y) - img.at(x - 1, y);
      }
      if (y == 0) {
        g.gy.at(x, y) = 2.0 * (img.at(x, 1) - img.at(x, 0));
      } else if (y == h - 1) {
        g.gy.at(x, y) = 2.0 * (img.at(x, h - 1) - img.at(x, h - 2));
      } else {
        g.gy.at(x, y) = img.at(x, y + 1) - img.at(x, y - 1);
      }
    }
  }
  return g;
}

GrayImage bias_combine(const GrayImage& gx, const GrayImage& gy, double alpha, double beta) {
  if (!gx.same_shape(gy)) throw SizeError("gradient fields differ in size");
  GrayImage out(gx.width(), gx.height());
  auto ox = gx.data();
  auto oy = gy.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * oy[i] + beta * ox[i];
  return out;
}

int gradient_sector(double gx, double gy) {
  double deg = std::atan2(gy, gx) * (180.0 / 3.14159265358979323846);
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 1;
  if (deg < 112.5) return 2;
  return 3;
}

GrayImage non_max_suppress(const GrayImage& bias, const GrayImage& gx, const GrayImage& gy) {
  if (!bias.same_shape(gx) || !bias.same_shape(gy)) {
    throw SizeError("NMS inputs differ in size");
  }
  const int w = bias.width();
  const int h = bias.height();
  GrayImage out(w, h);
  auto mag = [&](int x, int y) {
    return std::abs(bias.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = std::abs(bias.at(x, y));
      if (m == 0.0) continue;
      const auto [sx, sy] = kSectorStep[gradient_sector(gx.at(x, y), gy.at(x, y))];
      const double fwd = mag(x + sx, y + sy);
      const double bwd = mag(x - sx, y - sy);
      // Off-image neighbours clamp to the pixel itself; treat those as ties.
      const bool fwd_self = !bias.contains(x + sx, y + sy);
      if ((m > fwd || (fwd_self && m >= fwd)) && m >= bwd) out.at(x, y) = m;
    }
  }
  return out;
}

GrayImage enhance_overlay(const GrayImage& edge, int n) {
  if (n < 1) throw ValidationError("overlay count must be >= 1");
  GrayImage out = edge;
  if (n == 1) return out;
  for (double& v : out.data()) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += v;
    v = std::min(acc, 1.0);
  }
  return out;
}

namespace {

template <typename Pick>
GrayImage morph(const GrayImage& img, int iterations, DilationDirection direction, Pick pick) {
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  const int rx = direction == DilationDirection::NorthSouth ? 0 : 1;
  const int ry = direction == DilationDirection::EastWest ? 0 : 1;
  const int w = img.width();
  const int h = img.height();
  GrayImage cur = img;
  for (int it = 0; it < iterations; ++it) {
    GrayImage next(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = cur.at(x, y);
        for (int dy = -ry; dy <= ry; ++dy) {
          for (int dx = -rx; dx <= rx; ++dx) {
            if (cur.contains(x + dx, y + dy)) v = pick(v, cur.at(x + dx, y + dy));
          }
        }
        next.at(x, y) = v;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

GrayImage dilate(const GrayImage& img, int iterations, DilationDirection direction) {
  return morph(img, iterations, direction, [](double a, double b) { return std::max(a, b); });
}

GrayImage erode(const GrayImage& img, int iterations, DilationDirection direction) {
  return morph(img, iterations, direction, [](double a, double b) { return std::min(a, b); });
}

double otsu_threshold(const GrayImage& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.data().begin(), img.data().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi - lo <= 0.0) return lo;
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  const double scale = kBins / (hi - lo);
  for (double v : img.data()) {
    int b = static_cast<int>((v - lo) * scale);
    hist[std::clamp(b, 0, kBins - 1)] += 1.0;
  }
  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int i = 0; i < kBins; ++i) sum_all += i * hist[i];

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_k = 0;
  for (int k = 0; k < kBins - 1; ++k) {
    w0 += hist[k];
    sum0 += k * hist[k];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return lo + (best_k + 1) / scale;
}

BinaryImage binarize(const GrayImage& img, double threshold, bool below) {
  BinaryImage out(img.width(), img.height());
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    out.data[i] = below ? (src[i] <= threshold) : (src[i] > threshold);
  }
  return out;
}

GrayImage preprocess(const GrayImage& img, const PreprocConfig& config) {
  config.validate();
  GrayImage cur = gaussian_smooth(img, config.gauss_sigma);
  if (config.gradients) {
    Gradients g = directional_gradients(cur);
    GrayImage bias = bias_combine(g.gx, g.gy, config.alpha, config.beta);
    if (config.split_polarity) {
      GrayImage north = bias;
      GrayImage south = bias;
      for (double& v : north.data()) v = std::max(v, 0.0);
      for (double& v : south.data()) v = std::max(-v, 0.0);
      north = dilate(non_max_suppress(north, g.gx, g.gy), config.dilation_iterations,
                     config.dilation_direction);
      south = non_max_suppress(south, g.gx, g.gy);
      cur = GrayImage(img.width(), img.height());
      auto o = cur.data();
      auto n = north.data();
      auto s = south.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::max(n[i], s[i]);
    } else {
      cur = dilate(non_max_suppress(bias, g.gx, g.gy), config.dilation_iterations,
                   config.dilation_direction);
    }
  } else {
    cur = dilate(cur, config.dilation_iterations, config.dilation_direction);
  }
  return enhance_overlay(cur, config.overlay_n);
}

}  // namespace foilmetric::preproc
