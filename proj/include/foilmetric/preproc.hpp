#pragma once

#include <optional>
#include <string>

#include "foilmetric/image.hpp"

namespace foilmetric::preproc {

enum class DilationDirection { NorthSouth, EastWest, Isotropic };

std::string to_string(DilationDirection d);
/// Accepts "north-south", "east-west", "isotropic". Throws ValidationError.
DilationDirection parse_dilation_direction(const std::string& s);

struct PreprocConfig {
  /// 0 disables smoothing.
  double gauss_sigma = 0.0;
  /// Enables the gradient -> bias -> non-maximum-suppression stage.
  bool gradients = false;
  double alpha = 1.0;  // weight on Gy
  double beta = 1.0;   // weight on Gx
  /// Two-pass mode: the positive (north) and negative (south) halves of the
  /// bias field are suppressed separately, only the north pass is dilated,
  /// and the passes are merged by pointwise maximum.
  bool split_polarity = false;
  int dilation_iterations = 0;
  DilationDirection dilation_direction = DilationDirection::Isotropic;
  int overlay_n = 1;
  /// nullopt means Otsu.
  std::optional<double> binarize_threshold;

  /// Throws ValidationError.
  void validate() const;
};

/// Truncated (radius ceil(3 sigma)) separable Gaussian with half-sample
/// symmetric reflection at the borders. sigma == 0 returns the input.
GrayImage gaussian_smooth(const GrayImage& img, double sigma);

/// Normalized 1-D Gaussian taps, index 0 is the centre. Exposed for tests.
std::vector<double> gaussian_kernel_1d(double sigma);

struct Gradients {
  GrayImage gx;
  GrayImage gy;
};

/// Central differences I(x+1)-I(x-1) without the 1/2 factor. Border pixels
/// use a one-sided difference scaled by 2 so a linear ramp has a constant
/// gradient. Requires at least 3x3.
Gradients directional_gradients(const GrayImage& img);

/// alpha * gy + beta * gx.
GrayImage bias_combine(const GrayImage& gx, const GrayImage& gy, double alpha, double beta);

/// Gradient angle quantized into 4 sectors (0, 45, 90, 135 degrees) -> 0..3.
int gradient_sector(double gx, double gy);

/// Keeps |bias| where it is a local maximum along the quantized gradient
/// direction taken from (gx, gy), 0 elsewhere. The forward neighbour must be
/// strictly smaller and the backward one no larger, so plateaus thin to a
/// single pixel. Off-image neighbours replicate the nearest edge pixel.
GrayImage non_max_suppress(const GrayImage& bias, const GrayImage& gx, const GrayImage& gy);

/// Pointwise n * edge saturated at 1.
GrayImage enhance_overlay(const GrayImage& edge, int n);

/// Grayscale dilation by a 3x1, 1x3 or 3x3 element, repeated `iterations` times.
GrayImage dilate(const GrayImage& img, int iterations, DilationDirection direction);
/// Grayscale erosion, the dual of dilate.
GrayImage erode(const GrayImage& img, int iterations, DilationDirection direction);

/// Otsu threshold over a 256-bin histogram spanning [min, max]. Returns the
/// upper edge of the background class in intensity units.
double otsu_threshold(const GrayImage& img);

/// value > threshold (or value <= threshold when `below` is set).
BinaryImage binarize(const GrayImage& img, double threshold, bool below = false);

/// smooth -> gradients -> bias -> NMS -> dilate -> overlay; each stage is
/// skipped when disabled in the config.
GrayImage preprocess(const GrayImage& img, const PreprocConfig& config);

}  // namespace foilmetric::preproc
