#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "foilmetric/image.hpp"
#include "foilmetric/image_io.hpp"
#include "foilmetric/preproc.hpp"

namespace foilmetric::segment {

enum class Polarity {
  Auto,    // bright boundaries when the gradient stage runs, dark otherwise
  Dark,    // boundaries darker than the cell interiors (raw soot-foil rendering)
  Bright,  // boundaries brighter (edge maps)
};

std::string to_string(Polarity p);
Polarity parse_polarity(const std::string& s);

inline preproc::PreprocConfig default_preproc() {
  preproc::PreprocConfig c;
  c.gauss_sigma = 1.0;
  return c;
}

struct NativeSegConfig {
  preproc::PreprocConfig preproc = default_preproc();
  Polarity polarity = Polarity::Auto;
  int closing_iterations = 1;
  int connectivity = 4;
  int min_area_px = 20;
  /// Cells reclaim boundary pixels up to this many 4-connected steps away.
  int grow_px = 4;
  bool exclude_border_cells = false;
  bool watershed_split = false;
  double watershed_min_peak_separation = 5.0;

  /// Throws ValidationError.
  void validate() const;
};

/// Connected components of the set pixels, labelled in first-pixel scan order.
LabelMask label_components(const BinaryImage& foreground, int connectivity);

/// Binary closing with a 3x3 element: dilate `iterations` times, then erode
/// the same number of times. Off-image pixels are ignored by both passes.
BinaryImage binary_close(const BinaryImage& img, int iterations);

/// Removes cells with fewer than `min_area` pixels and relabels.
LabelMask remove_small_cells(const LabelMask& mask, int min_area);

/// Assigns unlabelled pixels to the cell reachable in the fewest 4-connected
/// steps through unlabelled pixels, up to `steps`. Ties go to the cell whose
/// front arrived first in scan order. Existing labels are never changed.
LabelMask grow_labels(const LabelMask& mask, int steps);

/// Removes cells with at least one pixel on the image boundary and relabels.
LabelMask remove_border_cells(const LabelMask& mask);

/// Exact Euclidean distance from every set pixel to the nearest unset pixel
/// (0 on unset pixels). Pixels beyond the image edge do not count as unset.
/// With no unset pixel at all, every value is width + height.
GrayImage distance_transform(const BinaryImage& foreground);

struct Peak {
  int x = 0;
  int y = 0;
  double value = 0.0;
};

/// Local maxima of `field` inside `support`: a pixel qualifies when it equals
/// the maximum over the (2r+1)^2 window, r = ceil(min_separation). Candidates
/// are then taken greedily by (value desc, scan order) and kept only when at
/// least `min_separation` away from every peak already kept.
std::vector<Peak> find_peaks(const GrayImage& field, const BinaryImage& support,
                             double min_separation);

/// Splits each cell holding two or more distance-transform peaks by
/// marker-based flooding of the inverted distance map.
LabelMask watershed_split(const LabelMask& mask, double min_peak_separation);

/// preprocess -> binarize -> closing -> interiors -> components -> area
/// filter -> growth -> optional watershed -> optional border exclusion.
LabelMask native_segment(const GrayImage& img, const NativeSegConfig& config);

struct SegmentResult {
  LabelMask mask;
  MaskMetadata meta;
};

/// The segmentation-model plug point. Implementations must be deterministic
/// and callable concurrently on distinct images. `run` fills at least
/// mask and meta.backend_name; segment() completes the remaining metadata.
class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual std::string name() const = 0;
  virtual SegmentResult run(const GrayImage& img) const = 0;
};

class NativeBackend final : public SegmentationBackend {
 public:
  explicit NativeBackend(NativeSegConfig config = {});
  std::string name() const override { return "native"; }
  SegmentResult run(const GrayImage& img) const override;
  const NativeSegConfig& config() const { return config_; }

 private:
  NativeSegConfig config_;
};

/// Reads a mask produced by an external tool (e.g. a pretrained model
/// bridge). The reported backend name is the one recorded in the sidecar.
class ExternalMaskBackend final : public SegmentationBackend {
 public:
  explicit ExternalMaskBackend(std::filesystem::path mask_path);
  std::string name() const override { return "external"; }
  SegmentResult run(const GrayImage& img) const override;

 private:
  std::filesystem::path path_;
};

/// Returns a fixed mask, e.g. a generator's ground truth.
class FixedMaskBackend final : public SegmentationBackend {
 public:
  FixedMaskBackend(LabelMask mask, std::string name = "fixed");
  std::string name() const override { return name_; }
  SegmentResult run(const GrayImage& img) const override;

 private:
  LabelMask mask_;
  std::string name_;
};

/// Runs a backend and checks its output. Any backend failure surfaces as
/// SegmentationError carrying the backend's diagnostic.
SegmentResult segment(const GrayImage& img, const SegmentationBackend& backend,
                      const std::string& source_image = {});

/// Loads an exchange mask and checks it against the expected image size.
MaskFile ingest_external_mask(const std::filesystem::path& path, int expected_width,
                              int expected_height);

struct InstanceMatch {
  LabelMask::Label pred = 0;
  LabelMask::Label truth = 0;
  double iou = 0.0;
};

/// Greedy one-to-one matching by descending IoU, keeping pairs with
/// IoU >= min_iou. Ties break on (pred, truth) label order.
std::vector<InstanceMatch> match_instances(const LabelMask& pred, const LabelMask& truth,
                                           double min_iou = 0.5);

}  // namespace foilmetric::segment
