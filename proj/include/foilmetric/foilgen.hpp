#pragma once

#include <cstdint>

#include <json.hpp>

#include "foilmetric/image.hpp"

namespace foilmetric::foilgen {

/// Parameters of a synthetic rhombus-lattice foil. Lengths are in pixels.
struct FoilSpec {
  int dy = 50;  // vertical cell diagonal (lattice period in y)
  int dx = 50;  // horizontal cell diagonal (lattice period in x)
  double filter_sigma = 1.5;
  int width = 500;
  int height = 500;
  double line_intensity = 0.1;
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError.
  void validate() const;
};

struct GroundTruth {
  /// Interiors of the undiffused lattice, 4-connected, including border-clipped
  /// cells.
  LabelMask mask;
  /// Mean extreme-point spans of the complete (non-clipped) truth cells. For
  /// even lattice periods every complete cell is congruent, so each one
  /// measures exactly these values.
  double true_dx = 0.0;
  double true_dy = 0.0;
  /// Nominal lattice periods.
  int lattice_dx = 0;
  int lattice_dy = 0;
  std::size_t n_complete_cells = 0;
};

struct Foil {
  GrayImage image;
  GroundTruth truth;
};

/// Staggered diamond lattice of dark, 1-pixel, anti-aliased lines on a white
/// background, Gaussian-filtered by filter_sigma, plus clamped additive
/// Gaussian noise. Deterministic in the spec. Throws GenerationError when
/// fewer than 4 complete cells fit.
Foil generate_foil(const FoilSpec& spec);

/// The lattice with no filtering and no noise.
GrayImage render_lattice(const FoilSpec& spec);

/// Intensity halfway between the line and the background; binarizing the
/// undiffused render at this level yields the truth boundaries.
double truth_threshold(const FoilSpec& spec);

/// Sidecar payload describing the truth lattice (stored under
/// "ground_truth" next to the mask metadata).
nlohmann::ordered_json truth_to_json(const GroundTruth& truth);
/// Fills everything except the mask. Throws FormatError.
GroundTruth truth_from_json(const nlohmann::ordered_json& j);

}  // namespace foilmetric::foilgen
