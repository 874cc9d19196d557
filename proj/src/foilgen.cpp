#include "foilmetric/foilgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "foilmetric/error.hpp"
#include "foilmetric/features.hpp"
#include "foilmetric/preproc.hpp"
#include "foilmetric/segment.hpp"

namespace foilmetric::foilgen {

void FoilSpec::validate() const {
  if (dx < 2 || dy < 2) throw ValidationError("dx and dy must be >= 2");
  if (width < dx || height < dy) throw ValidationError("image smaller than one lattice period");
  if (!(filter_sigma >= 0.0)) throw ValidationError("filter_sigma must be >= 0");
  if (!(noise_amplitude >= 0.0)) throw ValidationError("noise_amplitude must be >= 0");
  if (!(line_intensity >= 0.0 && line_intensity < 1.0)) {
    throw ValidationError("line_intensity must lie in [0,1)");
  }
}

namespace {

// CDF of U(-p,p) + U(-q,q): the projection of a unit pixel onto a line normal.
double footprint_cdf(double s, double p, double q) {
  auto H = [p](double t) {
    if (t <= 0.0) return 0.0;
    if (t < 2.0 * p) return 0.5 * t * t;
    return 2.0 * p * t - 2.0 * p * p;
  };
  return (H(s + p + q) - H(s + p - q)) / (4.0 * p * q);
}

// Area fraction of a pixel covered by a unit-width line whose centre lies at
// perpendicular distance d.
double line_coverage(double d, double p, double q) {
  return footprint_cdf(0.5 - d, p, q) - footprint_cdf(-0.5 - d, p, q);
}

}  // namespace

GrayImage render_lattice(const FoilSpec& spec) {
  spec.validate();
  // Cell centres sit at (i dx, j dy) and (i dx + dx/2, j dy + dy/2). In
  // normalized coordinates (x/dx, y/dy) the walls are the lines u+v and u-v
  // in 1/2 + Z.
  const double gx = 1.0 / spec.dx;
  const double gy = 1.0 / spec.dy;
  const double g = std::sqrt(gx * gx + gy * gy);
  const double p = 0.5 * gx / g;
  const double q = 0.5 * gy / g;
  const double depth = 1.0 - spec.line_intensity;

  GrayImage img(spec.width, spec.height, 1.0);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double u = x * gx;
      const double v = y * gy;
      double cover = 0.0;
      for (double s : {u + v, u - v}) {
        const double t = s - 0.5;
        const double d = std::abs(t - std::round(t)) / g;
        cover = std::max(cover, line_coverage(d, p, q));
      }
      img.at(x, y) = 1.0 - depth * cover;
    }
  }
  return img;
}

double truth_threshold(const FoilSpec& spec) { return 0.5 * (1.0 + spec.line_intensity); }

Foil generate_foil(const FoilSpec& spec) {
  spec.validate();
  const GrayImage lattice = render_lattice(spec);

  BinaryImage interior = preproc::binarize(lattice, truth_threshold(spec));
  GroundTruth truth;
  truth.mask = segment::label_components(interior, 4);
  truth.lattice_dx = spec.dx;
  truth.lattice_dy = spec.dy;

  double sum_dx = 0.0;
  double sum_dy = 0.0;
  for (const auto& rec : features::measure_all(truth.mask)) {
    if (rec.touches_border) continue;
    ++truth.n_complete_cells;
    sum_dx += rec.dx;
    sum_dy += rec.dy;
  }
  if (truth.n_complete_cells < 4) {
    throw GenerationError("lattice dx=" + std::to_string(spec.dx) + " dy=" +
                          std::to_string(spec.dy) + " leaves only " +
                          std::to_string(truth.n_complete_cells) + " complete cells in a " +
                          std::to_string(spec.width) + "x" + std::to_string(spec.height) +
                          " image");
  }
  truth.true_dx = sum_dx / static_cast<double>(truth.n_complete_cells);
  truth.true_dy = sum_dy / static_cast<double>(truth.n_complete_cells);

  GrayImage image = preproc::gaussian_smooth(lattice, spec.filter_sigma);
  if (spec.noise_amplitude > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_amplitude);
    for (double& v : image.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  }
  return {std::move(image), std::move(truth)};
}

nlohmann::ordered_json truth_to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["true_dx"] = truth.true_dx;
  j["true_dy"] = truth.true_dy;
  j["lattice_dx"] = truth.lattice_dx;
  j["lattice_dy"] = truth.lattice_dy;
  j["n_complete_cells"] = truth.n_complete_cells;
  return j;
}

GroundTruth truth_from_json(const nlohmann::ordered_json& j) {
  try {
    GroundTruth t;
    t.true_dx = j.at("true_dx").get<double>();
    t.true_dy = j.at("true_dy").get<double>();
    t.lattice_dx = j.value("lattice_dx", 0);
    t.lattice_dy = j.value("lattice_dy", 0);
    t.n_complete_cells = j.value("n_complete_cells", std::size_t{0});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid ground-truth record: ") + e.what());
  }
}

}  // namespace foilmetric::foilgen
