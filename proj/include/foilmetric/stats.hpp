#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "foilmetric/features.hpp"
#include "foilmetric/foilgen.hpp"
#include "foilmetric/image.hpp"

namespace foilmetric::stats {

// ---------------------------------------------------------------------------
// Sampling

struct Sample {
  std::vector<LabelMask::Label> labels;  // ascending
  double mean_dx = 0.0;
  double mean_dy = 0.0;
  /// Set when fewer than k records were available and all were used.
  bool used_all = false;
};

/// Uniform sampling without replacement, keyed on the label set so the
/// result does not depend on record order. Throws InsufficientCellsError on
/// empty input.
Sample sample_cells(std::span<const features::CellRecord> records, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Transects

enum class Orientation { Vertical, Horizontal };

std::string to_string(Orientation o);
Orientation parse_orientation(const std::string& s);

struct TransectLine {
  /// Column (vertical lines) or row (horizontal lines).
  int position = 0;
  std::vector<LabelMask::Label> labels;  // ascending
  std::vector<features::Centroid> markers;
};

struct TransectSelection {
  Orientation orientation = Orientation::Vertical;
  std::vector<TransectLine> lines;
};

/// Lines at round(extent * (i+1) / (n_lines+1)). A cell belongs to a line
/// when any of its pixels lies on it.
TransectSelection transect_select(const LabelMask& mask,
                                  std::span<const features::CellRecord> records, int n_lines,
                                  Orientation orientation = Orientation::Vertical);

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  std::vector<double> edges;        // m + 1, increasing
  std::vector<std::size_t> counts;  // m
  std::size_t n = 0;
};

/// m equal-width bins over [min, max]; the maximum falls in the last bin.
Histogram equal_width_histogram(std::span<const double> data, int m);

/// Knuth's marginal log-posterior for m equal-width bins:
///   n ln m + lnG(m/2) - m lnG(1/2) - lnG(n + m/2) + sum_j lnG(n_j + 1/2)
double knuth_log_posterior(std::span<const double> data, int m);

/// min(ceil(4 sqrt(n)), 200).
int knuth_max_bins(std::size_t n);

struct KnuthResult {
  int bins = 0;
  Histogram histogram;
  /// log_posterior[m-1] = F(m) for every searched m; bins is its argmax
  /// (smallest m on ties).
  std::vector<double> log_posterior;
};

/// Throws DegenerateDataError when fewer than two distinct values exist.
KnuthResult knuth_bin_count(std::span<const double> data);

// ---------------------------------------------------------------------------
// Kernel density

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd when the IQR is zero.
/// Throws DegenerateDataError for n < 2 or zero spread.
double silverman_bandwidth(std::span<const double> data);

KdeCurve gaussian_kde(std::span<const double> data, std::span<const double> grid);
/// Evenly spaced grid over [min - 3h, max + 3h].
KdeCurve gaussian_kde(std::span<const double> data, int grid_points = 512);

/// Trapezoid rule over the curve's own grid.
double trapezoid_integral(const KdeCurve& curve);

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluationVerdict {
  double mean_dx = 0.0;
  double mean_dy = 0.0;
  double true_dx = 0.0;
  double true_dy = 0.0;
  double rel_err_dx = 0.0;
  double rel_err_dy = 0.0;
  std::size_t n_matched = 0;
  bool success = false;
  std::string reason;
};

struct EvalOptions {
  double threshold = 0.10;
  int k_sample = 10;
  std::uint64_t seed = 0;
  std::size_t min_cells = 4;
};

/// Pure verdict arithmetic: relative errors, the threshold test and the
/// minimum cell count.
EvaluationVerdict make_verdict(double mean_dx, double mean_dy, double true_dx, double true_dy,
                               std::size_t n_matched, double threshold = 0.10,
                               std::size_t min_cells = 4);

/// Drops border-touching predictions, samples k of the rest and compares the
/// sample means against the truth spans.
EvaluationVerdict evaluate(std::span<const features::CellRecord> predicted, double true_dx,
                           double true_dy, const EvalOptions& options = {});
EvaluationVerdict evaluate(std::span<const features::CellRecord> predicted,
                           const foilgen::GroundTruth& truth, const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Per-transect report

struct QuantityStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  Histogram histogram;
  std::optional<KdeCurve> kde;
  /// Non-empty when the histogram/KDE could not be fitted (e.g. all values equal).
  std::string note;
};

struct LineReport {
  int position = 0;
  std::size_t n_cells = 0;
  /// Lines with fewer than two cells carry no statistics.
  bool flagged = false;
  std::string note;
  QuantityStats area;
  QuantityStats dx;
  QuantityStats dy;
};

struct StatsReport {
  Orientation orientation = Orientation::Vertical;
  std::vector<LineReport> lines;
};

StatsReport transect_report(const TransectSelection& selection,
                            std::span<const features::CellRecord> records);

nlohmann::ordered_json to_json(const StatsReport& report);
nlohmann::ordered_json to_json(const EvaluationVerdict& verdict);

}  // namespace foilmetric::stats
