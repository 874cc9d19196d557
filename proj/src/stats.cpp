#include "foilmetric/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "foilmetric/error.hpp"

namespace foilmetric::stats {

using features::CellRecord;

Sample sample_cells(std::span<const CellRecord> records, int k, std::uint64_t seed) {
  if (records.empty()) throw InsufficientCellsError("no cells to sample");
  if (k < 1) throw ValidationError("sample size must be >= 1");

  std::vector<const CellRecord*> pool;
  pool.reserve(records.size());
  for (const auto& r : records) pool.push_back(&r);
  std::sort(pool.begin(), pool.end(),
            [](const CellRecord* a, const CellRecord* b) { return a->label < b->label; });

  Sample out;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
  out.used_all = static_cast<std::size_t>(k) > pool.size();

  // Partial Fisher-Yates over the label-sorted pool.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end(),
            [](const CellRecord* a, const CellRecord* b) { return a->label < b->label; });

  double sx = 0.0;
  double sy = 0.0;
  for (const CellRecord* r : pool) {
    out.labels.push_back(r->label);
    sx += r->dx;
    sy += r->dy;
  }
  out.mean_dx = sx / static_cast<double>(take);
  out.mean_dy = sy / static_cast<double>(take);
  return out;
}

std::string to_string(Orientation o) {
  return o == Orientation::Vertical ? "vertical" : "horizontal";
}

Orientation parse_orientation(const std::string& s) {
  if (s == "vertical") return Orientation::Vertical;
  if (s == "horizontal") return Orientation::Horizontal;
  throw ValidationError("unknown transect orientation '" + s + "'");
}

TransectSelection transect_select(const LabelMask& mask, std::span<const CellRecord> records,
                                  int n_lines, Orientation orientation) {
  if (n_lines < 1) throw ValidationError("n_lines must be >= 1");
  const bool vertical = orientation == Orientation::Vertical;
  const int extent = vertical ? mask.width() : mask.height();
  const int span = vertical ? mask.height() : mask.width();

  std::map<LabelMask::Label, const CellRecord*> by_label;
  for (const auto& r : records) by_label[r.label] = &r;

  TransectSelection sel;
  sel.orientation = orientation;
  int previous = -1;
  for (int i = 0; i < n_lines; ++i) {
    int pos = static_cast<int>(
        std::lround(static_cast<double>(extent) * (i + 1) / static_cast<double>(n_lines + 1)));
    pos = std::clamp(pos, 0, extent - 1);
    if (pos <= previous) {
      throw ValidationError("too many transect lines for an extent of " +
                            std::to_string(extent) + " pixels");
    }
    previous = pos;

    TransectLine line;
    line.position = pos;
    std::vector<bool> seen(mask.n_cells() + 1, false);
    for (int t = 0; t < span; ++t) {
      const auto k = vertical ? mask.at(pos, t) : mask.at(t, pos);
      if (k != 0) seen[k] = true;
    }
    for (std::size_t k = 1; k < seen.size(); ++k) {
      if (!seen[k]) continue;
      auto it = by_label.find(static_cast<LabelMask::Label>(k));
      if (it == by_label.end()) continue;  // filtered out upstream
      line.labels.push_back(static_cast<LabelMask::Label>(k));
      line.markers.push_back(it->second->centroid);
    }
    sel.lines.push_back(std::move(line));
  }
  return sel;
}

namespace {

std::pair<double, double> data_range(std::span<const double> data) {
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  return {*lo, *hi};
}

std::vector<std::size_t> bin_counts(std::span<const double> data, int m, double lo, double hi) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
  const double span = hi - lo;
  for (double x : data) {
    int b = span > 0.0 ? static_cast<int>((x - lo) / span * m) : 0;
    ++counts[static_cast<std::size_t>(std::clamp(b, 0, m - 1))];
  }
  return counts;
}

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double mean_of(std::span<const double> data) {
  return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
}

double stddev_of(std::span<const double> data) {
  if (data.size() < 2) return 0.0;
  const double m = mean_of(data);
  double ss = 0.0;
  for (double x : data) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(data.size() - 1));
}

}  // namespace

Histogram equal_width_histogram(std::span<const double> data, int m) {
  if (data.empty()) throw DegenerateDataError("histogram of empty data");
  if (m < 1) throw ValidationError("bin count must be >= 1");
  const auto [lo, hi] = data_range(data);
  Histogram h;
  h.n = data.size();
  h.counts = bin_counts(data, m, lo, hi);
  h.edges.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) h.edges[i] = lo + (hi - lo) * i / m;
  h.edges.back() = hi;
  return h;
}

double knuth_log_posterior(std::span<const double> data, int m) {
  const auto [lo, hi] = data_range(data);
  const auto counts = bin_counts(data, m, lo, hi);
  const double n = static_cast<double>(data.size());
  double f = n * std::log(static_cast<double>(m)) + std::lgamma(0.5 * m) -
             m * std::lgamma(0.5) - std::lgamma(n + 0.5 * m);
  for (std::size_t c : counts) f += std::lgamma(static_cast<double>(c) + 0.5);
  return f;
}

int knuth_max_bins(std::size_t n) {
  const int cap = static_cast<int>(std::ceil(4.0 * std::sqrt(static_cast<double>(n))));
  return std::clamp(cap, 1, 200);
}

KnuthResult knuth_bin_count(std::span<const double> data) {
  if (data.size() < 2) throw DegenerateDataError("Knuth binning needs at least 2 values");
  const auto [lo, hi] = data_range(data);
  if (!(hi > lo)) throw DegenerateDataError("Knuth binning: all values are equal");
  KnuthResult r;
  const int m_max = knuth_max_bins(data.size());
  r.log_posterior.reserve(static_cast<std::size_t>(m_max));
  double best = -std::numeric_limits<double>::infinity();
  for (int m = 1; m <= m_max; ++m) {
    const double f = knuth_log_posterior(data, m);
    r.log_posterior.push_back(f);
    if (f > best) {
      best = f;
      r.bins = m;
    }
  }
  r.histogram = equal_width_histogram(data, r.bins);
  return r;
}

double silverman_bandwidth(std::span<const double> data) {
  if (data.size() < 2) throw DegenerateDataError("KDE needs at least 2 samples");
  const double sd = stddev_of(data);
  if (!(sd > 0.0)) throw DegenerateDataError("KDE: samples have zero spread");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(data.size()), -0.2);
}

KdeCurve gaussian_kde(std::span<const double> data, std::span<const double> grid) {
  KdeCurve c;
  c.bandwidth = silverman_bandwidth(data);
  c.grid.assign(grid.begin(), grid.end());
  c.density.resize(grid.size());
  const double h = c.bandwidth;
  const double norm = 1.0 / (static_cast<double>(data.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double x : data) {
      const double z = (grid[i] - x) / h;
      acc += std::exp(-0.5 * z * z);
    }
    c.density[i] = norm * acc;
  }
  return c;
}

KdeCurve gaussian_kde(std::span<const double> data, int grid_points) {
  if (grid_points < 2) throw ValidationError("KDE grid needs at least 2 points");
  const double h = silverman_bandwidth(data);
  const auto [lo, hi] = data_range(data);
  const double a = lo - 3.0 * h;
  const double b = hi + 3.0 * h;
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) grid[i] = a + (b - a) * i / (grid_points - 1);
  return gaussian_kde(data, grid);
}

double trapezoid_integral(const KdeCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.grid.size(); ++i) {
    area += 0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.grid[i] - curve.grid[i - 1]);
  }
  return area;
}

EvaluationVerdict make_verdict(double mean_dx, double mean_dy, double true_dx, double true_dy,
                               std::size_t n_matched, double threshold, std::size_t min_cells) {
  if (!(true_dx > 0.0) || !(true_dy > 0.0)) {
    throw ValidationError("true spans must be positive");
  }
  EvaluationVerdict v;
  v.mean_dx = mean_dx;
  v.mean_dy = mean_dy;
  v.true_dx = true_dx;
  v.true_dy = true_dy;
  v.rel_err_dx = std::abs(mean_dx - true_dx) / true_dx;
  v.rel_err_dy = std::abs(mean_dy - true_dy) / true_dy;
  v.n_matched = n_matched;
  char buf[160];
  if (n_matched < min_cells) {
    std::snprintf(buf, sizeof(buf), "insufficient cells: %zu detected, %zu required", n_matched,
                  min_cells);
    v.reason = buf;
  } else if (v.rel_err_dx > threshold || v.rel_err_dy > threshold) {
    std::snprintf(buf, sizeof(buf), "span error exceeds %.4g%% (dx %.4g%%, dy %.4g%%)",
                  100.0 * threshold, 100.0 * v.rel_err_dx, 100.0 * v.rel_err_dy);
    v.reason = buf;
  }
  v.success = v.reason.empty();
  return v;
}

EvaluationVerdict evaluate(std::span<const CellRecord> predicted, double true_dx, double true_dy,
                           const EvalOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw ValidationError("threshold must lie in (0,1)");
  }
  std::vector<CellRecord> eligible;
  for (const auto& r : predicted) {
    if (!r.touches_border) eligible.push_back(r);
  }
  if (eligible.size() < options.min_cells) {
    double mdx = 0.0;
    double mdy = 0.0;
    if (!eligible.empty()) {
      const Sample s = sample_cells(eligible, options.k_sample, options.seed);
      mdx = s.mean_dx;
      mdy = s.mean_dy;
    }
    return make_verdict(mdx, mdy, true_dx, true_dy, eligible.size(), options.threshold,
                        options.min_cells);
  }
  const Sample s = sample_cells(eligible, options.k_sample, options.seed);
  return make_verdict(s.mean_dx, s.mean_dy, true_dx, true_dy, eligible.size(),
                      options.threshold, options.min_cells);
}

EvaluationVerdict evaluate(std::span<const CellRecord> predicted,
                           const foilgen::GroundTruth& truth, const EvalOptions& options) {
  return evaluate(predicted, truth.true_dx, truth.true_dy, options);
}

namespace {

QuantityStats describe(std::vector<double> values) {
  QuantityStats q;
  q.n = values.size();
  q.mean = mean_of(values);
  q.stddev = stddev_of(values);
  const auto [lo, hi] = data_range(values);
  if (hi > lo) {
    q.histogram = knuth_bin_count(values).histogram;
    q.kde = gaussian_kde(values);
  } else {
    q.histogram.n = values.size();
    q.histogram.edges = {lo - 0.5, lo + 0.5};
    q.histogram.counts = {values.size()};
    q.note = "all values equal";
  }
  return q;
}

nlohmann::ordered_json quantity_json(const QuantityStats& q) {
  nlohmann::ordered_json j;
  j["n"] = q.n;
  j["edges"] = q.histogram.edges;
  j["counts"] = q.histogram.counts;
  if (q.kde) {
    j["kde"] = {{"grid", q.kde->grid},
                {"density", q.kde->density},
                {"bandwidth", q.kde->bandwidth}};
  } else {
    j["kde"] = nullptr;
  }
  j["mean"] = q.mean;
  j["stddev"] = q.stddev;
  if (!q.note.empty()) j["note"] = q.note;
  return j;
}

}  // namespace

StatsReport transect_report(const TransectSelection& selection,
                            std::span<const CellRecord> records) {
  std::map<LabelMask::Label, const CellRecord*> by_label;
  for (const auto& r : records) by_label[r.label] = &r;

  StatsReport report;
  report.orientation = selection.orientation;
  for (const auto& line : selection.lines) {
    LineReport lr;
    lr.position = line.position;
    std::vector<double> area, dx, dy;
    for (auto k : line.labels) {
      auto it = by_label.find(k);
      if (it == by_label.end()) continue;
      area.push_back(static_cast<double>(it->second->area_px));
      dx.push_back(it->second->dx);
      dy.push_back(it->second->dy);
    }
    lr.n_cells = area.size();
    if (lr.n_cells < 2) {
      lr.flagged = true;
      lr.note = "fewer than 2 cells on line";
    } else {
      lr.area = describe(std::move(area));
      lr.dx = describe(std::move(dx));
      lr.dy = describe(std::move(dy));
    }
    report.lines.push_back(std::move(lr));
  }
  return report;
}

nlohmann::ordered_json to_json(const StatsReport& report) {
  nlohmann::ordered_json j;
  j["orientation"] = to_string(report.orientation);
  j["lines"] = nlohmann::ordered_json::array();
  for (const auto& line : report.lines) {
    nlohmann::ordered_json l;
    l[report.orientation == Orientation::Vertical ? "line_x" : "line_y"] = line.position;
    l["n_cells"] = line.n_cells;
    l["flagged"] = line.flagged;
    if (line.flagged) {
      l["note"] = line.note;
    } else {
      l["area"] = quantity_json(line.area);
      l["dx"] = quantity_json(line.dx);
      l["dy"] = quantity_json(line.dy);
    }
    j["lines"].push_back(std::move(l));
  }
  return j;
}

nlohmann::ordered_json to_json(const EvaluationVerdict& v) {
  nlohmann::ordered_json j;
  j["mean_dx"] = v.mean_dx;
  j["mean_dy"] = v.mean_dy;
  j["true_dx"] = v.true_dx;
  j["true_dy"] = v.true_dy;
  j["rel_err_dx"] = v.rel_err_dx;
  j["rel_err_dy"] = v.rel_err_dy;
  j["n_matched"] = v.n_matched;
  j["success"] = v.success;
  j["reason"] = v.reason;
  return j;
}

}  // namespace foilmetric::stats
