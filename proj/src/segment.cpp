#include "foilmetric/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>

#include "foilmetric/error.hpp"

namespace foilmetric::segment {

std::string to_string(Polarity p) {
  switch (p) {
    case Polarity::Auto: return "auto";
    case Polarity::Dark: return "dark";
    case Polarity::Bright: return "bright";
  }
  return "auto";
}

Polarity parse_polarity(const std::string& s) {
  if (s == "auto") return Polarity::Auto;
  if (s == "dark") return Polarity::Dark;
  if (s == "bright") return Polarity::Bright;
  throw ValidationError("unknown boundary polarity '" + s + "'");
}

void NativeSegConfig::validate() const {
  preproc.validate();
  if (closing_iterations < 0) throw ValidationError("closing_iterations must be >= 0");
  if (connectivity != 4 && connectivity != 8) {
    throw ValidationError("connectivity must be 4 or 8");
  }
  if (min_area_px < 1) throw ValidationError("min_area_px must be >= 1");
  if (grow_px < 0) throw ValidationError("grow_px must be >= 0");
  if (!(watershed_min_peak_separation > 0.0)) {
    throw ValidationError("watershed_min_peak_separation must be > 0");
  }
}

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

BinaryImage morph3x3(const BinaryImage& img, bool dilate) {
  BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      bool v = img.at(x, y);
      for (int dy = -1; dy <= 1 && v != dilate; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
          if (img.at(nx, ny) == dilate) {
            v = dilate;
            break;
          }
        }
      }
      out.set(x, y, v);
    }
  }
  return out;
}

// Squared 1-D distance transform of a sampled function (lower envelope of
// parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = f[v[k]] == kInf ? kInf : diff * diff + f[v[k]];
  }
}

}  // namespace

LabelMask label_components(const BinaryImage& fg, int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw ValidationError("connectivity must be 4 or 8");
  }
  const int w = fg.width;
  const int h = fg.height;
  const std::size_t n = fg.data.size();
  DisjointSet sets(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!fg.at(x, y)) continue;
      const auto i = static_cast<std::uint32_t>(y * w + x);
      if (x > 0 && fg.at(x - 1, y)) sets.unite(i, i - 1);
      if (y > 0 && fg.at(x, y - 1)) sets.unite(i, i - w);
      if (connectivity == 8 && y > 0) {
        if (x > 0 && fg.at(x - 1, y - 1)) sets.unite(i, i - w - 1);
        if (x + 1 < w && fg.at(x + 1, y - 1)) sets.unite(i, i - w + 1);
      }
    }
  }
  std::vector<LabelMask::Label> raw(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (fg.data[i]) raw[i] = sets.find(static_cast<std::uint32_t>(i)) + 1;
  }
  return LabelMask::from_raw(w, h, std::move(raw));
}

BinaryImage binary_close(const BinaryImage& img, int iterations) {
  if (iterations < 0) throw ValidationError("closing iterations must be >= 0");
  BinaryImage cur = img;
  for (int i = 0; i < iterations; ++i) cur = morph3x3(cur, true);
  for (int i = 0; i < iterations; ++i) cur = morph3x3(cur, false);
  return cur;
}

LabelMask remove_small_cells(const LabelMask& mask, int min_area) {
  std::vector<std::size_t> area(mask.n_cells() + 1, 0);
  for (auto v : mask.labels()) ++area[v];
  std::vector<LabelMask::Label> raw(mask.labels().begin(), mask.labels().end());
  for (auto& v : raw) {
    if (v != 0 && area[v] < static_cast<std::size_t>(min_area)) v = 0;
  }
  return LabelMask::from_raw(mask.width(), mask.height(), std::move(raw));
}

LabelMask remove_border_cells(const LabelMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<bool> on_border(mask.n_cells() + 1, false);
  for (int x = 0; x < w; ++x) {
    on_border[mask.at(x, 0)] = true;
    on_border[mask.at(x, h - 1)] = true;
  }
  for (int y = 0; y < h; ++y) {
    on_border[mask.at(0, y)] = true;
    on_border[mask.at(w - 1, y)] = true;
  }
  std::vector<LabelMask::Label> raw(mask.labels().begin(), mask.labels().end());
  for (auto& v : raw) {
    if (on_border[v]) v = 0;
  }
  return LabelMask::from_raw(w, h, std::move(raw));
}

GrayImage distance_transform(const BinaryImage& fg) {
  const int w = fg.width;
  const int h = fg.height;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> sq(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = fg.data[i] ? kInf : 0.0;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = sq[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w);
    d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = sq[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  GrayImage out(w, h);
  auto o = out.data();
  for (std::size_t i = 0; i < sq.size(); ++i) {
    o[i] = sq[i] == kInf ? static_cast<double>(w + h) : std::sqrt(sq[i]);
  }
  return out;
}

std::vector<Peak> find_peaks(const GrayImage& field, const BinaryImage& support,
                             double min_separation) {
  const int w = field.width();
  const int h = field.height();
  const int r = static_cast<int>(std::ceil(min_separation));
  std::vector<Peak> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = field.at(x, y);
      if (!support.at(x, y) || v <= 0.0) continue;
      bool is_max = true;
      for (int dy = -r; dy <= r && is_max; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (field.contains(x + dx, y + dy) && field.at(x + dx, y + dy) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({x, y, v});
    }
  }
  // Stable sort keeps scan order among equal values.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> kept;
  const double sep2 = min_separation * min_separation;
  for (const Peak& c : candidates) {
    const bool far = std::all_of(kept.begin(), kept.end(), [&](const Peak& k) {
      const double ddx = c.x - k.x;
      const double ddy = c.y - k.y;
      return ddx * ddx + ddy * ddy >= sep2;
    });
    if (far) kept.push_back(c);
  }
  return kept;
}

LabelMask watershed_split(const LabelMask& mask, double min_peak_separation) {
  const int w = mask.width();
  const int h = mask.height();
  const std::size_t n_cells = mask.n_cells();

  struct Box {
    int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max();
    int x1 = -1, y1 = -1;
  };
  std::vector<Box> boxes(n_cells + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto k = mask.at(x, y);
      if (k == 0) continue;
      Box& b = boxes[k];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }

  std::vector<LabelMask::Label> raw(mask.labels().begin(), mask.labels().end());
  LabelMask::Label next_id = static_cast<LabelMask::Label>(n_cells) + 1;

  for (std::size_t k = 1; k <= n_cells; ++k) {
    const Box& b = boxes[k];
    // One pixel of padding so the crop edge counts as outside the cell.
    const int cw = b.x1 - b.x0 + 3;
    const int ch = b.y1 - b.y0 + 3;
    BinaryImage cell(cw, ch);
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) {
        if (mask.at(x, y) == k) cell.set(x - b.x0 + 1, y - b.y0 + 1, true);
      }
    }
    const GrayImage dist = distance_transform(cell);
    const auto peaks = find_peaks(dist, cell, min_peak_separation);
    if (peaks.size() < 2) continue;

    // Marker-based flooding from the deepest basins outward.
    std::vector<LabelMask::Label> local(static_cast<std::size_t>(cw) * ch, 0);
    using Item = std::tuple<double, std::uint64_t, int, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      const LabelMask::Label id = i == 0 ? static_cast<LabelMask::Label>(k) : next_id++;
      local[static_cast<std::size_t>(peaks[i].y) * cw + peaks[i].x] = id;
      queue.emplace(-peaks[i].value, seq++, peaks[i].x, peaks[i].y);
    }
    while (!queue.empty()) {
      const auto [neg, s, x, y] = queue.top();
      queue.pop();
      const auto id = local[static_cast<std::size_t>(y) * cw + x];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= cw || ny >= ch || !cell.at(nx, ny)) continue;
          auto& slot = local[static_cast<std::size_t>(ny) * cw + nx];
          if (slot != 0) continue;
          slot = id;
          queue.emplace(-dist.at(nx, ny), seq++, nx, ny);
        }
      }
    }
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) {
        const auto id = local[static_cast<std::size_t>(y - b.y0 + 1) * cw + (x - b.x0 + 1)];
        if (mask.at(x, y) == k && id != 0) raw[static_cast<std::size_t>(y) * w + x] = id;
      }
    }
  }
  return LabelMask::from_raw(w, h, std::move(raw));
}

LabelMask grow_labels(const LabelMask& mask, int steps) {
  if (steps < 0) throw ValidationError("grow_labels: steps must be >= 0");
  const int w = mask.width();
  const int h = mask.height();
  std::vector<LabelMask::Label> lab(mask.labels().begin(), mask.labels().end());
  std::vector<int> dist(lab.size(), -1);
  std::queue<std::size_t> frontier;
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] != 0) {
      dist[i] = 0;
      frontier.push(i);
    }
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    if (dist[i] >= steps) continue;
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
      if (dist[j] >= 0) continue;
      dist[j] = dist[i] + 1;
      lab[j] = lab[i];
      frontier.push(j);
    }
  }
  return LabelMask::from_raw(w, h, std::move(lab));
}

LabelMask native_segment(const GrayImage& img, const NativeSegConfig& config) {
  config.validate();
  const GrayImage pre = preproc::preprocess(img, config.preproc);
  const auto [lo, hi] = std::minmax_element(pre.data().begin(), pre.data().end());
  if (*hi - *lo < 1e-9) return LabelMask(img.width(), img.height());

  bool dark = config.polarity == Polarity::Dark;
  if (config.polarity == Polarity::Auto) dark = !config.preproc.gradients;
  const double threshold = config.preproc.binarize_threshold
                               ? *config.preproc.binarize_threshold
                               : preproc::otsu_threshold(pre);
  BinaryImage boundary = preproc::binarize(pre, threshold, dark);
  boundary = binary_close(boundary, config.closing_iterations);

  BinaryImage interior = boundary;
  for (auto& v : interior.data) v = v ? 0 : 1;

  LabelMask mask = label_components(interior, config.connectivity);
  mask = remove_small_cells(mask, config.min_area_px);
  mask = grow_labels(mask, config.grow_px);
  if (config.watershed_split) {
    mask = watershed_split(mask, config.watershed_min_peak_separation);
    mask = remove_small_cells(mask, config.min_area_px);
  }
  if (config.exclude_border_cells) mask = remove_border_cells(mask);
  return mask;
}

NativeBackend::NativeBackend(NativeSegConfig config) : config_(std::move(config)) {
  config_.validate();
}

SegmentResult NativeBackend::run(const GrayImage& img) const {
  SegmentResult r;
  r.mask = native_segment(img, config_);
  r.meta.backend_name = name();
  return r;
}

ExternalMaskBackend::ExternalMaskBackend(std::filesystem::path mask_path)
    : path_(std::move(mask_path)) {}

SegmentResult ExternalMaskBackend::run(const GrayImage& img) const {
  MaskFile file = ingest_external_mask(path_, img.width(), img.height());
  SegmentResult r{std::move(file.mask), std::move(file.meta)};
  if (r.meta.backend_name.empty()) r.meta.backend_name = name();
  return r;
}

FixedMaskBackend::FixedMaskBackend(LabelMask mask, std::string name)
    : mask_(std::move(mask)), name_(std::move(name)) {}

SegmentResult FixedMaskBackend::run(const GrayImage&) const {
  SegmentResult r;
  r.mask = mask_;
  r.meta.backend_name = name_;
  return r;
}

SegmentResult segment(const GrayImage& img, const SegmentationBackend& backend,
                      const std::string& source_image) {
  if (img.empty()) throw SegmentationError("segment: empty input image");
  SegmentResult r;
  try {
    r = backend.run(img);
  } catch (const std::exception& e) {
    throw SegmentationError("backend '" + backend.name() + "' failed: " + e.what());
  }
  if (r.mask.width() != img.width() || r.mask.height() != img.height()) {
    throw SegmentationError("backend '" + backend.name() + "' returned a " +
                            std::to_string(r.mask.width()) + "x" +
                            std::to_string(r.mask.height()) + " mask for a " +
                            std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                            " image");
  }
  if (r.meta.backend_name.empty()) r.meta.backend_name = backend.name();
  r.meta.width = img.width();
  r.meta.height = img.height();
  r.meta.n_cells = r.mask.n_cells();
  if (!source_image.empty()) r.meta.source_image = source_image;
  return r;
}

MaskFile ingest_external_mask(const std::filesystem::path& path, int expected_width,
                              int expected_height) {
  MaskFile file = load_label_mask(path);
  if (file.mask.width() != expected_width || file.mask.height() != expected_height) {
    throw FormatError("external mask " + path.string() + " is " +
                      std::to_string(file.mask.width()) + "x" +
                      std::to_string(file.mask.height()) + ", expected " +
                      std::to_string(expected_width) + "x" + std::to_string(expected_height));
  }
  return file;
}

std::vector<InstanceMatch> match_instances(const LabelMask& pred, const LabelMask& truth,
                                           double min_iou) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw SizeError("masks differ in size");
  }
  std::vector<std::size_t> pred_area(pred.n_cells() + 1, 0);
  std::vector<std::size_t> truth_area(truth.n_cells() + 1, 0);
  std::map<std::pair<LabelMask::Label, LabelMask::Label>, std::size_t> overlap;
  auto p = pred.labels();
  auto t = truth.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++pred_area[p[i]];
    ++truth_area[t[i]];
    if (p[i] != 0 && t[i] != 0) ++overlap[{p[i], t[i]}];
  }
  std::vector<InstanceMatch> candidates;
  for (const auto& [key, inter] : overlap) {
    const double uni = static_cast<double>(pred_area[key.first] + truth_area[key.second] - inter);
    const double iou = static_cast<double>(inter) / uni;
    if (iou >= min_iou) candidates.push_back({key.first, key.second, iou});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const InstanceMatch& a, const InstanceMatch& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(pred.n_cells() + 1, false);
  std::vector<bool> truth_used(truth.n_cells() + 1, false);
  std::vector<InstanceMatch> out;
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || truth_used[c.truth]) continue;
    pred_used[c.pred] = truth_used[c.truth] = true;
    out.push_back(c);
  }
  return out;
}

}  // namespace foilmetric::segment
