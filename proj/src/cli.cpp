#include "foilmetric/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "foilmetric/error.hpp"
#include "foilmetric/features.hpp"
#include "foilmetric/image_io.hpp"
#include "foilmetric/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace foilmetric::cli {

void RunConfig::validate() const {
  preproc.validate();
  native_config().validate();
  if (backend == "external") {
    if (mask.empty()) throw ValidationError("external backend requires a mask path (--mask)");
  } else if (backend != "native") {
    throw ValidationError("unknown backend '" + backend + "' (expected native or external)");
  }
  if (px_per_unit && !(*px_per_unit > 0.0)) throw ValidationError("px_per_unit must be > 0");
  if (n_lines < 1) throw ValidationError("n_lines must be >= 1");
  if (k_sample < 1) throw ValidationError("k_sample must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("threshold must lie in (0, 1)");
  }
}

segment::NativeSegConfig RunConfig::native_config() const {
  segment::NativeSegConfig c = native;
  c.preproc = preproc;
  return c;
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [k, v] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* s) { return k == s; }) ==
        known.end()) {
      throw ValidationError(std::string("unknown key '") + k + "' in " + where);
    }
  }
}

preproc::PreprocConfig preproc_from_json(const json& j) {
  reject_unknown(j,
                 {"gauss_sigma", "gradients", "alpha", "beta", "split_polarity",
                  "dilation_iterations", "dilation_direction", "overlay_n", "binarize_threshold"},
                 "preproc");
  preproc::PreprocConfig c = segment::default_preproc();
  take(j, "gauss_sigma", c.gauss_sigma);
  take(j, "gradients", c.gradients);
  take(j, "alpha", c.alpha);
  take(j, "beta", c.beta);
  take(j, "split_polarity", c.split_polarity);
  take(j, "dilation_iterations", c.dilation_iterations);
  if (j.contains("dilation_direction")) {
    c.dilation_direction = preproc::parse_dilation_direction(j.at("dilation_direction"));
  }
  take(j, "overlay_n", c.overlay_n);
  if (j.contains("binarize_threshold") && !j.at("binarize_threshold").is_null()) {
    c.binarize_threshold = j.at("binarize_threshold").get<double>();
  }
  return c;
}

segment::NativeSegConfig native_from_json(const json& j) {
  reject_unknown(j,
                 {"polarity", "closing_iterations", "connectivity", "min_area_px", "grow_px",
                  "exclude_border_cells", "watershed_split", "watershed_min_peak_separation"},
                 "native");
  segment::NativeSegConfig c;
  if (j.contains("polarity")) c.polarity = segment::parse_polarity(j.at("polarity"));
  take(j, "closing_iterations", c.closing_iterations);
  take(j, "connectivity", c.connectivity);
  take(j, "min_area_px", c.min_area_px);
  take(j, "grow_px", c.grow_px);
  take(j, "exclude_border_cells", c.exclude_border_cells);
  take(j, "watershed_split", c.watershed_split);
  take(j, "watershed_min_peak_separation", c.watershed_min_peak_separation);
  return c;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("run configuration must be a JSON object");
  try {
    reject_unknown(j,
                   {"input", "inputs", "output", "preproc", "backend", "native", "mask",
                    "px_per_unit", "n_lines", "orientation", "k_sample", "seed", "threshold",
                    "truth"},
                   "run configuration");
    RunConfig c;
    if (j.contains("input")) c.inputs.push_back(j.at("input").get<std::string>());
    if (j.contains("inputs")) {
      for (const auto& s : j.at("inputs")) c.inputs.push_back(s.get<std::string>());
    }
    take(j, "output", c.output);
    if (j.contains("preproc")) c.preproc = preproc_from_json(j.at("preproc"));
    take(j, "backend", c.backend);
    if (j.contains("native")) c.native = native_from_json(j.at("native"));
    take(j, "mask", c.mask);
    if (j.contains("px_per_unit") && !j.at("px_per_unit").is_null()) {
      c.px_per_unit = j.at("px_per_unit").get<double>();
    }
    take(j, "n_lines", c.n_lines);
    if (j.contains("orientation")) c.orientation = stats::parse_orientation(j.at("orientation"));
    take(j, "k_sample", c.k_sample);
    take(j, "seed", c.seed);
    take(j, "threshold", c.threshold);
    take(j, "truth", c.truth);
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid run configuration: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["inputs"] = c.inputs;
  j["output"] = c.output;
  ordered_json p;
  p["gauss_sigma"] = c.preproc.gauss_sigma;
  p["gradients"] = c.preproc.gradients;
  p["alpha"] = c.preproc.alpha;
  p["beta"] = c.preproc.beta;
  p["split_polarity"] = c.preproc.split_polarity;
  p["dilation_iterations"] = c.preproc.dilation_iterations;
  p["dilation_direction"] = preproc::to_string(c.preproc.dilation_direction);
  p["overlay_n"] = c.preproc.overlay_n;
  p["binarize_threshold"] =
      c.preproc.binarize_threshold ? ordered_json(*c.preproc.binarize_threshold) : ordered_json();
  j["preproc"] = p;
  j["backend"] = c.backend;
  ordered_json n;
  n["polarity"] = segment::to_string(c.native.polarity);
  n["closing_iterations"] = c.native.closing_iterations;
  n["connectivity"] = c.native.connectivity;
  n["min_area_px"] = c.native.min_area_px;
  n["grow_px"] = c.native.grow_px;
  n["exclude_border_cells"] = c.native.exclude_border_cells;
  n["watershed_split"] = c.native.watershed_split;
  n["watershed_min_peak_separation"] = c.native.watershed_min_peak_separation;
  j["native"] = n;
  j["mask"] = c.mask;
  j["px_per_unit"] = c.px_per_unit ? ordered_json(*c.px_per_unit) : ordered_json();
  j["n_lines"] = c.n_lines;
  j["orientation"] = stats::to_string(c.orientation);
  j["k_sample"] = c.k_sample;
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  j["truth"] = c.truth;
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SegmentationError*>(&e)) return kSegmentation;
  return kValidation;
}

int thread_cap() {
  if (const char* env = std::getenv("FOILMETRIC_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw ValidationError(std::string("FOILMETRIC_THREADS must be a positive integer, got '") +
                            env + "'");
    }
    return static_cast<int>(std::min<long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& p : patterns) {
    if (p.find_first_of("*?[") == std::string::npos) {
      out.push_back(p);
      continue;
    }
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == GLOB_NOMATCH) {
      globfree(&g);
      throw ValidationError("no input matches '" + p + "'");
    }
    if (rc != 0) {
      globfree(&g);
      throw IoError("glob failed for '" + p + "'");
    }
    std::vector<std::string> hits(g.gl_pathv, g.gl_pathv + g.gl_pathc);
    globfree(&g);
    std::sort(hits.begin(), hits.end());
    out.insert(out.end(), hits.begin(), hits.end());
  }
  return out;
}

std::unique_ptr<segment::SegmentationBackend> make_backend(const RunConfig& config) {
  if (config.backend == "external") {
    return std::make_unique<segment::ExternalMaskBackend>(config.mask);
  }
  return std::make_unique<segment::NativeBackend>(config.native_config());
}

void write_generated(const foilgen::Foil& foil, const std::string& prefix) {
  save_gray(foil.image, prefix + ".png");
  MaskMetadata meta;
  meta.width = foil.truth.mask.width();
  meta.height = foil.truth.mask.height();
  meta.backend_name = "foilgen";
  meta.n_cells = foil.truth.mask.n_cells();
  meta.source_image = fs::path(prefix + ".png").filename().string();
  ordered_json extra;
  extra["ground_truth"] = foilgen::truth_to_json(foil.truth);
  save_label_mask(foil.truth.mask, meta, prefix + ".truth.pgm", extra);
}

segment::SegmentResult run_segment(const RunConfig& config, const std::string& input) {
  if (!fs::exists(input)) throw IoError("input image not found: " + input);
  const GrayImage img = load_gray(input);
  const auto backend = make_backend(config);
  segment::SegmentResult r = segment::segment(img, *backend, fs::path(input).filename().string());
  r.meta.px_per_unit = config.px_per_unit;
  return r;
}

void write_prediction(const segment::SegmentResult& result, const fs::path& path) {
  save_label_mask(result.mask, result.meta, path);
}

std::vector<features::CellRecord> measure(const LabelMask& mask, const RunConfig& config) {
  return features::measure_all(mask, config.px_per_unit);
}

stats::StatsReport write_stats(const LabelMask& mask, const RunConfig& config,
                               const std::string& prefix) {
  const auto records = measure(mask, config);
  const auto selection = stats::transect_select(mask, records, config.n_lines, config.orientation);
  const auto report = stats::transect_report(selection, records);
  write_text_file(prefix + ".stats.json", stats::to_json(report).dump(2) + "\n");

  const char axis = config.orientation == stats::Orientation::Vertical ? 'x' : 'y';
  for (std::size_t i = 0; i < report.lines.size(); ++i) {
    const auto& line = report.lines[i];
    if (line.flagged) continue;
    const std::string tag = "line" + std::to_string(i + 1);
    const std::string where = " (" + std::string(1, axis) + "=" + std::to_string(line.position) + ")";
    const std::pair<const char*, const stats::QuantityStats*> qs[] = {
        {"area", &line.area}, {"dx", &line.dx}, {"dy", &line.dy}};
    for (const auto& [name, q] : qs) {
      const std::string unit = std::string(name) == "area" ? "area [px^2]" : std::string(name) + " [px]";
      report::emit_plot(q->histogram, q->kde ? &*q->kde : nullptr,
                        tag + where + ": " + name, unit,
                        prefix + "." + tag + "." + name + ".svg");
    }
  }
  return report;
}

void write_overlay(const GrayImage& img, const LabelMask& mask, const RunConfig& config,
                   const fs::path& path) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw SizeError("overlay: image and mask sizes differ");
  }
  const auto records = measure(mask, config);
  const auto selection = stats::transect_select(mask, records, config.n_lines, config.orientation);
  std::vector<features::Centroid> markers;
  report::OverlayLines lines{config.orientation, {}};
  for (const auto& line : selection.lines) {
    lines.positions.push_back(line.position);
    markers.insert(markers.end(), line.markers.begin(), line.markers.end());
  }
  const auto rgb = report::render_overlay(img, report::extract_outlines(mask), markers, lines);
  save_rgb_png(rgb.width, rgb.height, rgb.data, path);
}

foilgen::GroundTruth load_truth(const fs::path& path) {
  MaskFile file = load_label_mask(path);
  foilgen::GroundTruth truth;
  if (file.extra.contains("ground_truth")) {
    truth = foilgen::truth_from_json(file.extra.at("ground_truth"));
  } else {
    for (const auto& rec : features::measure_all(file.mask)) {
      if (rec.touches_border) continue;
      ++truth.n_complete_cells;
      truth.true_dx += rec.dx;
      truth.true_dy += rec.dy;
    }
    if (truth.n_complete_cells == 0) {
      throw ValidationError("truth mask " + path.string() + " has no complete cells");
    }
    truth.true_dx /= static_cast<double>(truth.n_complete_cells);
    truth.true_dy /= static_cast<double>(truth.n_complete_cells);
  }
  truth.mask = std::move(file.mask);
  return truth;
}

stats::EvaluationVerdict verdict_for(const LabelMask& mask, const RunConfig& config,
                                     const fs::path& truth_path) {
  const auto truth = load_truth(truth_path);
  const auto records = measure(mask, config);
  stats::EvalOptions opt;
  opt.threshold = config.threshold;
  opt.k_sample = config.k_sample;
  opt.seed = config.seed;
  return stats::evaluate(records, truth, opt);
}

stats::EvaluationVerdict write_verdict(const LabelMask& mask, const RunConfig& config,
                                       const fs::path& truth_path, const fs::path& path) {
  const auto verdict = verdict_for(mask, config, truth_path);
  write_text_file(path, stats::to_json(verdict).dump(2) + "\n");
  return verdict;
}

namespace {

std::string strip_image_ext(const std::string& input) {
  fs::path p(input);
  return (p.parent_path() / p.stem()).string();
}

std::string resolve_truth(const RunConfig& config, const std::string& input) {
  if (config.truth == "auto") return strip_image_ext(input) + ".truth.pgm";
  return config.truth;
}

}  // namespace

void run_pipeline_one(const RunConfig& config, const std::string& input, const std::string& prefix) {
  const segment::SegmentResult r = run_segment(config, input);
  write_prediction(r, prefix + ".pred.pgm");
  write_text_file(prefix + ".cells.csv", features::to_csv(measure(r.mask, config)));
  write_stats(r.mask, config, prefix);
  write_overlay(load_gray(input), r.mask, config, prefix + ".overlay.png");
  const std::string truth = resolve_truth(config, input);
  if (!truth.empty()) write_verdict(r.mask, config, truth, prefix + ".verdict.json");
}

int run_pipeline(const RunConfig& config) {
  config.validate();
  const auto inputs = expand_inputs(config.inputs);
  if (inputs.empty()) throw ValidationError("no input image given (--in)");
  if (config.output.empty()) throw ValidationError("no output prefix given (--out)");
  if (inputs.size() > 1 && !config.truth.empty() && config.truth != "auto") {
    throw ValidationError("a single --truth file cannot serve several inputs; use --truth auto");
  }

  std::vector<std::string> prefixes;
  if (inputs.size() == 1) {
    prefixes.push_back(config.output);
  } else {
    fs::create_directories(config.output);
    std::set<std::string> seen;
    for (const auto& in : inputs) {
      const std::string stem = fs::path(in).stem().string();
      if (!seen.insert(stem).second) {
        throw ValidationError("two inputs share the name '" + stem + "'");
      }
      prefixes.push_back((fs::path(config.output) / stem).string());
    }
  }

  std::vector<std::string> errors(inputs.size());
  std::vector<int> codes(inputs.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < inputs.size();) {
      try {
        run_pipeline_one(config, inputs[i], prefixes[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        codes[i] = exit_code_for(e);
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(thread_cap()), inputs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  int code = kOk;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (errors[i].empty()) continue;
    std::cerr << "foilmetric: " << inputs[i] << ": " << errors[i] << "\n";
    code = std::max(code, codes[i]);
  }
  return code;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> inputs;
  std::optional<std::string> out;
  // preproc
  std::optional<double> sigma, alpha, beta, threshold_bin;
  std::optional<int> overlay_n, dilate_iters;
  std::optional<std::string> dilate_dir;
  bool gradients = false, split_polarity = false;
  // segmentation
  std::optional<std::string> backend, mask, polarity;
  std::optional<int> closing, min_area, grow, connectivity;
  bool exclude_border = false, watershed = false;
  // measurement and statistics
  std::optional<double> px_per_unit, eval_threshold;
  std::optional<int> n_lines, k_sample;
  std::optional<std::string> orientation, truth;
  std::optional<std::uint64_t> seed;
};

void add_preproc_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--sigma", o.sigma, "Gaussian smoothing sigma (0 disables)");
  cmd->add_flag("--gradients", o.gradients, "enable gradient, bias and NMS stage");
  cmd->add_option("--alpha", o.alpha, "bias weight on Gy");
  cmd->add_option("--beta", o.beta, "bias weight on Gx");
  cmd->add_flag("--split-polarity", o.split_polarity, "suppress north and south edges separately");
  cmd->add_option("--overlay-n", o.overlay_n, "edge overlay count");
  cmd->add_option("--dilate-iters", o.dilate_iters, "dilation iterations");
  cmd->add_option("--dilate-dir", o.dilate_dir, "north-south | east-west | isotropic");
  cmd->add_option("--threshold", o.threshold_bin, "binarization threshold (default Otsu)");
}

void add_segment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--backend", o.backend, "native | external");
  cmd->add_option("--mask", o.mask, "external mask (16-bit PGM with JSON sidecar)");
  cmd->add_option("--polarity", o.polarity, "boundary polarity: auto | dark | bright");
  cmd->add_option("--closing", o.closing, "closing iterations");
  cmd->add_option("--connectivity", o.connectivity, "4 or 8");
  cmd->add_option("--min-area", o.min_area, "minimum cell area in pixels");
  cmd->add_option("--grow", o.grow, "label growth in pixels");
  cmd->add_flag("--exclude-border", o.exclude_border, "drop cells touching the image edge");
  cmd->add_flag("--watershed", o.watershed, "split merged cells");
}

void add_stats_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--lines", o.n_lines, "number of transect lines");
  cmd->add_option("--orientation", o.orientation, "vertical | horizontal");
  cmd->add_option("--px-per-unit", o.px_per_unit, "pixels per physical unit");
}

void add_eval_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--k", o.k_sample, "cells sampled for evaluation");
  cmd->add_option("--seed", o.seed, "sampling seed (default 0)");
  cmd->add_option("--eval-threshold", o.eval_threshold, "relative error threshold");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.inputs.empty()) c.inputs = o.inputs;
  if (o.out) c.output = *o.out;
  if (o.sigma) c.preproc.gauss_sigma = *o.sigma;
  if (o.gradients) c.preproc.gradients = true;
  if (o.alpha) c.preproc.alpha = *o.alpha;
  if (o.beta) c.preproc.beta = *o.beta;
  if (o.split_polarity) c.preproc.split_polarity = true;
  if (o.overlay_n) c.preproc.overlay_n = *o.overlay_n;
  if (o.dilate_iters) c.preproc.dilation_iterations = *o.dilate_iters;
  if (o.dilate_dir) c.preproc.dilation_direction = preproc::parse_dilation_direction(*o.dilate_dir);
  if (o.threshold_bin) c.preproc.binarize_threshold = *o.threshold_bin;
  if (o.backend) c.backend = *o.backend;
  if (o.mask) c.mask = *o.mask;
  if (o.polarity) c.native.polarity = segment::parse_polarity(*o.polarity);
  if (o.closing) c.native.closing_iterations = *o.closing;
  if (o.connectivity) c.native.connectivity = *o.connectivity;
  if (o.min_area) c.native.min_area_px = *o.min_area;
  if (o.grow) c.native.grow_px = *o.grow;
  if (o.exclude_border) c.native.exclude_border_cells = true;
  if (o.watershed) c.native.watershed_split = true;
  if (o.px_per_unit) c.px_per_unit = *o.px_per_unit;
  if (o.n_lines) c.n_lines = *o.n_lines;
  if (o.orientation) c.orientation = stats::parse_orientation(*o.orientation);
  if (o.k_sample) c.k_sample = *o.k_sample;
  if (o.seed) c.seed = *o.seed;
  if (o.eval_threshold) c.threshold = *o.eval_threshold;
  if (o.truth) c.truth = *o.truth;
  c.validate();
  return c;
}

const std::string& single_input(const RunConfig& c) {
  if (c.inputs.size() != 1) throw ValidationError("exactly one --in is required");
  return c.inputs.front();
}

const std::string& required_out(const RunConfig& c) {
  if (c.output.empty()) throw ValidationError("--out is required");
  return c.output;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"foilmetric: cell-size measurement for soot-foil images"};
  app.require_subcommand(1);
  Overrides o;

  foilgen::FoilSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "render a synthetic lattice foil and its truth mask");
  gen->add_option("--dy", spec.dy, "vertical cell period in pixels");
  gen->add_option("--dx", spec.dx, "horizontal cell period in pixels");
  gen->add_option("--sigma", spec.filter_sigma, "Gaussian filter sigma");
  gen->add_option("--width", spec.width);
  gen->add_option("--height", spec.height);
  gen->add_option("--line-intensity", spec.line_intensity);
  gen->add_option("--noise", spec.noise_amplitude, "additive noise standard deviation");
  gen->add_option("--seed", spec.seed, "noise seed (default 0)");
  gen->add_option("--out", gen_out, "output prefix")->required();

  auto* pre = app.add_subcommand("preprocess", "write the preprocessed image");
  pre->add_option("--config", o.config);
  pre->add_option("--in", o.inputs);
  pre->add_option("--out", o.out, "output image (.png or .pgm)");
  add_preproc_flags(pre, o);

  auto* seg = app.add_subcommand("segment", "segment an image into a label mask");
  seg->add_option("--config", o.config);
  seg->add_option("--in", o.inputs);
  seg->add_option("--out", o.out, "output mask (.pgm, sidecar written alongside)");
  add_preproc_flags(seg, o);
  add_segment_flags(seg, o);

  std::string mask_in;
  auto* mea = app.add_subcommand("measure", "per-cell measurements as CSV");
  mea->add_option("--config", o.config);
  mea->add_option("--mask", mask_in, "label mask")->required();
  mea->add_option("--out", o.out, "CSV path (stdout when omitted)");
  mea->add_option("--px-per-unit", o.px_per_unit);

  auto* sta = app.add_subcommand("stats", "transect statistics, JSON report and plots");
  sta->add_option("--config", o.config);
  sta->add_option("--mask", mask_in, "label mask")->required();
  sta->add_option("--out", o.out, "output prefix");
  add_stats_flags(sta, o);

  auto* ove = app.add_subcommand("overlay", "outline and transect overlay");
  ove->add_option("--config", o.config);
  ove->add_option("--in", o.inputs);
  ove->add_option("--mask", mask_in, "label mask")->required();
  ove->add_option("--out", o.out, "output PNG");
  add_stats_flags(ove, o);

  std::string truth_in;
  auto* eva = app.add_subcommand("eval", "compare a mask against a truth mask");
  eva->add_option("--config", o.config);
  eva->add_option("--mask", mask_in, "predicted label mask")->required();
  eva->add_option("--truth", truth_in, "truth label mask")->required();
  eva->add_option("--out", o.out, "verdict JSON path");
  add_eval_flags(eva, o);
  eva->add_option("--px-per-unit", o.px_per_unit);

  auto* pip = app.add_subcommand("pipeline", "preprocess, segment, measure, stats and report");
  pip->add_option("--config", o.config);
  pip->add_option("--in", o.inputs, "input image(s); glob patterns allowed");
  pip->add_option("--out", o.out, "output prefix (a directory for several inputs)");
  pip->add_option("--truth", o.truth, "truth mask for evaluation, or 'auto'");
  add_preproc_flags(pip, o);
  add_segment_flags(pip, o);
  add_stats_flags(pip, o);
  add_eval_flags(pip, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (gen->parsed()) {
      write_generated(foilgen::generate_foil(spec), gen_out);
      return kOk;
    }
    const RunConfig c = resolve(o);
    if (pre->parsed()) {
      const GrayImage img = load_gray(single_input(c));
      const GrayImage out = preproc::preprocess(img, c.preproc);
      if (c.preproc.binarize_threshold) {
        const BinaryImage b = preproc::binarize(out, *c.preproc.binarize_threshold);
        GrayImage bin(b.width, b.height);
        for (std::size_t i = 0; i < b.data.size(); ++i) bin.data()[i] = b.data[i] ? 1.0 : 0.0;
        save_gray(bin, required_out(c));
      } else {
        save_gray(out, required_out(c));
      }
    } else if (seg->parsed()) {
      write_prediction(run_segment(c, single_input(c)), required_out(c));
    } else if (mea->parsed()) {
      const std::string csv = features::to_csv(measure(load_label_mask(mask_in).mask, c));
      if (c.output.empty()) {
        std::cout << csv;
      } else {
        write_text_file(c.output, csv);
      }
    } else if (sta->parsed()) {
      write_stats(load_label_mask(mask_in).mask, c, required_out(c));
    } else if (ove->parsed()) {
      write_overlay(load_gray(single_input(c)), load_label_mask(mask_in).mask, c, required_out(c));
    } else if (eva->parsed()) {
      const LabelMask mask = load_label_mask(mask_in).mask;
      if (c.output.empty()) {
        std::cout << stats::to_json(verdict_for(mask, c, truth_in)).dump(2) << "\n";
      } else {
        write_verdict(mask, c, truth_in, c.output);
      }
    } else if (pip->parsed()) {
      return run_pipeline(c);
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "foilmetric: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace foilmetric::cli
