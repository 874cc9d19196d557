#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foilmetric/foilgen.hpp"
#include "foilmetric/preproc.hpp"
#include "foilmetric/segment.hpp"
#include "foilmetric/stats.hpp"

namespace foilmetric::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kSegmentation = 3 };

struct RunConfig {
  std::vector<std::string> inputs;
  std::string output;
  preproc::PreprocConfig preproc = segment::default_preproc();
  std::string backend = "native";  // "native" or "external"
  segment::NativeSegConfig native;  // its preproc member is ignored; see native_config()
  std::string mask;                 // external backend only
  std::optional<double> px_per_unit;
  int n_lines = 4;
  stats::Orientation orientation = stats::Orientation::Vertical;
  int k_sample = 10;
  std::uint64_t seed = 0;
  double threshold = 0.10;
  /// Truth mask for evaluation; "auto" means `<input stem>.truth.pgm`.
  std::string truth;

  /// Throws ValidationError.
  void validate() const;
  segment::NativeSegConfig native_config() const;
};

/// Unknown keys are rejected. Throws ValidationError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// FOILMETRIC_THREADS, else hardware concurrency (at least 1).
int thread_cap();

/// Shell glob expansion, sorted. A pattern without wildcards is returned as is.
std::vector<std::string> expand_inputs(const std::vector<std::string>& patterns);

// Building blocks shared by the subcommands and the pipeline, so that
// `pipeline` is literally their composition.

std::unique_ptr<segment::SegmentationBackend> make_backend(const RunConfig& config);

void write_generated(const foilgen::Foil& foil, const std::string& prefix);
segment::SegmentResult run_segment(const RunConfig& config, const std::string& input);
void write_prediction(const segment::SegmentResult& result, const std::filesystem::path& path);
std::vector<features::CellRecord> measure(const LabelMask& mask, const RunConfig& config);
stats::StatsReport write_stats(const LabelMask& mask, const RunConfig& config,
                               const std::string& prefix);
void write_overlay(const GrayImage& img, const LabelMask& mask, const RunConfig& config,
                   const std::filesystem::path& path);
/// Truth spans from a truth mask file: the sidecar's ground_truth record when
/// present, otherwise the mean spans of its non-border cells.
foilgen::GroundTruth load_truth(const std::filesystem::path& path);
stats::EvaluationVerdict verdict_for(const LabelMask& mask, const RunConfig& config,
                                     const std::filesystem::path& truth_path);
stats::EvaluationVerdict write_verdict(const LabelMask& mask, const RunConfig& config,
                                       const std::filesystem::path& truth_path,
                                       const std::filesystem::path& path);

/// Full run for one image; writes every artifact under `prefix`.
void run_pipeline_one(const RunConfig& config, const std::string& input,
                      const std::string& prefix);
/// Runs every input, concurrently when there are several, and returns the
/// exit code. With more than one input, `output` names a directory.
int run_pipeline(const RunConfig& config);

/// Command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace foilmetric::cli
