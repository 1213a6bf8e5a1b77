#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sisl/config.hpp"
#include "sisl/manifest.hpp"
#include "sisl/metrics.hpp"
#include "sisl/pipeline.hpp"

namespace sisl {

/// Output file names inside a run directory.
namespace files {
inline constexpr const char* kConfigEcho = "config.json";
inline constexpr const char* kModel = "model.sislm";
inline constexpr const char* kOptimizer = "optimizer.sisla";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kDetections = "detections.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kSummary = "summary.txt";
inline constexpr const char* kTrainManifest = "train_manifest.csv";
inline constexpr const char* kTestManifest = "test_manifest.csv";
}  // namespace files

struct TrainOutcome {
    TrainLog log;
    std::uint64_t start_step = 0;
    std::uint64_t final_step = 0;
    std::filesystem::path model_path;
};

/// Trains on config.paths.train_manifest into `out_dir`. With `resume`, picks up
/// the model and optimizer found in `out_dir`.
TrainOutcome cmd_train(const PipelineConfig& config, const std::filesystem::path& out_dir, bool resume,
                       std::ostream& log);

/// Writes <id>_response.png and <id>.resp to `out_dir`.
Analysis cmd_analyze(const PipelineConfig& config, const std::filesystem::path& image_path,
                     const std::filesystem::path& out_dir, std::ostream& log);

/// Per-image outcome of a batch command; failures are collected, not thrown.
struct BatchOutcome {
    std::vector<DetectionResult> detections;  // manifest order, successful images only
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
};

/// Response maps for every entry, computed with `workers` threads. Returns
/// nullopt entries for failures and records them in `errors`.
std::vector<std::optional<ResponseMap>> analyze_manifest(const ModelState& model, const PipelineConfig& config,
                                                         const DatasetManifest& manifest,
                                                         std::vector<std::string>& errors);

/// Response files plus detections.csv.
BatchOutcome cmd_detect(const PipelineConfig& config, const DatasetManifest& manifest,
                        const std::filesystem::path& out_dir, std::ostream& log);
/// <id>_mask.png per image at delta_l, after inversion.
BatchOutcome cmd_localize(const PipelineConfig& config, const DatasetManifest& manifest,
                          const std::filesystem::path& out_dir, std::ostream& log);

struct EvalOutcome {
    std::optional<MetricsReport> report;
    std::vector<std::string> errors;
};

/// Reads <id>.resp from `responses_dir` when given, otherwise runs the model.
/// Writes report.csv and summary.txt.
EvalOutcome cmd_eval(const PipelineConfig& config, const DatasetManifest& manifest,
                     const std::optional<std::filesystem::path>& responses_dir, const std::filesystem::path& out_dir,
                     std::ostream& log);

struct SynthOutcome {
    DatasetManifest train;
    DatasetManifest test;
};

/// `train/` with config.synth.train_images authentic images and `test/` with
/// `count` authentic plus `count` spliced images and their masks.
SynthOutcome cmd_synth(const PipelineConfig& config, int count, const std::filesystem::path& out_dir,
                       std::ostream& log);

/// Writes the effective config into `out_dir`.
void echo_config(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace sisl
