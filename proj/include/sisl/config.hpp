#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sisl/consistency.hpp"
#include "sisl/decision.hpp"
#include "sisl/encoder.hpp"
#include "sisl/spectral.hpp"
#include "sisl/splice.hpp"
#include "sisl/trainer.hpp"

namespace sisl {

struct InferenceConfig {
    int stride = 64;
    int batch_size = 64;  // patches per encoder forward pass
};

/// Fixture generator settings for `synth`.
struct SynthConfig {
    int train_images = 40;  // authentic, alternating signatures
    int test_count = 10;    // authentic and spliced images each
    int image_height = 256;
    int image_width = 256;
    int region_min = 96;  // splice rectangle side range, pixels
    int region_max = 128;
    SignatureParams signature_a{8.0, 0.10, 0.06, 0.0};
    SignatureParams signature_b{8.0, 0.40, 0.08, 10.0};
};

struct PathsConfig {
    std::filesystem::path model;
    std::filesystem::path train_manifest;
    std::filesystem::path test_manifest;
    std::filesystem::path output_dir;
};

struct PipelineConfig {
    EncoderConfig encoder;
    TrainConfig train;
    MeanShiftConfig meanshift;
    Thresholds thresholds;
    DetectionMethod method = DetectionMethod::pctarea;
    InferenceConfig inference;
    SpectrumNormalization normalization = SpectrumNormalization::signed_log;
    SynthConfig synth;
    PathsConfig paths;
    std::uint64_t seed = 0;
    int workers = 1;

    /// Cross-module checks; throws UsageError.
    void validate() const;
};

/// Missing keys keep their defaults; unknown keys and ill-typed values throw
/// UsageError. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Every field, paths made absolute, keys sorted.
std::string format_config(const PipelineConfig& config);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace sisl
