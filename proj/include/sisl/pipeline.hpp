#pragma once

#include <span>
#include <string>
#include <vector>

#include "sisl/config.hpp"
#include "sisl/consistency.hpp"
#include "sisl/encoder.hpp"
#include "sisl/image.hpp"

namespace sisl {

/// Wall-clock seconds per inference stage.
struct TimingBreakdown {
    double embed = 0.0;
    double similarity = 0.0;
    double meanshift = 0.0;
    double upsample = 0.0;
    int patches = 0;
    int height = 0;
    int width = 0;

    double total() const { return embed + similarity + meanshift + upsample; }
    std::string line(const std::string& id) const;
};

struct Analysis {
    GridGeometry geometry;
    PatchField field;
    ResponseMap response;
    TimingBreakdown timing;
};

/// Image -> response map with one model. Holds a private network copy, so one
/// instance per thread.
class Analyzer {
public:
    /// Throws UsageError when the model's input mode or patch size disagrees with `config`.
    Analyzer(const ModelState& model, const PipelineConfig& config);

    /// Throws UsageError when the grid holds fewer than two patches.
    Analysis run(const ImageRecord& image);
    std::vector<Embedding> embed_patches(std::span<const Patch> patches);

    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    Encoder<float> encoder_;
};

/// Median over `repetitions` (>= 3) runs of each stage.
TimingBreakdown benchmark_inference(const ModelState& model, const ImageRecord& image, int repetitions,
                                    const PipelineConfig& config);

/// `stage,J,median_seconds` rows.
std::string timing_csv(const TimingBreakdown& timing);

struct ScalingPoint {
    int patches = 0;
    double seconds = 0.0;
};

struct ScalingFit {
    std::vector<ScalingPoint> points;
    double slope = 0.0;  // least-squares slope of log(seconds) on log(J)
};

/// Median time of pairwise_consistency on random J x dim embeddings. Each
/// sample repeats the call until at least `min_seconds` elapsed.
double time_similarity(int patches, int dim, int repetitions, std::uint64_t seed, double min_seconds = 0.02);
ScalingFit similarity_scaling(std::span<const int> patch_counts, int dim, int repetitions, std::uint64_t seed);

}  // namespace sisl
