#include "sisl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sisl/error.hpp"
#include "sisl/random.hpp"

namespace sisl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

EncoderConfig checked_config(const ModelState& model, const PipelineConfig& config) {
    const EncoderConfig& m = model.config;
    const EncoderConfig& c = config.encoder;
    if (m.input_mode != c.input_mode) {
        throw UsageError(std::string("model was trained with input_mode=") + to_string(m.input_mode) +
                         " but the config requests " + to_string(c.input_mode));
    }
    if (!(m.patch == c.patch)) {
        throw UsageError("model patch size " + std::to_string(m.patch.height) + "x" + std::to_string(m.patch.width) +
                         " differs from config " + std::to_string(c.patch.height) + "x" +
                         std::to_string(c.patch.width));
    }
    return m;
}

}  // namespace

std::string TimingBreakdown::line(const std::string& id) const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s: %dx%d J=%d embed=%.4fs similarity=%.4fs meanshift=%.4fs upsample=%.4fs total=%.4fs",
                  id.c_str(), height, width, patches, embed, similarity, meanshift, upsample, total());
    return buf;
}

Analyzer::Analyzer(const ModelState& model, const PipelineConfig& config) : config_(config), encoder_(model) {
    config_.encoder = checked_config(model, config);
}

std::vector<Embedding> Analyzer::embed_patches(std::span<const Patch> patches) {
    std::vector<Embedding> out;
    out.reserve(patches.size());
    const auto chunk = static_cast<std::size_t>(config_.inference.batch_size);
    for (std::size_t i = 0; i < patches.size(); i += chunk) {
        const auto part = patches.subspan(i, std::min(chunk, patches.size() - i));
        auto batch = make_encoder_batch(config_.encoder, part, config_.normalization);
        auto e = embed(encoder_, batch);
        std::move(e.begin(), e.end(), std::back_inserter(out));
    }
    return out;
}

Analysis Analyzer::run(const ImageRecord& image) {
    Analysis a;
    a.geometry = grid_geometry(image.height, image.width, config_.encoder.patch, config_.inference.stride);
    if (a.geometry.count() < 2) {
        throw UsageError(image.id + ": a " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " image yields a single " + std::to_string(config_.encoder.patch.height) + "x" +
                         std::to_string(config_.encoder.patch.width) +
                         " patch; consistency needs at least two, use a larger image or a smaller stride");
    }
    a.timing.height = image.height;
    a.timing.width = image.width;
    a.timing.patches = a.geometry.count();

    auto t0 = Clock::now();
    const PatchGrid grid = extract_grid_patches(image, config_.encoder.patch, config_.inference.stride);
    const auto embeddings = embed_patches(grid.patches);
    a.timing.embed = seconds_since(t0);

    t0 = Clock::now();
    const ConsistencyMatrix matrix = pairwise_consistency(embeddings, grid.rows(), grid.cols());
    a.timing.similarity = seconds_since(t0);

    t0 = Clock::now();
    a.field = aggregate_response(matrix, config_.meanshift);
    a.timing.meanshift = seconds_since(t0);

    t0 = Clock::now();
    a.response = upsample_response(a.field, a.geometry);
    a.response.image_id = image.id;
    a.timing.upsample = seconds_since(t0);
    return a;
}

TimingBreakdown benchmark_inference(const ModelState& model, const ImageRecord& image, int repetitions,
                                    const PipelineConfig& config) {
    if (repetitions < 3) throw UsageError("benchmark_inference needs at least 3 repetitions");
    Analyzer analyzer(model, config);
    std::vector<double> embed, similarity, meanshift, upsample;
    TimingBreakdown out;
    for (int i = 0; i < repetitions; ++i) {
        const Analysis a = analyzer.run(image);
        embed.push_back(a.timing.embed);
        similarity.push_back(a.timing.similarity);
        meanshift.push_back(a.timing.meanshift);
        upsample.push_back(a.timing.upsample);
        out = a.timing;
    }
    out.embed = median(embed);
    out.similarity = median(similarity);
    out.meanshift = median(meanshift);
    out.upsample = median(upsample);
    return out;
}

std::string timing_csv(const TimingBreakdown& t) {
    std::ostringstream out;
    out << "stage,J,median_seconds\n";
    const std::pair<const char*, double> rows[] = {
        {"embed", t.embed}, {"similarity", t.similarity}, {"meanshift", t.meanshift}, {"upsample", t.upsample}};
    char buf[32];
    for (const auto& [stage, s] : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", s);
        out << stage << "," << t.patches << "," << buf << "\n";
    }
    return out.str();
}

double time_similarity(int patches, int dim, int repetitions, std::uint64_t seed, double min_seconds) {
    if (repetitions < 1) throw UsageError("time_similarity needs at least one repetition");
    Rng rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    Eigen::MatrixXf z(patches, dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);

    std::vector<double> samples;
    double sink = 0.0;
    for (int r = 0; r < repetitions; ++r) {
        int calls = 0;
        const auto t0 = Clock::now();
        double elapsed = 0.0;
        do {
            sink += pairwise_consistency(z, patches, 1).values(0, patches - 1);
            ++calls;
            elapsed = seconds_since(t0);
        } while (elapsed < min_seconds);
        samples.push_back(elapsed / calls);
    }
    if (!std::isfinite(sink)) throw NumericalError("time_similarity: non-finite result");
    return median(samples);
}

ScalingFit similarity_scaling(std::span<const int> patch_counts, int dim, int repetitions, std::uint64_t seed) {
    ScalingFit fit;
    for (int J : patch_counts) fit.points.push_back({J, time_similarity(J, dim, repetitions, mix_seed(seed, J))});
    if (fit.points.size() < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (const auto& p : fit.points) {
        mx += std::log(p.patches);
        my += std::log(p.seconds);
    }
    mx /= fit.points.size();
    my /= fit.points.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : fit.points) {
        const double dx = std::log(p.patches) - mx;
        sxy += dx * (std::log(p.seconds) - my);
        sxx += dx * dx;
    }
    fit.slope = sxy / sxx;
    return fit;
}

}  // namespace sisl
