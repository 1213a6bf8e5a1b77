#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sisl/encoder.hpp"
#include "sisl/image.hpp"
#include "sisl/spectral.hpp"

namespace sisl {

struct TrainConfig {
    int batch_pairs = 256;
    double temperature = 0.9;
    double peak_lr = 1e-3;
    double final_lr = 1e-5;
    int warmup_steps = 500;
    int total_steps = 100000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double adam_epsilon = 1e-8;
    bool symmetric_loss = false;
    int patches_per_image = 100;
    int checkpoint_every = 0;  // 0 disables intermediate checkpoints
    std::uint64_t seed = 0;

    /// Throws UsageError on a violated invariant.
    void validate() const;
};

/// Pre-cropped training patches, grouped by source image.
struct PatchPool {
    std::vector<std::string> image_ids;
    std::vector<std::vector<Patch>> patches;

    std::size_t size() const { return image_ids.size(); }
};

PatchPool build_patch_pool(std::span<const ImageRecord> images, PatchSize size, int per_image,
                           std::uint64_t seed);

/// first[i] and second[i] are distinct crops of image_ids[i]; ids are pairwise distinct.
struct PairBatch {
    std::vector<Patch> first;
    std::vector<Patch> second;
    std::vector<std::string> image_ids;

    int size() const { return static_cast<int>(image_ids.size()); }
};

/// Samples `pairs` distinct images uniformly and two distinct patch indices in each.
PairBatch build_pair_batch(const PatchPool& pool, int pairs, std::uint64_t seed);

/// a.b / (|a||b|). Throws NumericalError on a zero-norm vector.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);
inline double cosine_similarity(const Embedding& a, const Embedding& b) {
    return cosine_similarity(std::span<const float>(a.values), std::span<const float>(b.values));
}

struct ContrastiveLossResult {
    double loss = 0.0;
    Eigen::MatrixXd phi;          // B x B, row k is the softmax of anchor first[k]
    Eigen::MatrixXd similarity;   // B x B cosine similarities
    Eigen::MatrixXd grad_first;   // dL / d first (B x D)
    Eigen::MatrixXd grad_second;  // dL / d second
};

/// phi[k][k'] = exp(sim(first_k, second_k') / tau) / sum_j exp(sim(first_k, second_j) / tau);
/// loss = -sum_k log phi[k][k]. With `symmetric`, the loss is the mean of this
/// and the same expression with the roles of first and second exchanged.
/// Rows of `first` and `second` are embeddings.
ContrastiveLossResult contrastive_loss(const Eigen::MatrixXd& first, const Eigen::MatrixXd& second, double tau,
                                       bool symmetric = false);
ContrastiveLossResult contrastive_loss(std::span<const Embedding> first, std::span<const Embedding> second,
                                       double tau, bool symmetric = false);

/// Linear warmup from 0 to peak over [0, warmup], then cosine annealing to final_lr at total_steps.
double lr_at(int step, const TrainConfig& config);

struct AdamState {
    std::map<std::string, NamedArray> first_moment;
    std::map<std::string, NamedArray> second_moment;
    std::uint64_t step = 0;
};

void save_adam_state(const AdamState& state, const std::filesystem::path& path);
AdamState load_adam_state(const std::filesystem::path& path);

struct TrainRecord {
    std::uint64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double intra_sim = 0.0;  // mean diagonal similarity
    double inter_sim = 0.0;  // mean off-diagonal similarity
};

struct TrainLog {
    std::vector<TrainRecord> records;

    static std::string csv_header();
    static std::string csv_row(const TrainRecord& r);
    std::string to_csv() const;
};

/// Owns the mutable network and optimizer state for one training run. Step
/// numbers are 1-based; update k uses lr_at(k).
class ContrastiveTrainer {
public:
    ContrastiveTrainer(const ModelState& model, const TrainConfig& config, SpectrumNormalization normalization);
    ContrastiveTrainer(const ModelState& model, const AdamState& adam, const TrainConfig& config,
                       SpectrumNormalization normalization);

    /// `lr_override` replaces the scheduled rate for this update only.
    TrainRecord step(const PairBatch& batch, std::optional<double> lr_override = std::nullopt);
    /// `inputs` holds the B first-elements followed by the B second-elements.
    TrainRecord step(const EncoderBatch<float>& inputs, std::span<const std::string> image_ids,
                     std::optional<double> lr_override = std::nullopt);

    EncoderBatch<float> prepare(const PairBatch& batch) const;

    ModelState model() const;
    AdamState adam_state() const;
    std::uint64_t steps() const { return steps_; }
    const TrainConfig& config() const { return config_; }
    Encoder<float>& encoder() { return encoder_; }

private:
    void adam_update(double lr);

    TrainConfig config_;
    SpectrumNormalization normalization_;
    Encoder<float> encoder_;
    std::vector<nn::Parameter<float>*> params_;
    std::vector<std::vector<float>> m_, v_;
    std::uint64_t steps_ = 0;
};

struct StepResult {
    ModelState model;
    AdamState adam;
    double loss = 0.0;
};

/// Functional single update on copies of the inputs.
StepResult train_step(const ModelState& model, const PairBatch& batch, const AdamState& adam,
                      const TrainConfig& config, SpectrumNormalization normalization);

using RecordCallback = std::function<void(const TrainRecord&)>;
using CheckpointCallback = std::function<void(const ContrastiveTrainer&)>;

/// Runs until `trainer.steps() == total_steps`. Batches for step k are drawn with
/// seed mix_seed(config.seed, k), so a resumed run sees the same batches.
/// Batch preparation runs on a producer thread feeding a bounded queue.
TrainLog run_training(ContrastiveTrainer& trainer, const PatchPool& pool, const RecordCallback& on_record = {},
                      const CheckpointCallback& on_checkpoint = {});

/// Central-difference check of the analytic gradient on `coordinates` randomly
/// chosen trainable scalars, evaluated in double precision. Returns the largest
/// |a - n| / max(|a|, |n|, 1e-8).
double gradient_check(const ModelState& model, const PairBatch& batch, double tau, double epsilon,
                      int coordinates = 64, std::uint64_t seed = 0,
                      SpectrumNormalization normalization = SpectrumNormalization::signed_log,
                      bool symmetric = false);

struct SimilarityMargin {
    double intra = 0.0;
    double inter = 0.0;
    double margin() const { return intra - inter; }
};

/// Mean cosine similarity of same-image vs different-image patch pairs over
/// `pairs` random pairs each, in evaluation mode.
SimilarityMargin similarity_margin(Encoder<float>& encoder, std::span<const ImageRecord> images,
                                   SpectrumNormalization normalization, int pairs, std::uint64_t seed);

}  // namespace sisl
