#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sisl/image.hpp"
#include "sisl/nn/layers.hpp"
#include "sisl/spectral.hpp"

namespace sisl {

enum class InputMode { rfft, rgb, fusion };
enum class Backbone { resnet18_like, resnet50_like, tiny4conv };

const char* to_string(InputMode mode);
const char* to_string(Backbone backbone);
InputMode parse_input_mode(const std::string& text);
Backbone parse_backbone(const std::string& text);

struct EncoderConfig {
    InputMode input_mode = InputMode::rfft;
    Backbone backbone = Backbone::resnet18_like;
    int embedding_dim = 256;
    int base_width = 0;  // 0 selects the backbone's default (64 residual, 8 tiny)
    PatchSize patch{128, 128};

    int width() const;
    /// Total input channels over all branches (fusion has two 3-channel inputs).
    int input_channels() const;
    nn::Shape3 spectral_shape() const { return {kChannels, patch.height, half_spectrum_width(patch.width)}; }
    nn::Shape3 pixel_shape() const { return {kChannels, patch.height, patch.width}; }
    bool uses_spectral() const { return input_mode != InputMode::rgb; }
    bool uses_pixels() const { return input_mode != InputMode::rfft; }

    bool operator==(const EncoderConfig&) const = default;
};

/// `key=value` lines in key order; the model file stores this verbatim.
std::string to_canonical_text(const EncoderConfig& config);
EncoderConfig parse_canonical_text(const std::string& text);

struct Embedding {
    std::vector<float> values;
    std::string source_id;
    int top = 0;
    int left = 0;

    std::size_t dim() const { return values.size(); }
};

struct NamedArray {
    std::vector<int> shape;
    std::vector<float> values;

    bool operator==(const NamedArray&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Serializable network state: every parameter and batch-norm statistic by name.
struct ModelState {
    EncoderConfig config;
    std::map<std::string, NamedArray> weights;
    std::uint64_t training_steps = 0;
    std::uint32_t format_version = kModelFormatVersion;

    /// Trainable scalars only (excludes running statistics).
    std::size_t parameter_count() const;
};

struct PatchOrigin {
    std::string source_id;
    int top = 0;
    int left = 0;
};

/// Network inputs for a batch of N patches; unused branches stay empty.
template <typename T>
struct EncoderBatch {
    int size = 0;
    std::vector<PatchOrigin> origins;
    nn::Tensor<T> spectral;  // N x 3 x U x (V/2+1)
    nn::Tensor<T> pixels;    // N x 3 x U x V, scaled to [0,1]
};

EncoderBatch<float> make_encoder_batch(const EncoderConfig& config, std::span<const Patch> patches,
                                       SpectrumNormalization normalization);
/// For callers that already hold spectral features. `patches` is required in
/// rgb and fusion modes and must describe the same crops as `features`.
EncoderBatch<float> make_encoder_batch(const EncoderConfig& config, std::span<const SpectralFeature> features,
                                       std::span<const Patch> patches = {});
/// Concatenates along the batch axis.
EncoderBatch<float> concat_batches(const EncoderBatch<float>& a, const EncoderBatch<float>& b);

template <typename T>
EncoderBatch<T> cast_batch(const EncoderBatch<float>& batch);

/// Backbone g (one per branch) followed by the single affine projector h.
template <typename T>
class Encoder {
public:
    explicit Encoder(const EncoderConfig& config);
    explicit Encoder(const ModelState& state);

    const EncoderConfig& config() const { return config_; }
    int feature_width() const { return spectral_features_ + pixel_features_; }

    void initialize(std::uint64_t seed);
    void load(const ModelState& state);
    ModelState state(std::uint64_t training_steps = 0) const;

    /// Returns N x D x 1 x 1.
    nn::Tensor<T> forward(const EncoderBatch<T>& batch, bool training);
    /// Accumulates parameter gradients from dL/dz (N x D x 1 x 1).
    void backward(const nn::Tensor<T>& grad);

    std::vector<nn::Parameter<T>*> parameters();
    std::vector<const nn::Parameter<T>*> parameters() const;
    void zero_grad();

private:
    void validate(const EncoderBatch<T>& batch) const;

    EncoderConfig config_;
    std::unique_ptr<nn::Sequential<T>> spectral_;
    std::unique_ptr<nn::Sequential<T>> pixel_;
    int spectral_features_ = 0;
    int pixel_features_ = 0;
    std::unique_ptr<nn::Linear<T>> projector_;
};

/// Throws UsageError when the config is invalid or the input is too small
/// (every axis must be >= 8 after the stem convolution).
ModelState build_encoder(const EncoderConfig& config, std::uint64_t seed);

/// Evaluation-mode embeddings, one per batch entry, in order.
std::vector<Embedding> embed(Encoder<float>& encoder, const EncoderBatch<float>& batch);
std::vector<Embedding> embed(const ModelState& model, const EncoderBatch<float>& batch);

}  // namespace sisl
