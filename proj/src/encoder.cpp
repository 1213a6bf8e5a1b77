#include "sisl/encoder.hpp"

#include <cmath>
#include <sstream>

#include "sisl/error.hpp"

namespace sisl {

const char* to_string(InputMode mode) {
    switch (mode) {
        case InputMode::rfft: return "rfft";
        case InputMode::rgb: return "rgb";
        case InputMode::fusion: return "fusion";
    }
    return "?";
}

const char* to_string(Backbone backbone) {
    switch (backbone) {
        case Backbone::resnet18_like: return "resnet18_like";
        case Backbone::resnet50_like: return "resnet50_like";
        case Backbone::tiny4conv: return "tiny4conv";
    }
    return "?";
}

InputMode parse_input_mode(const std::string& text) {
    if (text == "rfft") return InputMode::rfft;
    if (text == "rgb") return InputMode::rgb;
    if (text == "fusion") return InputMode::fusion;
    throw UsageError("unknown input mode '" + text + "' (expected rfft, rgb or fusion)");
}

Backbone parse_backbone(const std::string& text) {
    if (text == "resnet18_like") return Backbone::resnet18_like;
    if (text == "resnet50_like") return Backbone::resnet50_like;
    if (text == "tiny4conv") return Backbone::tiny4conv;
    throw UsageError("unknown backbone '" + text + "'");
}

int EncoderConfig::width() const {
    if (base_width > 0) return base_width;
    return backbone == Backbone::tiny4conv ? 8 : 64;
}

int EncoderConfig::input_channels() const {
    return input_mode == InputMode::fusion ? 2 * kChannels : kChannels;
}

std::string to_canonical_text(const EncoderConfig& c) {
    std::ostringstream out;
    out << "backbone=" << to_string(c.backbone) << '\n'
        << "base_width=" << c.base_width << '\n'
        << "embedding_dim=" << c.embedding_dim << '\n'
        << "input_mode=" << to_string(c.input_mode) << '\n'
        << "patch_height=" << c.patch.height << '\n'
        << "patch_width=" << c.patch.width << '\n';
    return out.str();
}

EncoderConfig parse_canonical_text(const std::string& text) {
    EncoderConfig c;
    std::istringstream in(text);
    std::string line;
    int seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("model config: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "backbone") c.backbone = parse_backbone(value);
            else if (key == "base_width") c.base_width = std::stoi(value);
            else if (key == "embedding_dim") c.embedding_dim = std::stoi(value);
            else if (key == "input_mode") c.input_mode = parse_input_mode(value);
            else if (key == "patch_height") c.patch.height = std::stoi(value);
            else if (key == "patch_width") c.patch.width = std::stoi(value);
            else throw DataError("model config: unknown key '" + key + "'");
        } catch (const UsageError& e) {
            throw DataError(std::string("model config: ") + e.what());
        } catch (const std::logic_error&) {
            throw DataError("model config: bad value for " + key);
        }
        ++seen;
    }
    if (seen != 6) throw DataError("model config: expected 6 keys, found " + std::to_string(seen));
    return c;
}

std::size_t ModelState::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, arr] : weights) {
        if (name.ends_with(".running_mean") || name.ends_with(".running_var")) continue;
        n += arr.values.size();
    }
    return n;
}

// ---------------------------------------------------------------------------
// Batches

namespace {

void check_patch(const EncoderConfig& config, const Patch& p) {
    if (p.height != config.patch.height || p.width != config.patch.width) {
        throw UsageError("patch " + std::to_string(p.height) + "x" + std::to_string(p.width) +
                         " does not match encoder input " + std::to_string(config.patch.height) + "x" +
                         std::to_string(config.patch.width));
    }
}

void fill_pixels(nn::Tensor<float>& t, int i, const Patch& p) {
    float* dst = t.sample(i);
    const std::size_t plane = static_cast<std::size_t>(p.height) * p.width;
    for (int r = 0; r < p.height; ++r) {
        for (int c = 0; c < p.width; ++c) {
            for (int ch = 0; ch < kChannels; ++ch) {
                dst[ch * plane + static_cast<std::size_t>(r) * p.width + c] = p.at(r, c, ch) / 255.0f;
            }
        }
    }
}

void fill_spectral(nn::Tensor<float>& t, int i, const SpectralFeature& f) {
    float* dst = t.sample(i);
    for (std::size_t k = 0; k < f.coefficients.size(); ++k) dst[k] = static_cast<float>(f.coefficients[k]);
}

}  // namespace

EncoderBatch<float> make_encoder_batch(const EncoderConfig& config, std::span<const Patch> patches,
                                       SpectrumNormalization normalization) {
    EncoderBatch<float> batch;
    batch.size = static_cast<int>(patches.size());
    const auto ss = config.spectral_shape();
    const auto ps = config.pixel_shape();
    if (config.uses_spectral()) batch.spectral = nn::Tensor<float>(batch.size, ss.c, ss.h, ss.w);
    if (config.uses_pixels()) batch.pixels = nn::Tensor<float>(batch.size, ps.c, ps.h, ps.w);
    for (int i = 0; i < batch.size; ++i) {
        const Patch& p = patches[i];
        check_patch(config, p);
        batch.origins.push_back({p.source_id, p.top, p.left});
        if (config.uses_spectral()) fill_spectral(batch.spectral, i, normalize_spectrum(rfft_features(p), normalization));
        if (config.uses_pixels()) fill_pixels(batch.pixels, i, p);
    }
    return batch;
}

EncoderBatch<float> make_encoder_batch(const EncoderConfig& config, std::span<const SpectralFeature> features,
                                       std::span<const Patch> patches) {
    EncoderBatch<float> batch;
    const auto ss = config.spectral_shape();
    const auto ps = config.pixel_shape();
    if (config.uses_pixels()) {
        if (patches.empty() || (config.uses_spectral() && patches.size() != features.size())) {
            throw UsageError(std::string(to_string(config.input_mode)) + " mode requires pixel patches");
        }
    }
    batch.size = static_cast<int>(config.uses_spectral() ? features.size() : patches.size());
    if (config.uses_spectral()) batch.spectral = nn::Tensor<float>(batch.size, ss.c, ss.h, ss.w);
    if (config.uses_pixels()) batch.pixels = nn::Tensor<float>(batch.size, ps.c, ps.h, ps.w);
    for (int i = 0; i < batch.size; ++i) {
        if (config.uses_spectral()) {
            const SpectralFeature& f = features[i];
            if (f.channels != ss.c || f.rows != ss.h || f.cols != ss.w) {
                throw UsageError("spectral feature " + nn::shape_string({f.channels, f.rows, f.cols}) +
                                 " does not match encoder input " + nn::shape_string(ss));
            }
            fill_spectral(batch.spectral, i, f);
            batch.origins.push_back({f.source_id, f.top, f.left});
        }
        if (config.uses_pixels()) {
            check_patch(config, patches[i]);
            fill_pixels(batch.pixels, i, patches[i]);
            if (!config.uses_spectral()) batch.origins.push_back({patches[i].source_id, patches[i].top, patches[i].left});
        }
    }
    return batch;
}

namespace {

nn::Tensor<float> concat_tensor(const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.c != b.c || a.h != b.h || a.w != b.w) throw UsageError("concat_batches: shape mismatch");
    nn::Tensor<float> t(a.n + b.n, a.c, a.h, a.w);
    std::copy(a.data.begin(), a.data.end(), t.data.begin());
    std::copy(b.data.begin(), b.data.end(), t.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return t;
}

}  // namespace

EncoderBatch<float> concat_batches(const EncoderBatch<float>& a, const EncoderBatch<float>& b) {
    EncoderBatch<float> out;
    out.size = a.size + b.size;
    out.origins = a.origins;
    out.origins.insert(out.origins.end(), b.origins.begin(), b.origins.end());
    out.spectral = concat_tensor(a.spectral, b.spectral);
    out.pixels = concat_tensor(a.pixels, b.pixels);
    return out;
}

template <typename T>
EncoderBatch<T> cast_batch(const EncoderBatch<float>& batch) {
    EncoderBatch<T> out;
    out.size = batch.size;
    out.origins = batch.origins;
    auto cast = [](const nn::Tensor<float>& t) {
        nn::Tensor<T> r(t.n, t.c, t.h, t.w);
        for (std::size_t i = 0; i < t.size(); ++i) r.data[i] = static_cast<T>(t.data[i]);
        return r;
    };
    if (!batch.spectral.empty()) out.spectral = cast(batch.spectral);
    if (!batch.pixels.empty()) out.pixels = cast(batch.pixels);
    return out;
}

template EncoderBatch<float> cast_batch<float>(const EncoderBatch<float>&);
template EncoderBatch<double> cast_batch<double>(const EncoderBatch<float>&);

// ---------------------------------------------------------------------------
// Backbones

namespace {

template <typename T>
std::unique_ptr<nn::Sequential<T>> tiny4conv(const std::string& prefix, int in, int width, int& features) {
    auto net = std::make_unique<nn::Sequential<T>>();
    const int widths[4] = {width, 2 * width, 4 * width, 4 * width};
    int cin = in;
    for (int i = 0; i < 4; ++i) {
        const std::string name = prefix + ".block" + std::to_string(i);
        net->add(std::make_unique<nn::Conv2d<T>>(name + ".conv", cin, widths[i], 3, 2, 1));
        net->add(std::make_unique<nn::BatchNorm2d<T>>(name + ".bn", widths[i]));
        net->add(std::make_unique<nn::ReLU<T>>());
        cin = widths[i];
    }
    net->add(std::make_unique<nn::GlobalAvgPool<T>>());
    features = cin;
    return net;
}

template <typename T>
void add_stem(nn::Sequential<T>& net, const std::string& prefix, int in, int width) {
    net.add(std::make_unique<nn::Conv2d<T>>(prefix + ".conv1", in, width, 7, 2, 3));
    net.add(std::make_unique<nn::BatchNorm2d<T>>(prefix + ".bn1", width));
    net.add(std::make_unique<nn::ReLU<T>>());
    net.add(std::make_unique<nn::MaxPool2d<T>>(3, 2, 1));
}

template <typename T>
std::unique_ptr<nn::Sequential<T>> resnet_basic(const std::string& prefix, int in, int width, int& features) {
    auto net = std::make_unique<nn::Sequential<T>>();
    add_stem(*net, prefix, in, width);
    int cin = width;
    for (int layer = 0; layer < 4; ++layer) {
        const int cout = width << layer;
        for (int b = 0; b < 2; ++b) {
            const int stride = (layer > 0 && b == 0) ? 2 : 1;
            net->add(std::make_unique<nn::BasicBlock<T>>(
                prefix + ".layer" + std::to_string(layer + 1) + "." + std::to_string(b), cin, cout, stride));
            cin = cout;
        }
    }
    net->add(std::make_unique<nn::GlobalAvgPool<T>>());
    features = cin;
    return net;
}

template <typename T>
std::unique_ptr<nn::Sequential<T>> resnet_bottleneck(const std::string& prefix, int in, int width, int& features) {
    auto net = std::make_unique<nn::Sequential<T>>();
    add_stem(*net, prefix, in, width);
    const int blocks[4] = {3, 4, 6, 3};
    int cin = width;
    for (int layer = 0; layer < 4; ++layer) {
        const int w = width << layer;
        for (int b = 0; b < blocks[layer]; ++b) {
            const int stride = (layer > 0 && b == 0) ? 2 : 1;
            net->add(std::make_unique<nn::Bottleneck<T>>(
                prefix + ".layer" + std::to_string(layer + 1) + "." + std::to_string(b), cin, w, stride));
            cin = w * nn::Bottleneck<T>::kExpansion;
        }
    }
    net->add(std::make_unique<nn::GlobalAvgPool<T>>());
    features = cin;
    return net;
}

template <typename T>
std::unique_ptr<nn::Sequential<T>> make_backbone(const EncoderConfig& config, const std::string& prefix,
                                                 const nn::Shape3& input, int& features) {
    const bool tiny = config.backbone == Backbone::tiny4conv;
    // Stem convolution: 3x3/2 pad 1 (tiny) or 7x7/2 pad 3 (residual).
    const int k = tiny ? 3 : 7, pad = tiny ? 1 : 3;
    const int sh = (input.h + 2 * pad - k) / 2 + 1;
    const int sw = (input.w + 2 * pad - k) / 2 + 1;
    if (sh < 8 || sw < 8) {
        throw UsageError(prefix + " input " + nn::shape_string(input) + " gives a " + std::to_string(sh) + "x" +
                         std::to_string(sw) + " stem output; each axis must be >= 8");
    }
    switch (config.backbone) {
        case Backbone::tiny4conv: return tiny4conv<T>(prefix, input.c, config.width(), features);
        case Backbone::resnet18_like: return resnet_basic<T>(prefix, input.c, config.width(), features);
        case Backbone::resnet50_like: return resnet_bottleneck<T>(prefix, input.c, config.width(), features);
    }
    throw UsageError("unknown backbone");
}

void validate_config(const EncoderConfig& c) {
    if (c.embedding_dim < 2) throw UsageError("embedding_dim must be >= 2");
    if (c.base_width < 0) throw UsageError("base_width must be >= 0");
    if (c.patch.height <= 0 || c.patch.width <= 0) throw UsageError("patch size must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config) : config_(config) {
    validate_config(config_);
    if (config_.uses_spectral()) {
        spectral_ = make_backbone<T>(config_, "spectral", config_.spectral_shape(), spectral_features_);
    }
    if (config_.uses_pixels()) {
        pixel_ = make_backbone<T>(config_, "pixel", config_.pixel_shape(), pixel_features_);
    }
    projector_ = std::make_unique<nn::Linear<T>>("projector", feature_width(), config_.embedding_dim);
}

template <typename T>
Encoder<T>::Encoder(const ModelState& state) : Encoder(state.config) {
    load(state);
}

template <typename T>
void Encoder<T>::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (spectral_) spectral_->initialize(rng);
    if (pixel_) pixel_->initialize(rng);
    projector_->initialize(rng);
}

template <typename T>
std::vector<nn::Parameter<T>*> Encoder<T>::parameters() {
    std::vector<nn::Parameter<T>*> out;
    if (spectral_) spectral_->collect(out);
    if (pixel_) pixel_->collect(out);
    projector_->collect(out);
    return out;
}

template <typename T>
std::vector<const nn::Parameter<T>*> Encoder<T>::parameters() const {
    auto mutable_params = const_cast<Encoder<T>*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

template <typename T>
void Encoder<T>::zero_grad() {
    for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
void Encoder<T>::load(const ModelState& state) {
    if (!(state.config == config_)) throw DataError("model config does not match encoder");
    const auto params = parameters();
    if (params.size() != state.weights.size()) {
        throw DataError("model has " + std::to_string(state.weights.size()) + " arrays, network expects " +
                        std::to_string(params.size()));
    }
    for (auto* p : params) {
        const auto it = state.weights.find(p->name);
        if (it == state.weights.end()) throw DataError("model is missing array " + p->name);
        if (it->second.shape != p->shape || it->second.values.size() != p->value.size()) {
            throw DataError("array " + p->name + " has the wrong shape");
        }
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<T>(it->second.values[i]);
    }
}

template <typename T>
ModelState Encoder<T>::state(std::uint64_t training_steps) const {
    ModelState s;
    s.config = config_;
    s.training_steps = training_steps;
    for (const auto* p : parameters()) {
        NamedArray arr;
        arr.shape = p->shape;
        arr.values.resize(p->value.size());
        for (std::size_t i = 0; i < p->value.size(); ++i) arr.values[i] = static_cast<float>(p->value[i]);
        s.weights.emplace(p->name, std::move(arr));
    }
    return s;
}

template <typename T>
void Encoder<T>::validate(const EncoderBatch<T>& batch) const {
    auto check = [&](const nn::Tensor<T>& t, const nn::Shape3& want, const char* what) {
        if (t.empty() || t.n != batch.size || t.c != want.c || t.h != want.h || t.w != want.w) {
            throw UsageError(std::string(what) + " input " + nn::shape_string({t.c, t.h, t.w}) + " (n=" +
                             std::to_string(t.n) + ") does not match config " + nn::shape_string(want) +
                             " in " + to_string(config_.input_mode) + " mode");
        }
    };
    if (config_.uses_spectral()) check(batch.spectral, config_.spectral_shape(), "spectral");
    if (config_.uses_pixels()) check(batch.pixels, config_.pixel_shape(), "pixel");
}

template <typename T>
nn::Tensor<T> Encoder<T>::forward(const EncoderBatch<T>& batch, bool training) {
    validate(batch);
    nn::Tensor<T> features(batch.size, feature_width(), 1, 1);
    if (spectral_) {
        const auto f = spectral_->forward(batch.spectral, training);
        for (int i = 0; i < batch.size; ++i) {
            std::copy(f.sample(i), f.sample(i) + spectral_features_, features.sample(i));
        }
    }
    if (pixel_) {
        const auto f = pixel_->forward(batch.pixels, training);
        for (int i = 0; i < batch.size; ++i) {
            std::copy(f.sample(i), f.sample(i) + pixel_features_, features.sample(i) + spectral_features_);
        }
    }
    return projector_->forward(features, training);
}

template <typename T>
void Encoder<T>::backward(const nn::Tensor<T>& grad) {
    const nn::Tensor<T> g = projector_->backward(grad);
    if (spectral_) {
        nn::Tensor<T> gs(g.n, spectral_features_, 1, 1);
        for (int i = 0; i < g.n; ++i) std::copy(g.sample(i), g.sample(i) + spectral_features_, gs.sample(i));
        spectral_->backward(gs);
    }
    if (pixel_) {
        nn::Tensor<T> gp(g.n, pixel_features_, 1, 1);
        for (int i = 0; i < g.n; ++i) {
            std::copy(g.sample(i) + spectral_features_, g.sample(i) + spectral_features_ + pixel_features_,
                      gp.sample(i));
        }
        pixel_->backward(gp);
    }
}

template class Encoder<float>;
template class Encoder<double>;

ModelState build_encoder(const EncoderConfig& config, std::uint64_t seed) {
    Encoder<float> encoder(config);
    encoder.initialize(seed);
    return encoder.state(0);
}

std::vector<Embedding> embed(Encoder<float>& encoder, const EncoderBatch<float>& batch) {
    const auto z = encoder.forward(batch, false);
    std::vector<Embedding> out(static_cast<std::size_t>(batch.size));
    for (int i = 0; i < batch.size; ++i) {
        auto& e = out[i];
        e.values.assign(z.sample(i), z.sample(i) + z.c);
        for (float v : e.values) {
            if (!std::isfinite(v)) throw NumericalError("embed: non-finite embedding value");
        }
        if (i < static_cast<int>(batch.origins.size())) {
            e.source_id = batch.origins[i].source_id;
            e.top = batch.origins[i].top;
            e.left = batch.origins[i].left;
        }
    }
    return out;
}

std::vector<Embedding> embed(const ModelState& model, const EncoderBatch<float>& batch) {
    Encoder<float> encoder(model);
    return embed(encoder, batch);
}

}  // namespace sisl
