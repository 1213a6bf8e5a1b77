#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "sisl/binary_io.hpp"
#include "sisl/encoder.hpp"
#include "sisl/error.hpp"
#include "sisl/model_io.hpp"
#include "sisl/splice.hpp"

using namespace sisl;
namespace fs = std::filesystem;

namespace {

EncoderConfig tiny(InputMode mode = InputMode::rfft) {
    EncoderConfig c;
    c.input_mode = mode;
    c.backbone = Backbone::tiny4conv;
    c.embedding_dim = 8;
    c.base_width = 4;
    c.patch = {32, 32};
    return c;
}

std::vector<Patch> some_patches(int n, PatchSize size, std::uint64_t seed) {
    const ImageRecord img = synthesize_content("img", 160, 160, seed);
    return sample_training_patches(img, size, n, seed);
}

}  // namespace

TEST_CASE("canonical text round trip") {
    EncoderConfig c = tiny(InputMode::fusion);
    c.backbone = Backbone::resnet50_like;
    const std::string text = to_canonical_text(c);
    CHECK(parse_canonical_text(text) == c);
    CHECK(text.find("backbone=resnet50_like\n") == 0);
    CHECK_THROWS_AS(parse_canonical_text("backbone=resnet18_like\n"), DataError);
}

TEST_CASE("embedding shapes for every input mode") {
    const auto patches = some_patches(5, {32, 32}, 1);
    for (InputMode mode : {InputMode::rfft, InputMode::rgb, InputMode::fusion}) {
        const EncoderConfig cfg = tiny(mode);
        const ModelState model = build_encoder(cfg, 3);
        const auto batch = make_encoder_batch(cfg, patches, SpectrumNormalization::signed_log);
        CHECK(batch.size == 5);
        CHECK(batch.spectral.empty() == !cfg.uses_spectral());
        CHECK(batch.pixels.empty() == !cfg.uses_pixels());
        const auto z = embed(model, batch);
        REQUIRE(z.size() == 5u);
        CHECK(z[0].dim() == 8u);
        CHECK(z[2].top == patches[2].top);
        CHECK(z[3].left == patches[3].left);
    }
    const EncoderConfig fusion = tiny(InputMode::fusion);
    CHECK(fusion.input_channels() == 6);
}

TEST_CASE("rfft batch holds the half spectrum") {
    const EncoderConfig cfg = tiny();
    const auto batch = make_encoder_batch(cfg, some_patches(2, {32, 32}, 2), SpectrumNormalization::none);
    CHECK(batch.spectral.c == 3);
    CHECK(batch.spectral.h == 32);
    CHECK(batch.spectral.w == 17);
}

TEST_CASE("residual backbones build at the reference patch size") {
    EncoderConfig r18;
    r18.base_width = 4;
    r18.embedding_dim = 16;
    const ModelState m18 = build_encoder(r18, 1);
    CHECK(m18.parameter_count() > 0);
    EncoderConfig r50 = r18;
    r50.backbone = Backbone::resnet50_like;
    CHECK(build_encoder(r50, 1).parameter_count() > m18.parameter_count());
    const auto patches = some_patches(2, {128, 128}, 4);
    CHECK(embed(m18, make_encoder_batch(r18, patches, SpectrumNormalization::signed_log)).size() == 2u);
}

TEST_CASE("too-small input is rejected when the network is built") {
    EncoderConfig c;
    c.patch = {8, 8};
    CHECK_THROWS_AS(build_encoder(c, 1), UsageError);
}

TEST_CASE("mismatched batch shape is rejected") {
    const ModelState model = build_encoder(tiny(), 1);
    EncoderConfig other = tiny();
    other.patch = {48, 48};
    const auto batch = make_encoder_batch(other, some_patches(2, {48, 48}, 1), SpectrumNormalization::none);
    CHECK_THROWS_AS(embed(model, batch), UsageError);
}

TEST_CASE("initialization is seed-deterministic") {
    const ModelState a = build_encoder(tiny(), 5);
    const ModelState b = build_encoder(tiny(), 5);
    const ModelState c = build_encoder(tiny(), 6);
    CHECK(a.weights.begin()->second.values == b.weights.begin()->second.values);
    bool differs = false;
    for (const auto& [name, arr] : a.weights) differs |= arr.values != c.weights.at(name).values;
    CHECK(differs);
}

TEST_CASE("model file round trip is bit-exact") {
    const fs::path dir = fs::temp_directory_path() / "sisl_unit" / "model";
    fs::create_directories(dir);
    ModelState m = build_encoder(tiny(InputMode::fusion), 9);
    m.training_steps = 1234;
    save_model(m, dir / "m.sislm");
    const ModelState back = load_model(dir / "m.sislm");
    CHECK(back.training_steps == 1234u);
    CHECK(back.config == m.config);
    REQUIRE(back.weights.size() == m.weights.size());
    for (const auto& [name, arr] : m.weights) {
        CHECK(back.weights.at(name).shape == arr.shape);
        CHECK(back.weights.at(name).values == arr.values);
    }
    const auto patches = some_patches(3, {32, 32}, 8);
    const auto batch = make_encoder_batch(m.config, patches, SpectrumNormalization::signed_log);
    const auto z1 = embed(m, batch);
    const auto z2 = embed(back, batch);
    for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1[i].values == z2[i].values);
}

TEST_CASE("corrupt, foreign and future model files are rejected") {
    const fs::path dir = fs::temp_directory_path() / "sisl_unit" / "model_bad";
    fs::create_directories(dir);
    const ModelState m = build_encoder(tiny(), 2);
    auto bytes = serialize_model(m);

    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(deserialize_model(flipped), DataError);

    auto foreign = bytes;
    foreign[0] = 'X';
    try {
        deserialize_model(foreign);
        CHECK(false);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }

    auto future = bytes;
    future[8] = 9;
    try {
        deserialize_model(future);
        CHECK(false);
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("newer") != std::string::npos);
    }

    auto truncated = bytes;
    truncated.resize(truncated.size() - 20);
    CHECK_THROWS_AS(deserialize_model(truncated), DataError);
    CHECK_THROWS_AS(load_model(dir / "missing.sislm"), DataError);
}

TEST_CASE("embeddings are not unit-normalized by the encoder") {
    const ModelState model = build_encoder(tiny(), 4);
    const auto batch = make_encoder_batch(model.config, some_patches(4, {32, 32}, 3), SpectrumNormalization::signed_log);
    const auto z = embed(model, batch);
    double norm = 0;
    for (float v : z[0].values) norm += v * v;
    CHECK(std::abs(norm - 1.0) > 1e-6);
}
