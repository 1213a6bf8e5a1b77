#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "../oracles.hpp"
#include "sisl/error.hpp"
#include "sisl/spectral.hpp"

using namespace sisl;

namespace {

std::vector<double> random_plane(std::mt19937_64& rng, int U, int V) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(U) * V);
    for (auto& v : p) v = u(rng);
    return p;
}

}  // namespace

TEST_CASE("rfft_real matches the direct cosine sum") {
    std::mt19937_64 rng(11);
    for (auto [U, V] : {std::pair{4, 4}, {8, 8}, {16, 16}, {5, 7}, {6, 9}, {1, 8}}) {
        const auto plane = random_plane(rng, U, V);
        const auto got = rfft_real(plane, U, V);
        const auto want = oracle::dft_real_half(plane, U, V);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);
    }
}

TEST_CASE("constant patch concentrates in the DC coefficient") {
    const int U = 8, V = 8;
    std::vector<double> plane(U * V, 0.6);
    const auto f = rfft_real(plane, U, V);
    CHECK(f[0] == doctest::Approx(0.6 * std::sqrt(U * V)));
    for (std::size_t i = 1; i < f.size(); ++i) CHECK(std::abs(f[i]) < 1e-12);
}

TEST_CASE("zero patch gives all-zero coefficients") {
    std::vector<double> plane(16 * 16, 0.0);
    for (double v : rfft_real(plane, 16, 16)) CHECK(v == 0.0);
}

TEST_CASE("odd width keeps floor(V/2)+1 columns") {
    CHECK(half_spectrum_width(128) == 65);
    CHECK(half_spectrum_width(7) == 4);
    std::vector<double> plane(3 * 7, 1.0);
    CHECK(rfft_real(plane, 3, 7).size() == 3u * 4u);
}

TEST_CASE("non-finite input is rejected") {
    std::vector<double> plane(16, 0.0);
    plane[5] = std::nan("");
    CHECK_THROWS_AS(rfft_real(plane, 4, 4), NumericalError);
}

TEST_CASE("rfft_features scales 8-bit pixels to [0,1] per channel") {
    Patch p;
    p.source_id = "x";
    p.height = 4;
    p.width = 6;
    p.top = 3;
    p.left = 5;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> px(0, 255);
    p.pixels.resize(4 * 6 * 3);
    for (auto& v : p.pixels) v = static_cast<std::uint8_t>(px(rng));
    const SpectralFeature f = rfft_features(p);
    CHECK(f.channels == 3);
    CHECK(f.rows == 4);
    CHECK(f.cols == 4);
    CHECK(f.top == 3);
    CHECK(f.left == 5);
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> plane(24);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 6; ++c) plane[r * 6 + c] = p.at(r, c, ch) / 255.0;
        const auto want = oracle::dft_real_half(plane, 4, 6);
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) CHECK(f.at(ch, m, n) == doctest::Approx(want[m * 4 + n]));
    }
}

TEST_CASE("signed_log normalization") {
    SpectralFeature f;
    f.channels = 1;
    f.rows = 1;
    f.cols = 4;
    f.coefficients = {0.0, -(std::exp(1.0) - 1.0), 3.0, -0.25};
    const auto g = normalize_spectrum(f, SpectrumNormalization::signed_log);
    CHECK(g.coefficients[0] == 0.0);
    CHECK(g.coefficients[1] == doctest::Approx(-1.0));
    CHECK(g.coefficients[2] == doctest::Approx(std::log(4.0)));
    CHECK(g.coefficients[3] == doctest::Approx(-std::log(1.25)));
    CHECK(g.normalization == SpectrumNormalization::signed_log);
    const auto h = normalize_spectrum(f, SpectrumNormalization::none);
    CHECK(h.coefficients == f.coefficients);
}

TEST_CASE("signed_log is odd and monotone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-50, 50);
    SpectralFeature f;
    f.channels = 1;
    f.rows = 1;
    f.cols = 200;
    for (int i = 0; i < 200; ++i) f.coefficients.push_back(u(rng));
    SpectralFeature neg = f;
    for (auto& v : neg.coefficients) v = -v;
    const auto a = normalize_spectrum(f, SpectrumNormalization::signed_log);
    const auto b = normalize_spectrum(neg, SpectrumNormalization::signed_log);
    for (int i = 0; i < 200; ++i) {
        CHECK(a.coefficients[i] == doctest::Approx(-b.coefficients[i]));
        for (int j = 0; j < 200; j += 17) {
            if (f.coefficients[i] < f.coefficients[j]) CHECK(a.coefficients[i] < a.coefficients[j]);
        }
    }
}

TEST_CASE("spectral dump round trip") {
    SpectralFeature f;
    f.channels = 3;
    f.rows = 4;
    f.cols = 3;
    for (int i = 0; i < 36; ++i) f.coefficients.push_back(0.125 * i - 2.0);
    const auto path = std::filesystem::temp_directory_path() / "sisl_spec_dump.bin";
    write_spectral_dump(f, path);
    CHECK(std::filesystem::file_size(path) == 20u + 36u * 4u);
    const auto g = read_spectral_dump(path);
    CHECK(g.channels == 3);
    CHECK(g.rows == 4);
    CHECK(g.cols == 3);
    CHECK(g.coefficients == f.coefficients);
    std::filesystem::remove(path);
}

TEST_CASE("parse_normalization") {
    CHECK(parse_normalization("none") == SpectrumNormalization::none);
    CHECK(parse_normalization("signed_log") == SpectrumNormalization::signed_log);
    CHECK_THROWS_AS(parse_normalization("log"), UsageError);
}
