#include "sisl/spectral.hpp"

#include <cstring>
#include <cmath>

#include <opencv2/core.hpp>

#include "sisl/binary_io.hpp"
#include "sisl/error.hpp"

namespace sisl {

const char* to_string(SpectrumNormalization mode) {
    return mode == SpectrumNormalization::signed_log ? "signed_log" : "none";
}

SpectrumNormalization parse_normalization(const std::string& text) {
    if (text == "none") return SpectrumNormalization::none;
    if (text == "signed_log") return SpectrumNormalization::signed_log;
    throw UsageError("unknown spectrum normalization '" + text + "'");
}

std::vector<double> rfft_real(std::span<const double> plane, int rows, int cols) {
    if (rows <= 0 || cols <= 0 || plane.size() != static_cast<std::size_t>(rows) * cols) {
        throw UsageError("rfft_real: plane size does not match shape");
    }
    for (double v : plane) {
        if (!std::isfinite(v)) throw NumericalError("rfft_real: non-finite pixel value");
    }
    const cv::Mat input(rows, cols, CV_64F, const_cast<double*>(plane.data()));
    cv::Mat spectrum;
    cv::dft(input, spectrum, cv::DFT_COMPLEX_OUTPUT);

    const int half = half_spectrum_width(cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows) * cols);
    std::vector<double> out(static_cast<std::size_t>(rows) * half);
    for (int m = 0; m < rows; ++m) {
        const auto* row = spectrum.ptr<cv::Vec2d>(m);
        for (int n = 0; n < half; ++n) out[static_cast<std::size_t>(m) * half + n] = row[n][0] * scale;
    }
    return out;
}

SpectralFeature rfft_features(std::span<const double> planes, int channels, int rows, int cols) {
    const std::size_t plane_size = static_cast<std::size_t>(rows) * cols;
    if (planes.size() != plane_size * channels) {
        throw UsageError("rfft_features: buffer size does not match shape");
    }
    SpectralFeature f;
    f.channels = channels;
    f.rows = rows;
    f.cols = half_spectrum_width(cols);
    f.coefficients.reserve(static_cast<std::size_t>(channels) * rows * f.cols);
    for (int ch = 0; ch < channels; ++ch) {
        const auto coeffs = rfft_real(planes.subspan(ch * plane_size, plane_size), rows, cols);
        f.coefficients.insert(f.coefficients.end(), coeffs.begin(), coeffs.end());
    }
    return f;
}

SpectralFeature rfft_features(const Patch& patch) {
    const std::size_t plane_size = static_cast<std::size_t>(patch.height) * patch.width;
    std::vector<double> planes(plane_size * kChannels);
    for (int r = 0; r < patch.height; ++r) {
        for (int c = 0; c < patch.width; ++c) {
            for (int ch = 0; ch < kChannels; ++ch) {
                planes[ch * plane_size + static_cast<std::size_t>(r) * patch.width + c] =
                    patch.at(r, c, ch) / 255.0;
            }
        }
    }
    SpectralFeature f = rfft_features(planes, kChannels, patch.height, patch.width);
    f.source_id = patch.source_id;
    f.top = patch.top;
    f.left = patch.left;
    return f;
}

SpectralFeature normalize_spectrum(const SpectralFeature& feature, SpectrumNormalization mode) {
    SpectralFeature out = feature;
    out.normalization = mode;
    if (mode == SpectrumNormalization::signed_log) {
        for (double& x : out.coefficients) x = std::copysign(std::log1p(std::abs(x)), x);
    }
    return out;
}

namespace {
constexpr char kSpecMagic[8] = {'S', 'I', 'S', 'L', 'S', 'P', 'E', 'C'};
}

void write_spectral_dump(const SpectralFeature& feature, const std::filesystem::path& path) {
    binio::Writer w;
    w.put_bytes(kSpecMagic, sizeof(kSpecMagic));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(feature.channels));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(feature.rows));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(feature.cols));
    for (double v : feature.coefficients) w.put<float>(static_cast<float>(v));
    binio::write_file(path.string(), w.bytes());
}

SpectralFeature read_spectral_dump(const std::filesystem::path& path) {
    const auto bytes = binio::read_file(path.string());
    binio::Reader r(bytes.data(), bytes.size(), path.string());
    char magic[8];
    r.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kSpecMagic, sizeof(magic)) != 0) {
        throw DataError(path.string() + ": not a spectral dump (bad magic)");
    }
    SpectralFeature f;
    f.channels = static_cast<int>(r.get<std::uint32_t>());
    f.rows = static_cast<int>(r.get<std::uint32_t>());
    f.cols = static_cast<int>(r.get<std::uint32_t>());
    const std::size_t n = static_cast<std::size_t>(f.channels) * f.rows * f.cols;
    if (r.remaining() != n * sizeof(float)) {
        throw DataError(path.string() + ": payload size does not match header");
    }
    f.coefficients.resize(n);
    for (auto& v : f.coefficients) v = r.get<float>();
    return f;
}

}  // namespace sisl
