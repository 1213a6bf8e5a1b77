#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sisl/image.hpp"

namespace sisl {

enum class SpectrumNormalization { none, signed_log };

const char* to_string(SpectrumNormalization mode);
SpectrumNormalization parse_normalization(const std::string& text);

/// Real part of the orthonormal 2-D DFT of each channel, keeping the
/// non-redundant half of the last axis: shape channels x rows x (cols/2 + 1).
struct SpectralFeature {
    int channels = 0;
    int rows = 0;       // U
    int cols = 0;       // floor(V/2) + 1
    std::vector<double> coefficients;  // channel-major, then row-major
    std::string source_id;
    int top = 0;
    int left = 0;
    SpectrumNormalization normalization = SpectrumNormalization::none;

    double at(int ch, int m, int n) const {
        return coefficients[(static_cast<std::size_t>(ch) * rows + m) * cols + n];
    }
};

constexpr int half_spectrum_width(int width) { return width / 2 + 1; }

/// Half-spectrum real coefficients of one real plane (rows x cols, row-major):
///   f(m,n) = 1/sqrt(UV) * sum_{u,v} p(u,v) cos(2 pi (m u / U + n v / V)).
/// Throws NumericalError on non-finite input.
std::vector<double> rfft_real(std::span<const double> plane, int rows, int cols);

/// Pixels are scaled to [0,1] and transformed per channel. Output is unnormalized.
SpectralFeature rfft_features(const Patch& patch);

/// Same transform applied to a real-valued planar patch (channels x rows x cols).
SpectralFeature rfft_features(std::span<const double> planes, int channels, int rows, int cols);

/// none: identity. signed_log: x -> sign(x) * log(1 + |x|).
SpectralFeature normalize_spectrum(const SpectralFeature& feature, SpectrumNormalization mode);

/// Debug dump: "SISLSPEC", then C, U, cols as u32 LE, then float32 LE values.
void write_spectral_dump(const SpectralFeature& feature, const std::filesystem::path& path);
SpectralFeature read_spectral_dump(const std::filesystem::path& path);

}  // namespace sisl
