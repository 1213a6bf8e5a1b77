#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sisl/image.hpp"

namespace sisl {

/// Synthetic camera fingerprint: additive Gaussian noise whose power spectrum
/// follows a radial band envelope, optionally followed by 8x8 block DCT
/// quantization (JPEG-like). Frequencies are in cycles/pixel, in [0, 0.5*sqrt(2)].
struct SignatureParams {
    double noise_sigma = 6.0;       // std-dev of the noise field, 8-bit levels
    double spectrum_center = 0.25;  // radial frequency of the envelope peak
    double spectrum_width = 0.1;    // Gaussian width of the envelope
    double quant_step = 0.0;        // DCT quantization step; 0 disables

    bool operator==(const SignatureParams&) const = default;
};

struct RectRegion {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;
};

/// Vertices as (row, col); a pixel belongs to the region when its center is inside.
struct PolygonRegion {
    std::vector<std::pair<double, double>> vertices;
};

using SpliceRegion = std::variant<RectRegion, PolygonRegion>;

struct SpliceSpec {
    std::string donor_id;
    std::string host_id;
    SpliceRegion region;
    SignatureParams signature_a;  // host fingerprint
    SignatureParams signature_b;  // donor fingerprint
};

struct SpliceResult {
    ImageRecord image;
    BinaryMask mask;
};

/// Rasterizes the region; throws UsageError if it is not strictly inside the bounds.
BinaryMask rasterize_region(const SpliceRegion& region, int height, int width);

/// Adds the signature's noise and quantization to every pixel.
ImageRecord apply_signature(const ImageRecord& image, const SignatureParams& signature,
                            std::uint64_t seed);

/// Host outside the region carries signature_a, donor content inside carries
/// signature_b; the donor is read at the same coordinates as the host.
SpliceResult generate_synthetic_splice(const ImageRecord& host, const ImageRecord& donor,
                                       const SpliceSpec& spec, std::uint64_t seed);

/// Procedural smooth scene content (no fingerprint) used as host or donor.
ImageRecord synthesize_content(std::string id, int height, int width, std::uint64_t seed);

}  // namespace sisl
