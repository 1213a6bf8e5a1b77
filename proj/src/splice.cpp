#include "sisl/splice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <opencv2/core.hpp>

#include "sisl/error.hpp"
#include "sisl/random.hpp"

namespace sisl {

namespace {

bool point_in_polygon(double r, double c, const std::vector<std::pair<double, double>>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto [ri, ci] = poly[i];
        const auto [rj, cj] = poly[j];
        if ((ri > r) != (rj > r)) {
            const double cross = ci + (r - ri) * (cj - ci) / (rj - ri);
            if (c < cross) inside = !inside;
        }
    }
    return inside;
}

struct RegionRasterizer {
    int height;
    int width;

    BinaryMask operator()(const RectRegion& rect) const {
        if (rect.height <= 0 || rect.width <= 0 || rect.top < 0 || rect.left < 0 ||
            rect.top + rect.height > height || rect.left + rect.width > width) {
            throw UsageError("splice rectangle out of host bounds");
        }
        BinaryMask mask(height, width);
        for (int r = rect.top; r < rect.top + rect.height; ++r) {
            for (int c = rect.left; c < rect.left + rect.width; ++c) mask.at(r, c) = 1;
        }
        return mask;
    }

    BinaryMask operator()(const PolygonRegion& poly) const {
        if (poly.vertices.size() < 3) {
            throw UsageError("splice polygon needs at least 3 vertices");
        }
        for (const auto& [r, c] : poly.vertices) {
            if (r < 0 || c < 0 || r > height || c > width) {
                throw UsageError("splice polygon vertex out of host bounds");
            }
        }
        BinaryMask mask(height, width);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                mask.at(r, c) = point_in_polygon(r + 0.5, c + 0.5, poly.vertices) ? 1 : 0;
            }
        }
        if (mask.count() == 0) {
            throw UsageError("splice polygon covers no pixels");
        }
        return mask;
    }
};

// Gaussian noise with a radial band-shaped power spectrum, rescaled to unit variance.
cv::Mat shaped_noise(int height, int width, const SignatureParams& sig, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    cv::Mat white(height, width, CV_64F);
    for (int r = 0; r < height; ++r) {
        auto* row = white.ptr<double>(r);
        for (int c = 0; c < width; ++c) row[c] = normal(rng);
    }
    cv::Mat spectrum;
    cv::dft(white, spectrum, cv::DFT_COMPLEX_OUTPUT);
    const double w2 = 2.0 * std::max(sig.spectrum_width, 1e-6) * std::max(sig.spectrum_width, 1e-6);
    for (int r = 0; r < height; ++r) {
        const double fy = (r <= height / 2 ? r : r - height) / static_cast<double>(height);
        auto* row = spectrum.ptr<cv::Vec2d>(r);
        for (int c = 0; c < width; ++c) {
            const double fx = (c <= width / 2 ? c : c - width) / static_cast<double>(width);
            const double d = std::hypot(fy, fx) - sig.spectrum_center;
            const double gain = std::exp(-d * d / w2);
            row[c] *= gain;
        }
    }
    cv::Mat shaped;
    cv::idft(spectrum, shaped, cv::DFT_REAL_OUTPUT | cv::DFT_SCALE);
    cv::Scalar mean, stddev;
    cv::meanStdDev(shaped, mean, stddev);
    const double sd = stddev[0] > 1e-12 ? stddev[0] : 1.0;
    shaped = (shaped - mean[0]) / sd;
    return shaped;
}

void quantize_blocks(cv::Mat& plane, double step) {
    constexpr int kBlock = 8;
    cv::Mat block(kBlock, kBlock, CV_64F);
    cv::Mat coeffs;
    for (int br = 0; br + kBlock <= plane.rows; br += kBlock) {
        for (int bc = 0; bc + kBlock <= plane.cols; bc += kBlock) {
            cv::Mat view = plane(cv::Rect(bc, br, kBlock, kBlock));
            block = view - 128.0;
            cv::dct(block, coeffs);
            for (int u = 0; u < kBlock; ++u) {
                auto* row = coeffs.ptr<double>(u);
                for (int v = 0; v < kBlock; ++v) {
                    const double q = step * (1.0 + 0.25 * (u + v));
                    row[v] = std::round(row[v] / q) * q;
                }
            }
            cv::idct(coeffs, block);
            view = block + 128.0;
        }
    }
}

}  // namespace

BinaryMask rasterize_region(const SpliceRegion& region, int height, int width) {
    return std::visit(RegionRasterizer{height, width}, region);
}

ImageRecord apply_signature(const ImageRecord& image, const SignatureParams& sig, std::uint64_t seed) {
    ImageRecord out(image.id, image.height, image.width);
    Rng rng(seed);
    for (int ch = 0; ch < kChannels; ++ch) {
        cv::Mat plane(image.height, image.width, CV_64F);
        for (int r = 0; r < image.height; ++r) {
            auto* row = plane.ptr<double>(r);
            for (int c = 0; c < image.width; ++c) row[c] = image.at(r, c, ch);
        }
        if (sig.noise_sigma > 0.0) {
            plane += sig.noise_sigma * shaped_noise(image.height, image.width, sig, rng);
        }
        if (sig.quant_step > 0.0) {
            quantize_blocks(plane, sig.quant_step);
        }
        for (int r = 0; r < image.height; ++r) {
            const auto* row = plane.ptr<double>(r);
            for (int c = 0; c < image.width; ++c) {
                out.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(row[c]), 0L, 255L));
            }
        }
    }
    return out;
}

SpliceResult generate_synthetic_splice(const ImageRecord& host, const ImageRecord& donor,
                                       const SpliceSpec& spec, std::uint64_t seed) {
    if (spec.signature_a == spec.signature_b) {
        throw UsageError("splice signatures are identical; the fixture would be vacuous");
    }
    if (donor.height < host.height || donor.width < host.width) {
        throw UsageError("donor " + donor.id + " smaller than host " + host.id);
    }
    SpliceResult result;
    result.mask = rasterize_region(spec.region, host.height, host.width);
    result.mask.image_id = host.id;

    const ImageRecord marked_host = apply_signature(host, spec.signature_a, mix_seed(seed, 1));
    const ImageRecord marked_donor = apply_signature(donor, spec.signature_b, mix_seed(seed, 2));
    result.image = marked_host;
    for (int r = 0; r < host.height; ++r) {
        for (int c = 0; c < host.width; ++c) {
            if (!result.mask.at(r, c)) continue;
            for (int ch = 0; ch < kChannels; ++ch) result.image.at(r, c, ch) = marked_donor.at(r, c, ch);
        }
    }
    return result;
}

ImageRecord synthesize_content(std::string id, int height, int width, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    constexpr int kColors = 3;
    std::array<std::array<double, kChannels>, kColors> palette{};
    for (auto& color : palette) {
        for (auto& v : color) v = 50.0 + 155.0 * unit(rng);
    }

    struct Blob {
        double r, c, sigma, amp;
        int color;
    };
    std::vector<Blob> blobs(8);
    const double scale = std::min(height, width);
    for (auto& b : blobs) {
        b.r = unit(rng) * height;
        b.c = unit(rng) * width;
        b.sigma = scale * (0.12 + 0.3 * unit(rng));
        b.amp = 0.5 + unit(rng);
        b.color = static_cast<int>(unit(rng) * kColors) % kColors;
    }
    const double wave_fy = (unit(rng) - 0.5) * 4.0 / height;
    const double wave_fx = (unit(rng) - 0.5) * 4.0 / width;
    const double wave_phase = unit(rng) * 2.0 * std::numbers::pi;
    const double wave_amp = 8.0 + 10.0 * unit(rng);

    ImageRecord image(std::move(id), height, width);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            std::array<double, kColors> weight{0.2, 0.2, 0.2};
            for (const auto& b : blobs) {
                const double dr = r - b.r, dc = c - b.c;
                weight[b.color] += b.amp * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
            }
            const double total = weight[0] + weight[1] + weight[2];
            const double shade =
                wave_amp * std::sin(2.0 * std::numbers::pi * (wave_fy * r + wave_fx * c) + wave_phase);
            for (int ch = 0; ch < kChannels; ++ch) {
                double v = shade;
                for (int k = 0; k < kColors; ++k) v += weight[k] / total * palette[k][ch];
                image.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return image;
}

}  // namespace sisl
