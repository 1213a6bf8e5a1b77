#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sisl {

inline constexpr int kChannels = 3;

/// An 8-bit RGB raster, row-major with interleaved channels.
struct ImageRecord {
    std::string id;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * kChannels

    ImageRecord() = default;
    ImageRecord(std::string id_, int h, int w, std::uint8_t fill = 0)
        : id(std::move(id_)), height(h), width(w),
          pixels(static_cast<std::size_t>(h) * w * kChannels, fill) {}

    std::uint8_t& at(int r, int c, int ch) {
        return pixels[(static_cast<std::size_t>(r) * width + c) * kChannels + ch];
    }
    std::uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * kChannels + ch];
    }
};

/// A per-pixel boolean raster (1 = spliced / flagged).
struct BinaryMask {
    std::string image_id;
    double threshold = 0.0;  // threshold that produced the mask, when thresholded
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;  // 0 or 1, row-major

    BinaryMask() = default;
    BinaryMask(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t count() const;
};

struct PatchSize {
    int height = 128;
    int width = 128;
    bool operator==(const PatchSize&) const = default;
};

/// A verbatim crop of a source image.
struct Patch {
    std::string source_id;
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * kChannels, interleaved

    std::uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * kChannels + ch];
    }
};

struct GridGeometry {
    PatchSize patch;
    int stride = 64;
    int rows = 0;
    int cols = 0;
    int image_height = 0;
    int image_width = 0;

    int count() const { return rows * cols; }
};

/// Fully contained patches at offsets (i*stride, j*stride), row-major.
struct PatchGrid {
    GridGeometry geometry;
    std::vector<Patch> patches;

    int rows() const { return geometry.rows; }
    int cols() const { return geometry.cols; }
    int count() const { return geometry.count(); }
};

/// Decodes PNG/JPEG into RGB. Grayscale input is replicated to three channels
/// and reported on stderr. Throws DataError on a missing or undecodable file.
ImageRecord load_image(const std::filesystem::path& path, std::string id = {});
void save_png(const ImageRecord& image, const std::filesystem::path& path);

/// Any nonzero pixel counts as set.
BinaryMask load_mask(const std::filesystem::path& path);
/// Writes 0 / 255.
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

Patch crop(const ImageRecord& image, int top, int left, PatchSize size);

/// rows = floor((H-U)/s)+1, cols = floor((W-V)/s)+1. Throws UsageError when the
/// patch does not fit or the stride is not positive.
PatchGrid extract_grid_patches(const ImageRecord& image, PatchSize size, int stride);
GridGeometry grid_geometry(int image_height, int image_width, PatchSize size, int stride);

/// `count` crops at uniformly random contained offsets; deterministic in `seed`.
std::vector<Patch> sample_training_patches(const ImageRecord& image, PatchSize size, int count,
                                           std::uint64_t seed);

}  // namespace sisl
