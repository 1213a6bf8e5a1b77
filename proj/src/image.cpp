#include "sisl/image.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sisl/error.hpp"
#include "sisl/random.hpp"

namespace sisl {

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

ImageRecord load_image(const std::filesystem::path& path, std::string id) {
    if (!std::filesystem::exists(path)) {
        throw DataError("image not found: " + path.string());
    }
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) {
        throw DataError("cannot decode image: " + path.string());
    }
    if (raw.depth() != CV_8U) {
        raw.convertTo(raw, CV_8U, raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    }
    cv::Mat rgb;
    switch (raw.channels()) {
        case 1:
            std::cerr << "warning: " << path.string() << " is grayscale, replicating to 3 channels\n";
            cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB);
            break;
        case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
        default:
            throw DataError("unsupported channel count " + std::to_string(raw.channels()) + ": " +
                            path.string());
    }
    ImageRecord image(id.empty() ? path.stem().string() : std::move(id), rgb.rows, rgb.cols);
    for (int r = 0; r < rgb.rows; ++r) {
        const auto* row = rgb.ptr<std::uint8_t>(r);
        std::copy(row, row + static_cast<std::size_t>(rgb.cols) * kChannels,
                  image.pixels.begin() + static_cast<std::ptrdiff_t>(r) * rgb.cols * kChannels);
    }
    return image;
}

namespace {

void write_or_throw(const std::filesystem::path& path, const cv::Mat& mat) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat);
    } catch (const cv::Exception& e) {
        throw DataError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) {
        throw DataError("cannot write " + path.string());
    }
}

}  // namespace

void save_png(const ImageRecord& image, const std::filesystem::path& path) {
    cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    write_or_throw(path, bgr);
}

BinaryMask load_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("mask not found: " + path.string());
    }
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (raw.empty()) {
        throw DataError("cannot decode mask: " + path.string());
    }
    BinaryMask mask(raw.rows, raw.cols);
    for (int r = 0; r < raw.rows; ++r) {
        const auto* row = raw.ptr<std::uint8_t>(r);
        for (int c = 0; c < raw.cols; ++c) mask.at(r, c) = row[c] != 0 ? 1 : 0;
    }
    return mask;
}

void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
    cv::Mat out(mask.height, mask.width, CV_8UC1);
    for (int r = 0; r < mask.height; ++r) {
        auto* row = out.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.width; ++c) row[c] = mask.at(r, c) ? 255 : 0;
    }
    write_or_throw(path, out);
}

Patch crop(const ImageRecord& image, int top, int left, PatchSize size) {
    if (top < 0 || left < 0 || top + size.height > image.height || left + size.width > image.width) {
        throw UsageError("crop outside image " + image.id);
    }
    Patch patch;
    patch.source_id = image.id;
    patch.top = top;
    patch.left = left;
    patch.height = size.height;
    patch.width = size.width;
    patch.pixels.resize(static_cast<std::size_t>(size.height) * size.width * kChannels);
    const std::size_t row_bytes = static_cast<std::size_t>(size.width) * kChannels;
    for (int r = 0; r < size.height; ++r) {
        const auto* src = &image.pixels[(static_cast<std::size_t>(top + r) * image.width + left) * kChannels];
        std::copy(src, src + row_bytes, patch.pixels.begin() + static_cast<std::ptrdiff_t>(r * row_bytes));
    }
    return patch;
}

namespace {

void check_fits(int image_height, int image_width, PatchSize size) {
    if (size.height <= 0 || size.width <= 0) {
        throw UsageError("patch size must be positive");
    }
    if (size.height > image_height || size.width > image_width) {
        throw UsageError("patch " + std::to_string(size.height) + "x" + std::to_string(size.width) +
                         " larger than image " + std::to_string(image_height) + "x" +
                         std::to_string(image_width));
    }
}

}  // namespace

GridGeometry grid_geometry(int image_height, int image_width, PatchSize size, int stride) {
    check_fits(image_height, image_width, size);
    if (stride < 1) {
        throw UsageError("stride must be >= 1");
    }
    GridGeometry g;
    g.patch = size;
    g.stride = stride;
    g.rows = (image_height - size.height) / stride + 1;
    g.cols = (image_width - size.width) / stride + 1;
    g.image_height = image_height;
    g.image_width = image_width;
    return g;
}

PatchGrid extract_grid_patches(const ImageRecord& image, PatchSize size, int stride) {
    PatchGrid grid;
    grid.geometry = grid_geometry(image.height, image.width, size, stride);
    grid.patches.reserve(static_cast<std::size_t>(grid.count()));
    for (int i = 0; i < grid.rows(); ++i) {
        for (int j = 0; j < grid.cols(); ++j) {
            grid.patches.push_back(crop(image, i * stride, j * stride, size));
        }
    }
    return grid;
}

std::vector<Patch> sample_training_patches(const ImageRecord& image, PatchSize size, int count,
                                           std::uint64_t seed) {
    check_fits(image.height, image.width, size);
    Rng rng(seed);
    std::uniform_int_distribution<int> top_dist(0, image.height - size.height);
    std::uniform_int_distribution<int> left_dist(0, image.width - size.width);
    std::vector<Patch> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int k = 0; k < count; ++k) {
        const int top = top_dist(rng);
        const int left = left_dist(rng);
        out.push_back(crop(image, top, left, size));
    }
    return out;
}

}  // namespace sisl
