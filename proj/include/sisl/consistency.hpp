#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sisl/encoder.hpp"
#include "sisl/image.hpp"

namespace sisl {

/// J x J cosine similarities between all patch embeddings of one image,
/// row-major over the patch grid.
struct ConsistencyMatrix {
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXd values;
    std::vector<PatchOrigin> patches;

    int count() const { return static_cast<int>(values.rows()); }
};

/// Exactly symmetric with a unit diagonal. Throws NumericalError on a zero-norm
/// embedding and UsageError if J < 2 or J != rows * cols.
ConsistencyMatrix pairwise_consistency(std::span<const Embedding> embeddings, int rows, int cols);
/// Same computation on a J x D matrix of embedding rows.
ConsistencyMatrix pairwise_consistency(const Eigen::MatrixXf& embeddings, int rows, int cols);

enum class Aggregation { meanshift, simple_mean };

const char* to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& text);

struct MeanShiftConfig {
    std::optional<double> bandwidth;  // nullopt: median pairwise distance, floored at 1e-3
    double tolerance = 1e-5;
    int max_iterations = 100;
    Aggregation aggregation = Aggregation::meanshift;

    void validate() const;
};

/// Median pairwise Euclidean distance between rows, floored at 1e-3.
double auto_bandwidth(const Eigen::MatrixXd& points);

/// Gaussian-kernel mean shift started from the row of highest kernel density
/// (lowest index on ties). Rows of `points` are the samples.
Eigen::VectorXd meanshift_mode(const Eigen::MatrixXd& points, const MeanShiftConfig& config);

/// A per-patch scalar field over the grid, row-major.
struct PatchField {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// The matrix rows are clustered and the dominant mode, mapped from [-1,1] to
/// [0,1], is the consensus consistency. Returns the response 1 - consistency.
PatchField aggregate_response(const ConsistencyMatrix& matrix, const MeanShiftConfig& config);

/// H x W manipulation likelihood in [0,1].
struct ResponseMap {
    std::string image_id;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    ResponseMap() = default;
    ResponseMap(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    double mean() const;
};

/// Pixel coordinate of the value attached to grid row/column `index`.
double patch_center(int index, int stride, int patch_extent);

/// Field values sit at patch centers (offset + extent/2); bilinear in between,
/// clamped to the nearest center outside their hull.
ResponseMap upsample_response(const PatchField& field, const GridGeometry& geometry);

/// 8-bit grayscale, value round(255 R).
void save_response_png(const ResponseMap& map, const std::filesystem::path& path);
/// "SISLRESP" | u32 H | u32 W | f32 values, little-endian.
void write_response_raw(const ResponseMap& map, const std::filesystem::path& path);
ResponseMap read_response_raw(const std::filesystem::path& path);

}  // namespace sisl
