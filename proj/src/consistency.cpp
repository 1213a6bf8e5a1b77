#include "sisl/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <opencv2/imgcodecs.hpp>

#include "sisl/binary_io.hpp"
#include "sisl/error.hpp"

namespace sisl {

const char* to_string(Aggregation a) { return a == Aggregation::simple_mean ? "simple_mean" : "meanshift"; }

Aggregation parse_aggregation(const std::string& text) {
    if (text == "meanshift") return Aggregation::meanshift;
    if (text == "simple_mean") return Aggregation::simple_mean;
    throw UsageError("unknown aggregation '" + text + "'");
}

void MeanShiftConfig::validate() const {
    if (bandwidth && !(*bandwidth > 0.0)) throw UsageError("meanshift bandwidth must be > 0");
    if (!(tolerance > 0.0)) throw UsageError("meanshift tolerance must be > 0");
    if (max_iterations < 1) throw UsageError("meanshift max_iterations must be >= 1");
}

ConsistencyMatrix pairwise_consistency(const Eigen::MatrixXf& embeddings, int rows, int cols) {
    const auto J = embeddings.rows();
    if (J < 2) throw UsageError("consistency needs at least 2 patches, got " + std::to_string(J));
    if (J != static_cast<Eigen::Index>(rows) * cols) throw UsageError("embedding count does not match grid");
    // a non-finite entry makes its row norm non-finite, so one pass over the norms covers both checks
    const Eigen::VectorXf norms = embeddings.rowwise().norm();
    for (Eigen::Index j = 0; j < J; ++j) {
        if (!std::isfinite(norms[j])) throw NumericalError("consistency: non-finite embedding at patch " + std::to_string(j));
        if (!(norms[j] > 0.0f)) throw NumericalError("consistency: zero-norm embedding at patch " + std::to_string(j));
    }
    Eigen::MatrixXf gram(J, J);
    gram.noalias() = embeddings * embeddings.transpose();
    const Eigen::VectorXd inv = norms.cast<double>().cwiseInverse();

    ConsistencyMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(J, J);
    // upper triangle computed, lower mirrored, so the result is exactly symmetric
    for (Eigen::Index j = 0; j < J; ++j) {
        for (Eigen::Index i = 0; i < j; ++i)
            m.values(i, j) = std::clamp(static_cast<double>(gram(i, j)) * inv[i] * inv[j], -1.0, 1.0);
        m.values(j, j) = 1.0;
    }
    m.values.triangularView<Eigen::StrictlyLower>() = m.values.transpose();
    return m;
}

ConsistencyMatrix pairwise_consistency(std::span<const Embedding> embeddings, int rows, int cols) {
    if (embeddings.empty()) throw UsageError("consistency needs at least 2 patches, got 0");
    const auto D = static_cast<Eigen::Index>(embeddings.front().dim());
    Eigen::MatrixXf z(static_cast<Eigen::Index>(embeddings.size()), D);
    for (std::size_t j = 0; j < embeddings.size(); ++j) {
        if (embeddings[j].dim() != static_cast<std::size_t>(D)) throw UsageError("embedding dimension mismatch");
        z.row(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::RowVectorXf>(embeddings[j].values.data(), D);
    }
    ConsistencyMatrix m = pairwise_consistency(z, rows, cols);
    for (const auto& e : embeddings) m.patches.push_back({e.source_id, e.top, e.left});
    return m;
}

double auto_bandwidth(const Eigen::MatrixXd& points) {
    const auto n = points.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((points.row(i) - points.row(j)).norm());
    }
    if (d.empty()) return 1e-3;
    std::sort(d.begin(), d.end());
    const std::size_t mid = d.size() / 2;
    const double median = d.size() % 2 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
    return std::max(median, 1e-3);
}

Eigen::VectorXd meanshift_mode(const Eigen::MatrixXd& points, const MeanShiftConfig& config) {
    config.validate();
    const auto n = points.rows();
    if (n < 1) throw UsageError("meanshift needs at least one point");
    if (n == 1) return points.row(0).transpose();
    const double h = config.bandwidth.value_or(auto_bandwidth(points));
    const double inv2h2 = 1.0 / (2.0 * h * h);

    Eigen::Index start = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double density = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) density += std::exp(-(points.row(i) - points.row(j)).squaredNorm() * inv2h2);
        if (density > best) {
            best = density;
            start = i;
        }
    }

    Eigen::VectorXd x = points.row(start).transpose();
    Eigen::VectorXd next(points.cols());
    for (int it = 0; it < config.max_iterations; ++it) {
        next.setZero();
        double total = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = std::exp(-(points.row(j).transpose() - x).squaredNorm() * inv2h2);
            next += w * points.row(j).transpose();
            total += w;
        }
        next /= total;
        const double shift = (next - x).norm();
        x = next;
        if (shift < config.tolerance) break;
    }
    return x;
}

PatchField aggregate_response(const ConsistencyMatrix& matrix, const MeanShiftConfig& config) {
    const int J = matrix.count();
    if (J != matrix.rows * matrix.cols) throw UsageError("consistency matrix does not match its grid");
    Eigen::VectorXd consensus;
    if (config.aggregation == Aggregation::simple_mean) {
        consensus = matrix.values.colwise().mean().transpose();
    } else {
        consensus = meanshift_mode(matrix.values, config);
    }
    PatchField field;
    field.rows = matrix.rows;
    field.cols = matrix.cols;
    field.values.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        const double consistency = std::clamp((consensus[j] + 1.0) * 0.5, 0.0, 1.0);
        field.values[j] = 1.0 - consistency;
    }
    return field;
}

double ResponseMap::mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double patch_center(int index, int stride, int patch_extent) {
    return static_cast<double>(index) * stride + patch_extent / 2.0;
}

namespace {

// Fractional grid coordinate of pixel p along an axis, clamped to [0, n-1].
double grid_coordinate(int p, int n, int stride, int extent) {
    if (n == 1) return 0.0;
    const double t = (p - patch_center(0, stride, extent)) / stride;
    return std::clamp(t, 0.0, static_cast<double>(n - 1));
}

}  // namespace

ResponseMap upsample_response(const PatchField& field, const GridGeometry& g) {
    if (field.rows != g.rows || field.cols != g.cols ||
        field.values.size() != static_cast<std::size_t>(g.rows) * g.cols || g.rows < 1 || g.cols < 1) {
        throw UsageError("response field " + std::to_string(field.rows) + "x" + std::to_string(field.cols) +
                         " does not match grid " + std::to_string(g.rows) + "x" + std::to_string(g.cols));
    }
    for (double v : field.values) {
        if (!std::isfinite(v)) throw NumericalError("upsample_response: non-finite field value");
    }
    ResponseMap map(g.image_height, g.image_width);
    std::vector<int> x0(g.image_width);
    std::vector<double> fx(g.image_width);
    for (int c = 0; c < g.image_width; ++c) {
        const double t = grid_coordinate(c, g.cols, g.stride, g.patch.width);
        x0[c] = std::min(static_cast<int>(std::floor(t)), std::max(g.cols - 2, 0));
        fx[c] = t - x0[c];
    }
    for (int r = 0; r < g.image_height; ++r) {
        const double t = grid_coordinate(r, g.rows, g.stride, g.patch.height);
        const int y0 = std::min(static_cast<int>(std::floor(t)), std::max(g.rows - 2, 0));
        const double fy = t - y0;
        const int y1 = std::min(y0 + 1, g.rows - 1);
        for (int c = 0; c < g.image_width; ++c) {
            const int xa = x0[c];
            const int xb = std::min(xa + 1, g.cols - 1);
            const double top = (1.0 - fx[c]) * field.at(y0, xa) + fx[c] * field.at(y0, xb);
            const double bottom = (1.0 - fx[c]) * field.at(y1, xa) + fx[c] * field.at(y1, xb);
            map.at(r, c) = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
        }
    }
    return map;
}

void save_response_png(const ResponseMap& map, const std::filesystem::path& path) {
    cv::Mat out(map.height, map.width, CV_8UC1);
    for (int r = 0; r < map.height; ++r) {
        auto* row = out.ptr<std::uint8_t>(r);
        for (int c = 0; c < map.width; ++c) {
            row[c] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(map.at(r, c), 0.0, 1.0)));
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), out)) throw DataError("cannot write " + path.string());
}

namespace {
constexpr char kRespMagic[8] = {'S', 'I', 'S', 'L', 'R', 'E', 'S', 'P'};
}

void write_response_raw(const ResponseMap& map, const std::filesystem::path& path) {
    binio::Writer w;
    w.put_bytes(kRespMagic, sizeof(kRespMagic));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(map.height));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(map.width));
    for (double v : map.values) w.put<float>(static_cast<float>(v));
    binio::write_file(path.string(), w.bytes());
}

ResponseMap read_response_raw(const std::filesystem::path& path) {
    const auto bytes = binio::read_file(path.string());
    binio::Reader r(bytes.data(), bytes.size(), path.string());
    char magic[8];
    r.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kRespMagic, sizeof(magic)) != 0) {
        throw DataError(path.string() + ": not a response file (bad magic)");
    }
    const int h = static_cast<int>(r.get<std::uint32_t>());
    const int w = static_cast<int>(r.get<std::uint32_t>());
    if (r.remaining() != static_cast<std::size_t>(h) * w * sizeof(float)) {
        throw DataError(path.string() + ": payload size does not match header");
    }
    ResponseMap map(h, w);
    for (auto& v : map.values) v = r.get<float>();
    map.image_id = path.stem().string();
    return map;
}

}  // namespace sisl
