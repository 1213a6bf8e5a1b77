#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sisl/decision.hpp"
#include "sisl/manifest.hpp"

namespace sisl {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// Step-interpolated AP over descending score; equal scores form one step.
/// Throws UsageError on length mismatch or when no label is positive.
double average_precision(std::span<const double> scores, std::span<const int> labels);

/// Matthews correlation; 0 when any denominator factor is 0.
double mcc(const ConfusionCounts& c);

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

struct MaskScores {
    double f1 = 0.0;
    double iou = 0.0;
    ConfusionCounts counts;
};

/// Both 0 on a zero denominator, both 1 when pred and gt are empty.
MaskScores f1_iou(const BinaryMask& pred, const BinaryMask& gt);

/// One image to evaluate; gt is required for spliced items.
struct EvalItem {
    std::string id;
    Label label = Label::authentic;
    ResponseMap response;
    std::optional<BinaryMask> gt;
};

struct ImageRow {
    std::string id;
    Label label = Label::authentic;
    double score = 0.0;
    bool inverted = false;
    // localization, spliced images only
    std::optional<double> mcc;
    std::optional<double> f1;
    std::optional<double> iou;
};

struct MetricsReport {
    std::string dataset;
    Thresholds thresholds;
    DetectionMethod method = DetectionMethod::spavg;
    double ap = 0.0;
    double mean_mcc = 0.0;
    double mean_f1 = 0.0;
    double mean_iou = 0.0;
    std::size_t spliced = 0;
    std::vector<ImageRow> rows;  // sorted by id

    /// Header lines echo thresholds and method, then per-image rows.
    std::string to_csv() const;
    std::string summary() const;
};

/// Throws DataError when a spliced item lacks a mask or dimensions disagree.
MetricsReport evaluate_dataset(std::vector<EvalItem> items, const Thresholds& thresholds, DetectionMethod method,
                               const std::string& dataset = "dataset");

/// Mean IoU over spliced items at each delta_l in `grid`, after inversion.
std::vector<double> localization_sweep(std::span<const EvalItem> items, std::span<const double> grid);

/// {0.05, 0.10, ..., 0.95}
std::vector<double> default_threshold_grid();

}  // namespace sisl
