#include "sisl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sisl/error.hpp"

namespace sisl {

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw UsageError("average_precision: scores and labels differ in length");
    const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; }));
    if (positives == 0) throw UsageError("average_precision: no positive labels, AP is undefined");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += labels[order[j]] != 0;
            ++j;
        }
        seen = j;
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double mcc(const ConfusionCounts& c) {
    const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    const double d = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (d == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(d);
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width || pred.values.size() != gt.values.size()) {
        throw DataError("mask dimensions differ: " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                        " vs " + std::to_string(gt.height) + "x" + std::to_string(gt.width));
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] != 0, g = gt.values[i] != 0;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MaskScores f1_iou(const BinaryMask& pred, const BinaryMask& gt) {
    MaskScores s;
    s.counts = confusion(pred, gt);
    const auto& c = s.counts;
    if (c.tp + c.fp + c.fn == 0) {
        s.f1 = s.iou = 1.0;
        return s;
    }
    s.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    s.iou = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
    return s;
}

namespace {

void check_item(const EvalItem& item) {
    if (item.label != Label::spliced) return;
    if (!item.gt) throw DataError(item.id + ": spliced image has no ground-truth mask");
    if (item.gt->height != item.response.height || item.gt->width != item.response.width) {
        throw DataError(item.id + ": mask and response dimensions differ");
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

MetricsReport evaluate_dataset(std::vector<EvalItem> items, const Thresholds& thresholds, DetectionMethod method,
                               const std::string& dataset) {
    thresholds.validate();
    std::sort(items.begin(), items.end(), [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (items[i].id == items[i - 1].id) throw DataError("duplicate image id '" + items[i].id + "'");
    }

    MetricsReport report;
    report.dataset = dataset;
    report.thresholds = thresholds;
    report.method = method;
    std::vector<double> scores;
    std::vector<int> labels;
    double sum_mcc = 0.0, sum_f1 = 0.0, sum_iou = 0.0;
    for (const auto& item : items) {
        check_item(item);
        const Decision d = decide(item.response, method, thresholds);
        ImageRow row;
        row.id = item.id;
        row.label = item.label;
        row.score = d.detection.score;
        row.inverted = d.detection.inverted;
        if (item.label == Label::spliced) {
            const MaskScores m = f1_iou(d.mask, *item.gt);
            row.mcc = mcc(m.counts);
            row.f1 = m.f1;
            row.iou = m.iou;
            sum_mcc += *row.mcc;
            sum_f1 += m.f1;
            sum_iou += m.iou;
            ++report.spliced;
        }
        scores.push_back(row.score);
        labels.push_back(item.label == Label::spliced);
        report.rows.push_back(std::move(row));
    }
    report.ap = average_precision(scores, labels);
    if (report.spliced > 0) {
        const double n = static_cast<double>(report.spliced);
        report.mean_mcc = sum_mcc / n;
        report.mean_f1 = sum_f1 / n;
        report.mean_iou = sum_iou / n;
    }
    return report;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream out;
    out << "# dataset=" << dataset << "\n";
    out << "# method=" << to_string(method) << "\n";
    out << "# delta_b=" << fmt(thresholds.delta_b) << "\n";
    out << "# delta_l=" << fmt(thresholds.delta_l) << "\n";
    out << "dataset,method,delta_b,delta_l,images,spliced,ap,mean_mcc,mean_f1,mean_iou\n";
    out << dataset << "," << to_string(method) << "," << fmt(thresholds.delta_b) << "," << fmt(thresholds.delta_l) << ","
        << rows.size() << "," << spliced << "," << fmt(ap) << "," << fmt(mean_mcc) << "," << fmt(mean_f1) << ","
        << fmt(mean_iou) << "\n";
    out << "id,label,score,inverted,mcc,f1,iou\n";
    for (const auto& r : rows) {
        out << r.id << "," << to_string(r.label) << "," << fmt(r.score) << "," << (r.inverted ? 1 : 0) << ","
            << fmt(r.mcc) << "," << fmt(r.f1) << "," << fmt(r.iou) << "\n";
    }
    return out.str();
}

std::string MetricsReport::summary() const {
    std::ostringstream out;
    out << "dataset " << dataset << ": " << rows.size() << " images (" << spliced << " spliced)\n";
    out << "  thresholds: delta_b=" << fmt(thresholds.delta_b) << " delta_l=" << fmt(thresholds.delta_l)
        << " method=" << to_string(method) << "\n";
    out << "  detection AP " << fmt(ap) << "\n";
    out << "  localization MCC " << fmt(mean_mcc) << "  F1 " << fmt(mean_f1) << "  IoU " << fmt(mean_iou) << "\n";
    return out.str();
}

std::vector<double> localization_sweep(std::span<const EvalItem> items, std::span<const double> grid) {
    std::vector<ResponseMap> maps;
    std::vector<const BinaryMask*> gts;
    for (const auto& item : items) {
        if (item.label != Label::spliced) continue;
        check_item(item);
        maps.push_back(maybe_invert(item.response).first);
        gts.push_back(&*item.gt);
    }
    std::vector<double> out;
    for (double t : grid) {
        double sum = 0.0;
        for (std::size_t i = 0; i < maps.size(); ++i) sum += f1_iou(localize(maps[i], t), *gts[i]).iou;
        out.push_back(maps.empty() ? 0.0 : sum / static_cast<double>(maps.size()));
    }
    return out;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
    return g;
}

}  // namespace sisl
