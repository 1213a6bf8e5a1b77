#include "sisl/decision.hpp"

#include <cstdio>

#include "sisl/error.hpp"

namespace sisl {

namespace {
void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string(name) + " must lie in [0,1]");
}
}  // namespace

void Thresholds::validate() const {
    check_unit(delta_b, "delta_b");
    check_unit(delta_l, "delta_l");
    check_unit(rho_threshold, "rho_threshold");
}

const char* to_string(DetectionMethod m) { return m == DetectionMethod::pctarea ? "pctarea" : "spavg"; }

DetectionMethod parse_detection_method(const std::string& text) {
    if (text == "spavg") return DetectionMethod::spavg;
    if (text == "pctarea") return DetectionMethod::pctarea;
    throw UsageError("unknown detection method '" + text + "' (expected spavg or pctarea)");
}

std::pair<ResponseMap, bool> maybe_invert(const ResponseMap& map) {
    if (!(map.mean() > 0.5)) return {map, false};
    ResponseMap out = map;
    for (auto& v : out.values) v = 1.0 - v;
    return {std::move(out), true};
}

DetectionResult detect_spavg(const ResponseMap& map) {
    return {map.image_id, DetectionMethod::spavg, map.mean(), false};
}

DetectionResult detect_pctarea(const ResponseMap& map, double delta_b) {
    std::size_t above = 0;
    for (double v : map.values) above += v > delta_b;
    const double score = map.values.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(map.values.size());
    return {map.image_id, DetectionMethod::pctarea, score, false};
}

DetectionResult detect(const ResponseMap& map, DetectionMethod method, double delta_b) {
    return method == DetectionMethod::pctarea ? detect_pctarea(map, delta_b) : detect_spavg(map);
}

BinaryMask localize(const ResponseMap& map, double delta_l) {
    BinaryMask mask;
    mask.image_id = map.image_id;
    mask.threshold = delta_l;
    mask.height = map.height;
    mask.width = map.width;
    mask.values.resize(map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) mask.values[i] = map.values[i] > delta_l;
    return mask;
}

Decision decide(const ResponseMap& map, DetectionMethod method, const Thresholds& thresholds) {
    auto [inverted_map, inverted] = maybe_invert(map);
    Decision d;
    d.detection = detect(inverted_map, method, thresholds.delta_b);
    d.detection.inverted = inverted;
    d.mask = localize(inverted_map, thresholds.delta_l);
    return d;
}

std::string detection_csv_header() { return "id,method,score,inverted,verdict"; }

std::string format_detection_line(const DetectionResult& r, double rho_threshold) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", r.score);
    return r.image_id + "," + to_string(r.method) + "," + score + "," + (r.inverted ? "1" : "0") + "," +
           (r.verdict(rho_threshold) ? "spliced" : "authentic");
}

}  // namespace sisl
