#pragma once

#include <string>
#include <utility>

#include "sisl/consistency.hpp"
#include "sisl/image.hpp"

namespace sisl {

struct Thresholds {
    double delta_b = 0.25;
    double delta_l = 0.25;
    double rho_threshold = 0.5;

    void validate() const;
};

enum class DetectionMethod { spavg, pctarea };

const char* to_string(DetectionMethod m);
DetectionMethod parse_detection_method(const std::string& text);

struct DetectionResult {
    std::string image_id;
    DetectionMethod method = DetectionMethod::spavg;
    double score = 0.0;
    bool inverted = false;

    bool verdict(double rho_threshold) const { return score > rho_threshold; }
};

/// Replaces R by 1 - R when mean(R) > 0.5.
std::pair<ResponseMap, bool> maybe_invert(const ResponseMap& map);

DetectionResult detect_spavg(const ResponseMap& map);
/// Fraction of pixels with R > delta_b.
DetectionResult detect_pctarea(const ResponseMap& map, double delta_b);
DetectionResult detect(const ResponseMap& map, DetectionMethod method, double delta_b);

/// mask = R > delta_l.
BinaryMask localize(const ResponseMap& map, double delta_l);

/// Inverts if needed, then scores and localizes the same map.
struct Decision {
    DetectionResult detection;
    BinaryMask mask;
};
Decision decide(const ResponseMap& map, DetectionMethod method, const Thresholds& thresholds);

/// "id,method,score,inverted,verdict"
std::string detection_csv_header();
std::string format_detection_line(const DetectionResult& result, double rho_threshold);

}  // namespace sisl
