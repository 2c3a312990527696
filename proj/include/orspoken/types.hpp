#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace orspoken {

// Input data that fails schema or invariant checks. The CLI maps this to
// exit code 2; everything else (I/O, divergence, ...) maps to 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Axis-aligned box in pixel coordinates, origin top-left.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
};

// Throws ValidationError naming `where` when the box invariants fail:
// x_min < x_max, y_min < y_max, all coordinates finite and >= 0.
void validate_box(const BoundingBox& box, const std::string& where);

// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

struct ReferringExpression {
    std::string text;
    std::optional<std::string> speech_path;
    std::optional<double> timestamp_s;  // aligns on-site noise clips
};

struct ObjectAnnotation {
    BoundingBox box;
    std::string class_label;
    std::vector<ReferringExpression> expressions;
};

struct ImageRecord {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::string feature_path;  // whole-image context feature, relative to the manifest
    std::vector<ObjectAnnotation> objects;
};

using Manifest = std::vector<ImageRecord>;

struct FeatureVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

struct DetectionCandidate {
    BoundingBox box;
    std::string class_label;
    double det_score = 0.0;  // in [0,1]
    std::optional<std::string> feature_path;  // per-box feature, relative to the detections file
};

struct ProposalSet {
    std::string image_id;
    std::vector<DetectionCandidate> candidates;  // ranking order
};

// Key tying an expression to its N-best list and pipeline results:
// "<image_id>#<object_idx>#<expr_idx>".
std::string utterance_id(const std::string& image_id, std::size_t object_idx,
                         std::size_t expr_idx);

}  // namespace orspoken
