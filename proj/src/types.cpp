#include "orspoken/types.hpp"

#include <algorithm>

namespace orspoken {

void validate_box(const BoundingBox& box, const std::string& where) {
    auto fail = [&](const std::string& what) {
        throw ValidationError(where + ": " + what);
    };
    if (!std::isfinite(box.x_min) || !std::isfinite(box.y_min) || !std::isfinite(box.x_max) ||
        !std::isfinite(box.y_max))
        fail("box has a non-finite coordinate");
    if (box.x_min < 0.0 || box.y_min < 0.0) fail("box coordinates must be >= 0");
    if (!(box.x_min < box.x_max)) fail("box.x_min must be < box.x_max");
    if (!(box.y_min < box.y_max)) fail("box.y_min must be < box.y_max");
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::string utterance_id(const std::string& image_id, std::size_t object_idx,
                         std::size_t expr_idx) {
    return image_id + "#" + std::to_string(object_idx) + "#" + std::to_string(expr_idx);
}

}  // namespace orspoken
