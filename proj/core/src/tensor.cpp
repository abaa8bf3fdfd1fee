#include "cbinfer/tensor.hpp"

#include <cmath>
#include <string>

namespace cbinfer {

std::size_t linear_index(int c, int j, int i, const TensorDims& dims) {
    if (c < 0 || c >= dims.channels || j < 0 || j >= dims.height || i < 0 || i >= dims.width)
        throw bounds_error("coordinate (" + std::to_string(c) + "," + std::to_string(j) + "," +
                           std::to_string(i) + ") outside tensor " +
                           std::to_string(dims.channels) + "x" + std::to_string(dims.height) +
                           "x" + std::to_string(dims.width));
    return (static_cast<std::size_t>(c) * dims.height + j) * dims.width + i;
}

float max_abs_diff(const FrameTensor& a, const FrameTensor& b) {
    if (!a.same_dims(b))
        throw shape_error("max_abs_diff: tensor dimensions differ");
    float m = 0.0f;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const float d = std::fabs(a.data[k] - b.data[k]);
        if (d > m) m = d;
    }
    return m;
}

bool all_finite(const FrameTensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace cbinfer
