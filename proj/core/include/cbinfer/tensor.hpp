#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cbinfer/error.hpp"

namespace cbinfer {

struct TensorDims {
    int channels = 0;
    int height = 0;
    int width = 0;

    bool operator==(const TensorDims&) const = default;
    std::size_t count() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
};

// Linear offset of element (c, j, i) in planar channel-major storage.
// Throws bounds_error for out-of-range coordinates.
std::size_t linear_index(int c, int j, int i, const TensorDims& dims);

// Dense planar activation / image tensor, 32-bit values.
// Element (c, j, i) lives at data[c*height*width + j*width + i].
struct FrameTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FrameTensor() = default;
    FrameTensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

    TensorDims dims() const { return {channels, height, width}; }
    std::size_t size() const { return data.size(); }
    bool same_dims(const FrameTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    // Unchecked access, callers guarantee valid coordinates.
    float& operator()(int c, int j, int i) {
        return data[(static_cast<std::size_t>(c) * height + j) * width + i];
    }
    float operator()(int c, int j, int i) const {
        return data[(static_cast<std::size_t>(c) * height + j) * width + i];
    }

    // Checked access.
    float& at(int c, int j, int i) { return data[linear_index(c, j, i, dims())]; }
    float at(int c, int j, int i) const { return data[linear_index(c, j, i, dims())]; }

    const float* plane(int c) const {
        return data.data() + static_cast<std::size_t>(c) * height * width;
    }
    float* plane(int c) {
        return data.data() + static_cast<std::size_t>(c) * height * width;
    }
};

// Per-pixel class indices, the result of the classification layer.
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint16_t> labels;

    LabelMap() = default;
    LabelMap(int h, int w) : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {}

    std::size_t size() const { return labels.size(); }
    bool same_dims(const LabelMap& o) const { return height == o.height && width == o.width; }

    std::uint16_t& operator()(int j, int i) {
        return labels[static_cast<std::size_t>(j) * width + i];
    }
    std::uint16_t operator()(int j, int i) const {
        return labels[static_cast<std::size_t>(j) * width + i];
    }
};

// Maximum element-wise |a - b|; 0 exactly iff all values compare equal.
// Throws shape_error on dimension mismatch.
float max_abs_diff(const FrameTensor& a, const FrameTensor& b);

// True if every value is finite (no NaN / Inf).
bool all_finite(const FrameTensor& t);

}  // namespace cbinfer
