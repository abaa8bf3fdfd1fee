#pragma once

#include <cstdint>
#include <vector>

#include "cbinfer/geometry.hpp"
#include "cbinfer/tensor.hpp"

namespace cbinfer {

// Filter matrix K with layout K(o, (c*kernelH + j)*kernelW + i) = k(o,c,j,i),
// stored row-major, plus one bias value per output channel.
struct FilterMatrix {
    int rows = 0;  // outChannels
    int cols = 0;  // inChannels * kernelH * kernelW
    std::vector<float> data;
    std::vector<float> bias;

    FilterMatrix() = default;
    FilterMatrix(int r, int c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f), bias(r, 0.0f) {}

    const float* row(int o) const { return data.data() + static_cast<std::size_t>(o) * cols; }
    float* row(int o) { return data.data() + static_cast<std::size_t>(o) * cols; }
};

// Patch matrix X, column-major. Each column is one output pixel's
// zero-padded receptive field in (c, j, i) nested order. The full-frame
// variant has one column per output pixel; the reduced variant only the
// columns named by a change index list.
struct PatchMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;  // column-major: column n at data[n*rows]

    PatchMatrix() = default;
    PatchMatrix(int r, int c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    const float* col(int n) const { return data.data() + static_cast<std::size_t>(n) * rows; }
    float* col(int n) { return data.data() + static_cast<std::size_t>(n) * rows; }
};

// Result matrix Y = K*X, row-major: Y(o, n) at data[o*cols + n].
struct ResultMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    ResultMatrix() = default;
    ResultMatrix(int r, int c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}
};

// Full-frame im2col: gathers every output pixel's receptive field into a
// column of X. Zero padding is materialized as explicit zeros; strided
// convolution simply produces fewer columns.
PatchMatrix im2col_full(const FrameTensor& input, const ConvGeometry& geom);

// Y(o,n) = bias[o] + sum_r K(o,r)*X(r,n), accumulated in ascending r order
// into a single float. The fixed order makes every computation path that
// uses this routine bitwise reproducible.
ResultMatrix gemm(const FilterMatrix& K, const PatchMatrix& X);

// Direct nested-loop convolution with zero padding. Accumulates products in
// the same (c, j, i) order as gemm over im2col columns, including the
// explicit zero-padding products, so both paths agree bitwise.
FrameTensor conv_full(const FrameTensor& input, const FilterMatrix& K,
                      const ConvGeometry& geom);

// Element-wise max(0, v).
FrameTensor relu(const FrameTensor& t);

// Per-channel max pooling with square window. Windows that would cross the
// bottom/right edge are dropped (floor semantics).
FrameTensor maxpool(const FrameTensor& t, int window, int stride);

// Per-pixel argmax over channels; ties break toward the lowest channel index.
LabelMap argmax_classify(const FrameTensor& t);

// Fills one im2col column for output pixel (y_o, x_o); `col` must hold
// geom.inChannels*kernelH*kernelW floats. Shared by the full and reduced
// matrix generators.
void fill_patch_column(const FrameTensor& input, const ConvGeometry& geom,
                       int y_o, int x_o, float* col);

// MACs of a full-frame convolution at the given output size.
inline std::uint64_t full_frame_macs(const ConvGeometry& g, int outH, int outW) {
    return static_cast<std::uint64_t>(g.outChannels) * g.inChannels * g.kernelH * g.kernelW *
           outH * outW;
}

}  // namespace cbinfer
