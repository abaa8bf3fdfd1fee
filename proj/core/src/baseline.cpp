#include "cbinfer/baseline.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace cbinfer {

void fill_patch_column(const FrameTensor& input, const ConvGeometry& geom, int y_o, int x_o,
                       float* col) {
    const int h = input.height;
    const int w = input.width;
    const int baseY = y_o * geom.strideH - geom.padH;
    const int baseX = x_o * geom.strideW - geom.padW;
    for (int c = 0; c < geom.inChannels; ++c) {
        const float* plane = input.plane(c);
        for (int kj = 0; kj < geom.kernelH; ++kj) {
            const int y = baseY + kj;
            if (y < 0 || y >= h) {
                std::memset(col, 0, sizeof(float) * geom.kernelW);
                col += geom.kernelW;
                continue;
            }
            const float* row = plane + static_cast<std::size_t>(y) * w;
            for (int ki = 0; ki < geom.kernelW; ++ki) {
                const int x = baseX + ki;
                *col++ = (x >= 0 && x < w) ? row[x] : 0.0f;
            }
        }
    }
}

PatchMatrix im2col_full(const FrameTensor& input, const ConvGeometry& geom) {
    if (input.channels != geom.inChannels)
        throw shape_error("im2col_full: input has " + std::to_string(input.channels) +
                          " channels, geometry expects " + std::to_string(geom.inChannels));
    geom.check_output(input.height, input.width);
    const int outH = geom.outHeight(input.height);
    const int outW = geom.outWidth(input.width);
    PatchMatrix X(geom.inChannels * geom.kernelH * geom.kernelW, outH * outW);
    for (int y = 0; y < outH; ++y)
        for (int x = 0; x < outW; ++x)
            fill_patch_column(input, geom, y, x, X.col(y * outW + x));
    return X;
}

ResultMatrix gemm(const FilterMatrix& K, const PatchMatrix& X) {
    if (K.cols != X.rows)
        throw shape_error("gemm: K has " + std::to_string(K.cols) + " columns, X has " +
                          std::to_string(X.rows) + " rows");
    ResultMatrix Y(K.rows, X.cols);
    const int depth = K.cols;
    for (int n = 0; n < X.cols; ++n) {
        const float* xcol = X.col(n);
        for (int o = 0; o < K.rows; ++o) {
            const float* krow = K.row(o);
            float acc = K.bias[o];
            for (int r = 0; r < depth; ++r) acc += krow[r] * xcol[r];
            Y.data[static_cast<std::size_t>(o) * X.cols + n] = acc;
        }
    }
    return Y;
}

FrameTensor conv_full(const FrameTensor& input, const FilterMatrix& K,
                      const ConvGeometry& geom) {
    if (input.channels != geom.inChannels)
        throw shape_error("conv_full: channel count mismatch");
    if (K.rows != geom.outChannels ||
        K.cols != geom.inChannels * geom.kernelH * geom.kernelW)
        throw shape_error("conv_full: filter matrix does not match geometry");
    geom.check_output(input.height, input.width);

    const int outH = geom.outHeight(input.height);
    const int outW = geom.outWidth(input.width);
    const int h = input.height;
    const int w = input.width;
    FrameTensor out(geom.outChannels, outH, outW);

    // Padding contributes explicit zero products so the accumulation
    // sequence matches gemm over the im2col matrix exactly.
    for (int o = 0; o < geom.outChannels; ++o) {
        const float* krow = K.row(o);
        float* oplane = out.plane(o);
        for (int y_o = 0; y_o < outH; ++y_o) {
            for (int x_o = 0; x_o < outW; ++x_o) {
                const int baseY = y_o * geom.strideH - geom.padH;
                const int baseX = x_o * geom.strideW - geom.padW;
                float acc = K.bias[o];
                const float* kv = krow;
                for (int c = 0; c < geom.inChannels; ++c) {
                    const float* plane = input.plane(c);
                    for (int kj = 0; kj < geom.kernelH; ++kj) {
                        const int y = baseY + kj;
                        const bool rowValid = (y >= 0 && y < h);
                        const float* row = rowValid ? plane + static_cast<std::size_t>(y) * w
                                                    : nullptr;
                        for (int ki = 0; ki < geom.kernelW; ++ki) {
                            const int x = baseX + ki;
                            const float v =
                                (rowValid && x >= 0 && x < w) ? row[x] : 0.0f;
                            acc += *kv++ * v;
                        }
                    }
                }
                oplane[static_cast<std::size_t>(y_o) * outW + x_o] = acc;
            }
        }
    }
    return out;
}

FrameTensor relu(const FrameTensor& t) {
    FrameTensor out = t;
    for (float& v : out.data) v = std::max(0.0f, v);
    return out;
}

FrameTensor maxpool(const FrameTensor& t, int window, int stride) {
    if (window < 1 || stride < 1)
        throw geometry_error("maxpool: window and stride must be positive");
    if (window > t.height || window > t.width)
        throw geometry_error("maxpool: window " + std::to_string(window) +
                             " exceeds input " + std::to_string(t.height) + "x" +
                             std::to_string(t.width));
    const int outH = (t.height - window) / stride + 1;
    const int outW = (t.width - window) / stride + 1;
    FrameTensor out(t.channels, outH, outW);
    for (int c = 0; c < t.channels; ++c) {
        const float* plane = t.plane(c);
        float* oplane = out.plane(c);
        for (int y = 0; y < outH; ++y) {
            for (int x = 0; x < outW; ++x) {
                float m = plane[static_cast<std::size_t>(y * stride) * t.width + x * stride];
                for (int kj = 0; kj < window; ++kj) {
                    const float* row =
                        plane + static_cast<std::size_t>(y * stride + kj) * t.width + x * stride;
                    for (int ki = 0; ki < window; ++ki) m = std::max(m, row[ki]);
                }
                oplane[static_cast<std::size_t>(y) * outW + x] = m;
            }
        }
    }
    return out;
}

LabelMap argmax_classify(const FrameTensor& t) {
    LabelMap out(t.height, t.width);
    const std::size_t planeSize = static_cast<std::size_t>(t.height) * t.width;
    for (std::size_t p = 0; p < planeSize; ++p) {
        int best = 0;
        float bestV = t.data[p];
        for (int c = 1; c < t.channels; ++c) {
            const float v = t.data[static_cast<std::size_t>(c) * planeSize + p];
            if (v > bestV) {  // strict: ties keep the lowest channel
                bestV = v;
                best = c;
            }
        }
        out.labels[p] = static_cast<std::uint16_t>(best);
    }
    return out;
}

}  // namespace cbinfer
