#include "cbinfer/cbconv.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <numeric>
#include <string>

namespace cbinfer {

namespace {

using clock_type = std::chrono::steady_clock;

std::int64_t nanos_between(clock_type::time_point a, clock_type::time_point b) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

int floor_div(int a, int b) {  // b > 0
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

int ceil_div(int a, int b) {  // b > 0
    return floor_div(a + b - 1, b);
}

// Marks the output pixels whose receptive field contains input pixel (j, i).
void scatter_support(ChangeMap& out, const ConvGeometry& g, int j, int i) {
    int yLo = ceil_div(j + g.padH - g.kernelH + 1, g.strideH);
    int yHi = floor_div(j + g.padH, g.strideH);
    int xLo = ceil_div(i + g.padW - g.kernelW + 1, g.strideW);
    int xHi = floor_div(i + g.padW, g.strideW);
    yLo = std::max(yLo, 0);
    xLo = std::max(xLo, 0);
    yHi = std::min(yHi, out.height - 1);
    xHi = std::min(xHi, out.width - 1);
    for (int y = yLo; y <= yHi; ++y) {
        std::uint8_t* row = out.bits.data() + static_cast<std::size_t>(y) * out.width;
        for (int x = xLo; x <= xHi; ++x) row[x] = 1;
    }
}

}  // namespace

std::int64_t ChangeMap::count() const {
    return std::accumulate(bits.begin(), bits.end(), std::int64_t{0},
                           [](std::int64_t a, std::uint8_t b) { return a + (b != 0); });
}

ChangeIndexList ChangeIndexList::full(int pixels) {
    ChangeIndexList idx;
    idx.indices.resize(pixels);
    std::iota(idx.indices.begin(), idx.indices.end(), 0);
    return idx;
}

ChangeMap detect_changes(const FrameTensor& cur, const FrameTensor& prev, float tau) {
    if (!cur.same_dims(prev))
        throw shape_error("detect_changes: frame dimensions differ");
    ChangeMap m(cur.height, cur.width);
    const std::size_t planeSize = static_cast<std::size_t>(cur.height) * cur.width;
    for (int c = 0; c < cur.channels; ++c) {
        const float* a = cur.plane(c);
        const float* b = prev.plane(c);
        for (std::size_t p = 0; p < planeSize; ++p) {
            const float d = a[p] - b[p];
            if (d > tau || -d > tau) m.bits[p] = 1;
        }
    }
    return m;
}

ChangeMap dilate_changes(const ChangeMap& m, const ConvGeometry& geom) {
    geom.check_output(m.height, m.width);
    ChangeMap out(geom.outHeight(m.height), geom.outWidth(m.width));
    for (int j = 0; j < m.height; ++j) {
        const std::uint8_t* row = m.bits.data() + static_cast<std::size_t>(j) * m.width;
        for (int i = 0; i < m.width; ++i)
            if (row[i]) scatter_support(out, geom, j, i);
    }
    return out;
}

ChangeMap worst_case_propagation(const ChangeIndexList& updated, const ConvGeometry& geomNext,
                                 int height, int width) {
    geomNext.check_output(height, width);
    ChangeMap out(geomNext.outHeight(height), geomNext.outWidth(width));
    const std::int64_t pixels = static_cast<std::int64_t>(height) * width;
    for (std::int32_t idx : updated.indices) {
        if (idx < 0 || idx >= pixels)
            throw bounds_error("worst_case_propagation: index " + std::to_string(idx) +
                               " outside " + std::to_string(height) + "x" +
                               std::to_string(width) + " grid");
        scatter_support(out, geomNext, idx / width, idx % width);
    }
    return out;
}

ChangeIndexList extract_indexes(const ChangeMap& m) {
    // Contiguous 256-pixel blocks (one 16x16 tile's worth). Blocks are
    // independent and their results concatenate in block order, which is the
    // ascending linear order of a serial scan.
    constexpr std::size_t kBlock = 256;
    ChangeIndexList out;
    const std::size_t n = m.bits.size();
    out.indices.reserve(64);
    for (std::size_t blockStart = 0; blockStart < n; blockStart += kBlock) {
        const std::size_t blockEnd = std::min(blockStart + kBlock, n);
        for (std::size_t p = blockStart; p < blockEnd; ++p)
            if (m.bits[p]) out.indices.push_back(static_cast<std::int32_t>(p));
    }
    return out;
}

PatchMatrix gen_x_reduced(const FrameTensor& input, const ChangeIndexList& idx,
                          const ConvGeometry& geom) {
    if (input.channels != geom.inChannels)
        throw shape_error("gen_x_reduced: channel count mismatch");
    geom.check_output(input.height, input.width);
    const int outW = geom.outWidth(input.width);
    const std::int64_t outPixels =
        static_cast<std::int64_t>(geom.outHeight(input.height)) * outW;
    PatchMatrix X(geom.inChannels * geom.kernelH * geom.kernelW,
                  static_cast<int>(idx.count()));
    for (std::size_t n = 0; n < idx.indices.size(); ++n) {
        const std::int32_t pixel = idx.indices[n];
        if (pixel < 0 || pixel >= outPixels)
            throw bounds_error("gen_x_reduced: output index " + std::to_string(pixel) +
                               " out of range");
        fill_patch_column(input, geom, pixel / outW, pixel % outW, X.col(static_cast<int>(n)));
    }
    return X;
}

FrameTensor update_output(const FrameTensor& prevOut, const ResultMatrix& Y,
                          const ChangeIndexList& idx, bool fuseRelu) {
    if (Y.cols != idx.count())
        throw shape_error("update_output: Y has " + std::to_string(Y.cols) +
                          " columns for " + std::to_string(idx.count()) + " indices");
    if (Y.rows != prevOut.channels)
        throw shape_error("update_output: Y row count does not match output channels");
    FrameTensor out = prevOut;
    const std::size_t planeSize = static_cast<std::size_t>(out.height) * out.width;
    for (int o = 0; o < Y.rows; ++o) {
        float* plane = out.plane(o);
        const float* yrow = Y.data.data() + static_cast<std::size_t>(o) * Y.cols;
        for (std::size_t n = 0; n < idx.indices.size(); ++n) {
            const std::size_t p = static_cast<std::size_t>(idx.indices[n]);
            if (p >= planeSize)
                throw bounds_error("update_output: index out of range");
            plane[p] = fuseRelu ? std::max(0.0f, yrow[n]) : yrow[n];
        }
    }
    return out;
}

std::pair<FrameTensor, LayerStats> cbconv_forward(CBConvState& state, const FrameTensor& input,
                                                  CBConvTrace* trace) {
    const ConvGeometry& g = state.geom;
    if (input.channels != g.inChannels)
        throw shape_error("cbconv_forward: channel count mismatch");
    g.check_output(input.height, input.width);
    const int outH = g.outHeight(input.height);
    const int outW = g.outWidth(input.width);

    LayerStats stats;
    const bool timed = state.collectTimings;
    FrameTensor out;

    if (!state.has_history()) {
        // First frame: full evaluation, every output pixel counts as changed.
        const auto idx = ChangeIndexList::full(outH * outW);
        const auto t0 = timed ? clock_type::now() : clock_type::time_point{};
        PatchMatrix X = gen_x_reduced(input, idx, g);
        const auto t1 = timed ? clock_type::now() : clock_type::time_point{};
        ResultMatrix Y = gemm(state.filters, X);
        const auto t2 = timed ? clock_type::now() : clock_type::time_point{};
        out = update_output(FrameTensor(g.outChannels, outH, outW), Y, idx, state.fuseRelu);
        const auto t3 = timed ? clock_type::now() : clock_type::time_point{};
        if (timed) {
            stats.stepNanos.generate = nanos_between(t0, t1);
            stats.stepNanos.multiply = nanos_between(t1, t2);
            stats.stepNanos.update = nanos_between(t2, t3);
        }
        stats.changedInputPixels = static_cast<std::int64_t>(input.height) * input.width;
        stats.changedOutputPixels = idx.count();
        stats.gemmMacs = static_cast<std::uint64_t>(state.filters.rows) * state.filters.cols *
                         idx.count();
        if (trace) {
            trace->detected = ChangeMap();
            trace->updated = idx;
        }
    } else {
        if (!input.same_dims(*state.prevInput))
            throw shape_error("cbconv_forward: frame dimensions changed between frames");
        const auto t0 = timed ? clock_type::now() : clock_type::time_point{};
        ChangeMap m = detect_changes(input, *state.prevInput, state.threshold);
        ChangeMap dilated = dilate_changes(m, g);
        const auto t1 = timed ? clock_type::now() : clock_type::time_point{};
        ChangeIndexList idx = extract_indexes(dilated);
        const auto t2 = timed ? clock_type::now() : clock_type::time_point{};
        PatchMatrix X = gen_x_reduced(input, idx, g);
        const auto t3 = timed ? clock_type::now() : clock_type::time_point{};
        ResultMatrix Y = gemm(state.filters, X);
        const auto t4 = timed ? clock_type::now() : clock_type::time_point{};
        out = update_output(*state.prevOutput, Y, idx, state.fuseRelu);
        const auto t5 = timed ? clock_type::now() : clock_type::time_point{};
        if (timed) {
            stats.stepNanos.detect = nanos_between(t0, t1);
            stats.stepNanos.extract = nanos_between(t1, t2);
            stats.stepNanos.generate = nanos_between(t2, t3);
            stats.stepNanos.multiply = nanos_between(t3, t4);
            stats.stepNanos.update = nanos_between(t4, t5);
        }
        stats.changedInputPixels = m.count();
        stats.changedOutputPixels = idx.count();
        stats.gemmMacs = static_cast<std::uint64_t>(state.filters.rows) * state.filters.cols *
                         idx.count();
        if (trace) {
            trace->detected = std::move(m);
            trace->updated = std::move(idx);
        }
    }

    state.prevInput = input;
    state.prevOutput = out;
    return {std::move(out), stats};
}

}  // namespace cbinfer
