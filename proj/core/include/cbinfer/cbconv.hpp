#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cbinfer/baseline.hpp"
#include "cbinfer/geometry.hpp"
#include "cbinfer/tensor.hpp"

namespace cbinfer {

// Boolean change mask. Lives either on the input-pixel grid (raw detection
// result m) or on the output-pixel grid (dilated map m~).
struct ChangeMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    ChangeMap() = default;
    ChangeMap(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    std::size_t size() const { return bits.size(); }
    bool test(int j, int i) const { return bits[static_cast<std::size_t>(j) * width + i] != 0; }
    void set(int j, int i) { bits[static_cast<std::size_t>(j) * width + i] = 1; }
    std::int64_t count() const;
};

// Condensed form of a change map: strictly ascending linear output-pixel
// indices (y_o * w_o + x_o).
struct ChangeIndexList {
    std::vector<std::int32_t> indices;

    std::int64_t count() const { return static_cast<std::int64_t>(indices.size()); }
    bool empty() const { return indices.empty(); }

    static ChangeIndexList full(int pixels);
};

// Wall time of the five pipeline steps, nanoseconds. Detection covers the
// fused detect + dilate pass, mirroring the single detection kernel.
struct StepTimes {
    std::int64_t detect = 0;
    std::int64_t extract = 0;
    std::int64_t generate = 0;
    std::int64_t multiply = 0;
    std::int64_t update = 0;

    std::int64_t total() const { return detect + extract + generate + multiply + update; }
};

// Per-frame instrumentation of one change-based convolution layer.
struct LayerStats {
    std::int64_t changedInputPixels = 0;
    std::int64_t changedOutputPixels = 0;
    std::uint64_t gemmMacs = 0;
    StepTimes stepNanos;
};

// Per-layer state of a change-based convolution: geometry, filters,
// detection threshold, and the previous input/output pair. Both previous
// tensors are absent before the first frame and present afterwards.
struct CBConvState {
    ConvGeometry geom;
    FilterMatrix filters;
    float threshold = 0.0f;
    bool fuseRelu = false;
    bool collectTimings = true;
    std::optional<FrameTensor> prevInput;
    std::optional<FrameTensor> prevOutput;

    bool has_history() const { return prevInput.has_value(); }
    void reset() {
        prevInput.reset();
        prevOutput.reset();
    }
};

// Optional capture of a layer's change data for analysis tools.
struct CBConvTrace {
    ChangeMap detected;        // input-grid map m (empty on the first frame)
    ChangeIndexList updated;   // output pixels recomputed this frame
};

// m(j,i) = OR over channels of (|cur - prev| > tau), strict inequality.
ChangeMap detect_changes(const FrameTensor& cur, const FrameTensor& prev, float tau);

// Maps an input-grid change map to the output grid: output pixel true iff
// any input pixel of its (zero-padded) receptive field is true.
ChangeMap dilate_changes(const ChangeMap& m, const ConvGeometry& geom);

// Change map the next layer would need to assume were its own detection
// skipped: the dilation of the previous layer's updated-output set
// (given as an index list over a height x width grid) by geomNext.
ChangeMap worst_case_propagation(const ChangeIndexList& updated, const ConvGeometry& geomNext,
                                 int height, int width);

// Condenses a change map into ascending linear indices. Scans fixed-size
// blocks of 256 consecutive pixels; per-block results concatenated in block
// order give the same ascending order as a serial scan.
ChangeIndexList extract_indexes(const ChangeMap& m);

// Reduced-width patch matrix: column n is the im2col_full column
// idx.indices[n], identical row order and zero padding.
PatchMatrix gen_x_reduced(const FrameTensor& input, const ChangeIndexList& idx,
                          const ConvGeometry& geom);

// Copy of prevOut with output pixel idx.indices[n] of every channel o
// replaced by Y(o,n), through max(0, .) iff fuseRelu.
FrameTensor update_output(const FrameTensor& prevOut, const ResultMatrix& Y,
                          const ChangeIndexList& idx, bool fuseRelu);

// One frame through the change-based pipeline. First frame: full evaluation
// with every output pixel treated as changed. Later frames: detect ->
// dilate -> extract -> generate X -> gemm -> update. The state's previous
// input/output are replaced by the new pair.
std::pair<FrameTensor, LayerStats> cbconv_forward(CBConvState& state, const FrameTensor& input,
                                                  CBConvTrace* trace = nullptr);

}  // namespace cbinfer
