#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbinfer/cbconv.hpp"
#include "cbinfer/geometry.hpp"
#include "cbinfer/tensor.hpp"

namespace cbinfer {

enum class LayerKind { CBCONV, CONV, RELU, MAXPOOL, CLASSIFY };

const char* to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::CONV;
    ConvGeometry geom;           // conv kinds; inChannels filled when chaining
    int window = 0;              // MAXPOOL
    int stride = 0;              // MAXPOOL
    float threshold = 0.0f;      // CBCONV
    bool fuseRelu = false;       // CBCONV
    std::string weightsFile;     // conv kinds

    bool is_conv() const { return kind == LayerKind::CBCONV || kind == LayerKind::CONV; }
};

struct NetworkSpec {
    int inputChannels = 0;
    int inputHeight = 0;
    int inputWidth = 0;
    int numClasses = 0;
    std::vector<LayerSpec> layers;
};

// Parses the JSON network description (schema documented in the README).
NetworkSpec network_spec_from_json(const std::string& text);
NetworkSpec load_network_spec(const std::filesystem::path& file);
std::string network_spec_to_json(const NetworkSpec& spec);

// Validates the layer chain and computes every layer's input/output dims.
// Fills in derived fields (inChannels) of the spec's conv geometries.
// Throws spec_error / geometry_error on an inconsistent chain.
struct LayerShape {
    TensorDims in;
    TensorDims out;
};
std::vector<LayerShape> chain_dims(NetworkSpec& spec);

// A loaded, runnable network. One instance processes one frame at a time.
struct Layer {
    LayerSpec spec;
    TensorDims inDims;
    TensorDims outDims;
    CBConvState state;  // CBCONV: full state; CONV: geometry + filters only
};

struct Network {
    NetworkSpec spec;
    std::vector<Layer> layers;
    std::vector<int> cbLayers;  // indices of CBCONV layers, network order

    std::vector<float> thresholds() const;
    void set_thresholds(const std::vector<float>& taus);
};

enum class Engine { Baseline, CBInfer };

struct ForwardResult {
    LabelMap labels;
    std::vector<LayerStats> stats;  // one entry per layer
    std::uint64_t macsTotal = 0;    // sum of gemmMacs over all layers
};

// Optional capture of per-CBCONV change data plus the final activation
// tensor (the input of the classification step).
struct ForwardTrace {
    std::vector<CBConvTrace> cb;  // one per CBCONV layer, network order
    FrameTensor finalActivation;
};

// Loads weight files for every conv layer and prepares runnable state.
// Weight files must have exactly the geometry-implied byte length;
// errors name the offending layer.
Network load_network(const NetworkSpec& spec, const std::filesystem::path& weightsDir);

// Runs one frame through all layers. CBCONV layers use the change-based
// pipeline under Engine::CBInfer and the full-frame im2col+gemm path under
// Engine::Baseline (which also leaves CB state untouched).
ForwardResult forward_frame(Network& net, const FrameTensor& frame,
                            Engine engine = Engine::CBInfer, ForwardTrace* trace = nullptr);

// Drops all per-layer change-based state; the next frame is a full evaluation.
void reset_state(Network& net);

enum class MemoryMode { BaselineNaive, BaselineShared, CBInfer };

MemoryMode memory_mode_from_string(const std::string& s);

// Static memory footprint of a network spec, in number of stored values.
struct MemoryReport {
    std::uint64_t intermediateValues = 0;
    std::uint64_t patchMatrixValues = 0;
    std::uint64_t parameterValues = 0;
    std::uint64_t cbExtraValues = 0;
    std::uint64_t totalValues = 0;
};

// BaselineNaive: every layer keeps its own output buffer (ReLU applied
// in place) and every conv layer a private X matrix.
// BaselineShared: two ping-pong output buffers sized for the largest layer
// output plus one shared X sized for the largest conv layer.
// CBInfer: BaselineShared plus per-CBCONV previous input/output and shared
// change map, index list and Y scratch sized for the largest layer.
MemoryReport memory_footprint(const NetworkSpec& spec, MemoryMode mode);

}  // namespace cbinfer
