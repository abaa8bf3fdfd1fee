#include "cbinfer/network.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

#include "cbinfer/baseline.hpp"
#include "cbinfer/io.hpp"
#include "json.hpp"

namespace cbinfer {

using nlohmann::json;

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::CBCONV: return "CBCONV";
        case LayerKind::CONV: return "CONV";
        case LayerKind::RELU: return "RELU";
        case LayerKind::MAXPOOL: return "MAXPOOL";
        case LayerKind::CLASSIFY: return "CLASSIFY";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "CBCONV") return LayerKind::CBCONV;
    if (s == "CONV") return LayerKind::CONV;
    if (s == "RELU") return LayerKind::RELU;
    if (s == "MAXPOOL") return LayerKind::MAXPOOL;
    if (s == "CLASSIFY") return LayerKind::CLASSIFY;
    throw spec_error("unknown layer kind \"" + s + "\"");
}

MemoryMode memory_mode_from_string(const std::string& s) {
    if (s == "BASELINE_NAIVE") return MemoryMode::BaselineNaive;
    if (s == "BASELINE_SHARED") return MemoryMode::BaselineShared;
    if (s == "CBINFER") return MemoryMode::CBInfer;
    throw spec_error("unknown memory mode \"" + s + "\"");
}

NetworkSpec network_spec_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw spec_error(std::string("network spec: invalid JSON: ") + e.what());
    }
    try {
        NetworkSpec spec;
        spec.inputChannels = doc.at("inputChannels").get<int>();
        spec.inputHeight = doc.at("inputHeight").get<int>();
        spec.inputWidth = doc.at("inputWidth").get<int>();
        spec.numClasses = doc.at("numClasses").get<int>();
        for (const auto& jl : doc.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
            if (l.is_conv()) {
                l.geom.kernelH = jl.at("kernelH").get<int>();
                l.geom.kernelW = jl.at("kernelW").get<int>();
                l.geom.strideH = jl.value("strideH", 1);
                l.geom.strideW = jl.value("strideW", 1);
                l.geom.padH = jl.value("padH", 0);
                l.geom.padW = jl.value("padW", 0);
                l.geom.outChannels = jl.at("outChannels").get<int>();
                l.weightsFile = jl.at("weightsFile").get<std::string>();
            }
            if (l.kind == LayerKind::CBCONV) {
                l.threshold = jl.value("threshold", 0.0f);
                l.fuseRelu = jl.value("fuseRelu", false);
                if (l.threshold < 0.0f)
                    throw spec_error("network spec: negative threshold");
            }
            if (l.kind == LayerKind::MAXPOOL) {
                l.window = jl.at("window").get<int>();
                l.stride = jl.at("stride").get<int>();
            }
            spec.layers.push_back(std::move(l));
        }
        return spec;
    } catch (const json::exception& e) {
        throw spec_error(std::string("network spec: ") + e.what());
    }
}

NetworkSpec load_network_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw io_error("cannot open network spec " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return network_spec_from_json(ss.str());
}

std::string network_spec_to_json(const NetworkSpec& spec) {
    json doc;
    doc["inputChannels"] = spec.inputChannels;
    doc["inputHeight"] = spec.inputHeight;
    doc["inputWidth"] = spec.inputWidth;
    doc["numClasses"] = spec.numClasses;
    doc["layers"] = json::array();
    for (const auto& l : spec.layers) {
        json jl;
        jl["kind"] = to_string(l.kind);
        if (l.is_conv()) {
            jl["kernelH"] = l.geom.kernelH;
            jl["kernelW"] = l.geom.kernelW;
            jl["strideH"] = l.geom.strideH;
            jl["strideW"] = l.geom.strideW;
            jl["padH"] = l.geom.padH;
            jl["padW"] = l.geom.padW;
            jl["outChannels"] = l.geom.outChannels;
            jl["weightsFile"] = l.weightsFile;
        }
        if (l.kind == LayerKind::CBCONV) {
            jl["threshold"] = l.threshold;
            jl["fuseRelu"] = l.fuseRelu;
        }
        if (l.kind == LayerKind::MAXPOOL) {
            jl["window"] = l.window;
            jl["stride"] = l.stride;
        }
        doc["layers"].push_back(std::move(jl));
    }
    return doc.dump(2) + "\n";
}

std::vector<LayerShape> chain_dims(NetworkSpec& spec) {
    if (spec.layers.empty()) throw spec_error("network spec has no layers");
    if (spec.inputChannels < 1 || spec.inputHeight < 1 || spec.inputWidth < 1)
        throw spec_error("network spec has invalid input dimensions");
    if (spec.numClasses < 1) throw spec_error("network spec has invalid class count");

    std::vector<LayerShape> shapes;
    TensorDims cur{spec.inputChannels, spec.inputHeight, spec.inputWidth};
    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        LayerSpec& l = spec.layers[k];
        const std::string where = "layer " + std::to_string(k + 1) + " (" +
                                  to_string(l.kind) + ")";
        LayerShape sh;
        sh.in = cur;
        switch (l.kind) {
            case LayerKind::CBCONV:
            case LayerKind::CONV: {
                l.geom.inChannels = cur.channels;
                try {
                    l.geom.check_output(cur.height, cur.width);
                } catch (const geometry_error& e) {
                    throw geometry_error(where + ": " + e.what());
                }
                sh.out = {l.geom.outChannels, l.geom.outHeight(cur.height),
                          l.geom.outWidth(cur.width)};
                break;
            }
            case LayerKind::RELU:
                sh.out = cur;
                break;
            case LayerKind::MAXPOOL: {
                if (l.window < 1 || l.stride < 1 || l.window > cur.height ||
                    l.window > cur.width)
                    throw geometry_error(where + ": invalid pooling window");
                sh.out = {cur.channels, (cur.height - l.window) / l.stride + 1,
                          (cur.width - l.window) / l.stride + 1};
                break;
            }
            case LayerKind::CLASSIFY: {
                if (k + 1 != spec.layers.size())
                    throw spec_error(where + ": CLASSIFY must be the last layer");
                if (cur.channels != spec.numClasses)
                    throw spec_error(where + ": classification input has " +
                                     std::to_string(cur.channels) + " channels, expected " +
                                     std::to_string(spec.numClasses) + " classes");
                sh.out = {1, cur.height, cur.width};
                break;
            }
        }
        shapes.push_back(sh);
        cur = sh.out;
    }

    // The tensor feeding classification must carry one channel per class.
    const bool hasClassify = spec.layers.back().kind == LayerKind::CLASSIFY;
    const TensorDims final = hasClassify ? shapes[shapes.size() - 1].in : shapes.back().out;
    if (final.channels != spec.numClasses)
        throw spec_error("network produces " + std::to_string(final.channels) +
                         " channels, expected " + std::to_string(spec.numClasses) + " classes");
    return shapes;
}

std::vector<float> Network::thresholds() const {
    std::vector<float> taus;
    taus.reserve(cbLayers.size());
    for (int k : cbLayers) taus.push_back(layers[k].state.threshold);
    return taus;
}

void Network::set_thresholds(const std::vector<float>& taus) {
    if (taus.size() != cbLayers.size())
        throw spec_error("expected " + std::to_string(cbLayers.size()) + " thresholds, got " +
                         std::to_string(taus.size()));
    for (std::size_t k = 0; k < taus.size(); ++k) {
        if (taus[k] < 0.0f) throw spec_error("negative threshold");
        layers[cbLayers[k]].state.threshold = taus[k];
    }
}

Network load_network(const NetworkSpec& spec, const std::filesystem::path& weightsDir) {
    Network net;
    net.spec = spec;
    const auto shapes = chain_dims(net.spec);

    for (std::size_t k = 0; k < net.spec.layers.size(); ++k) {
        const LayerSpec& l = net.spec.layers[k];
        Layer layer;
        layer.spec = l;
        layer.inDims = shapes[k].in;
        layer.outDims = shapes[k].out;
        if (l.is_conv()) {
            const auto file = weightsDir / l.weightsFile;
            try {
                layer.state.filters = read_weights_f32le(file, l.geom);
            } catch (const io_error& e) {
                throw io_error("layer " + std::to_string(k + 1) + " (" + to_string(l.kind) +
                               "): " + e.what());
            }
            layer.state.geom = l.geom;
            layer.state.threshold = l.threshold;
            layer.state.fuseRelu = l.fuseRelu;
        }
        if (l.kind == LayerKind::CBCONV)
            net.cbLayers.push_back(static_cast<int>(k));
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

// Full-frame conv via im2col + gemm; optional fused ReLU keeps the baseline
// path bitwise comparable with the change-based one.
FrameTensor conv_layer_full(const Layer& layer, const FrameTensor& in, bool fusedRelu) {
    PatchMatrix X = im2col_full(in, layer.state.geom);
    ResultMatrix Y = gemm(layer.state.filters, X);
    const auto idx = ChangeIndexList::full(Y.cols);
    return update_output(FrameTensor(layer.outDims.channels, layer.outDims.height,
                                     layer.outDims.width),
                         Y, idx, fusedRelu);
}

}  // namespace

ForwardResult forward_frame(Network& net, const FrameTensor& frame, Engine engine,
                            ForwardTrace* trace) {
    if (frame.channels != net.spec.inputChannels || frame.height != net.spec.inputHeight ||
        frame.width != net.spec.inputWidth)
        throw shape_error("forward_frame: frame does not match network input dimensions");

    ForwardResult result;
    result.stats.resize(net.layers.size());
    if (trace) trace->cb.clear();

    FrameTensor cur = frame;
    bool classified = false;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        Layer& layer = net.layers[k];
        LayerStats& stats = result.stats[k];
        switch (layer.spec.kind) {
            case LayerKind::CBCONV: {
                if (engine == Engine::CBInfer) {
                    CBConvTrace* cbTrace = nullptr;
                    if (trace) {
                        trace->cb.emplace_back();
                        cbTrace = &trace->cb.back();
                    }
                    auto [out, st] = cbconv_forward(layer.state, cur, cbTrace);
                    stats = st;
                    cur = std::move(out);
                } else {
                    cur = conv_layer_full(layer, cur, layer.spec.fuseRelu);
                    stats.changedOutputPixels =
                        static_cast<std::int64_t>(layer.outDims.height) * layer.outDims.width;
                    stats.gemmMacs = full_frame_macs(layer.state.geom, layer.outDims.height,
                                                     layer.outDims.width);
                    if (trace) trace->cb.emplace_back();
                }
                break;
            }
            case LayerKind::CONV: {
                cur = conv_layer_full(layer, cur, false);
                stats.changedOutputPixels =
                    static_cast<std::int64_t>(layer.outDims.height) * layer.outDims.width;
                stats.gemmMacs = full_frame_macs(layer.state.geom, layer.outDims.height,
                                                 layer.outDims.width);
                break;
            }
            case LayerKind::RELU:
                cur = relu(cur);
                break;
            case LayerKind::MAXPOOL:
                cur = maxpool(cur, layer.spec.window, layer.spec.stride);
                break;
            case LayerKind::CLASSIFY:
                if (trace) trace->finalActivation = cur;
                result.labels = argmax_classify(cur);
                classified = true;
                break;
        }
    }
    if (!classified) {
        if (trace) trace->finalActivation = cur;
        result.labels = argmax_classify(cur);
    }
    for (const auto& st : result.stats) result.macsTotal += st.gemmMacs;
    return result;
}

void reset_state(Network& net) {
    for (Layer& l : net.layers)
        if (l.spec.kind == LayerKind::CBCONV) l.state.reset();
}

MemoryReport memory_footprint(const NetworkSpec& spec, MemoryMode mode) {
    NetworkSpec chained = spec;
    const auto shapes = chain_dims(chained);

    MemoryReport rep;
    std::uint64_t naiveIntermediate = 0;
    std::uint64_t naiveX = 0;
    std::uint64_t maxOutput = 0;
    std::uint64_t maxX = 0;

    for (std::size_t k = 0; k < chained.layers.size(); ++k) {
        const LayerSpec& l = chained.layers[k];
        const auto& sh = shapes[k];
        const std::uint64_t outValues = sh.out.count();

        // ReLU runs in place and owns no buffer.
        if (l.kind != LayerKind::RELU) {
            naiveIntermediate += outValues;
            maxOutput = std::max(maxOutput, outValues);
        }
        if (l.is_conv()) {
            const std::uint64_t xValues = static_cast<std::uint64_t>(l.geom.inChannels) *
                                          l.geom.kernelH * l.geom.kernelW * sh.out.height *
                                          sh.out.width;
            naiveX += xValues;
            maxX = std::max(maxX, xValues);
            rep.parameterValues += static_cast<std::uint64_t>(l.geom.outChannels) *
                                       l.geom.inChannels * l.geom.kernelH * l.geom.kernelW +
                                   l.geom.outChannels;
        }
    }

    switch (mode) {
        case MemoryMode::BaselineNaive:
            rep.intermediateValues = naiveIntermediate;
            rep.patchMatrixValues = naiveX;
            break;
        case MemoryMode::BaselineShared:
        case MemoryMode::CBInfer:
            rep.intermediateValues = 2 * maxOutput;  // ping-pong pair
            rep.patchMatrixValues = maxX;            // shared, sized for the largest conv
            break;
    }

    if (mode == MemoryMode::CBInfer) {
        std::uint64_t prevBuffers = 0;
        std::uint64_t maxGrid = 0;  // shared change map / index list sizing
        std::uint64_t maxY = 0;
        for (std::size_t k = 0; k < chained.layers.size(); ++k) {
            const LayerSpec& l = chained.layers[k];
            if (l.kind != LayerKind::CBCONV) continue;
            const auto& sh = shapes[k];
            prevBuffers += sh.in.count() + sh.out.count();
            const std::uint64_t inGrid = static_cast<std::uint64_t>(sh.in.height) * sh.in.width;
            const std::uint64_t outGrid =
                static_cast<std::uint64_t>(sh.out.height) * sh.out.width;
            maxGrid = std::max({maxGrid, inGrid, outGrid});
            maxY = std::max(maxY, static_cast<std::uint64_t>(sh.out.count()));
        }
        // change map + index list + Y matrix, each shared across layers
        rep.cbExtraValues = prevBuffers + 2 * maxGrid + maxY;
    }

    rep.totalValues = rep.intermediateValues + rep.patchMatrixValues + rep.parameterValues +
                      rep.cbExtraValues;
    return rep;
}

}  // namespace cbinfer
