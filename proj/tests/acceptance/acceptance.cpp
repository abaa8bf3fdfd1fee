// Acceptance suite: one pass/fail line per criterion. Exit code equals the
// number of failed criteria. An optional argument restricts the run to one
// criterion id.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbinfer/calibration.hpp"
#include "cbinfer/cbconv.hpp"
#include "cbinfer/io.hpp"
#include "cbinfer/network.hpp"
#include "cbinfer/synth.hpp"
#include "testutil.hpp"

using namespace cbinfer;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cbinfer_accept_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

LayerSpec cb_layer(int k, int outC, const std::string& file, float tau, bool fuse) {
    LayerSpec l;
    l.kind = LayerKind::CBCONV;
    l.geom.kernelH = l.geom.kernelW = k;
    l.geom.padH = l.geom.padW = k / 2;
    l.geom.outChannels = outC;
    l.threshold = tau;
    l.fuseRelu = fuse;
    l.weightsFile = file;
    return l;
}

LayerSpec pool_layer(int window, int stride) {
    LayerSpec l;
    l.kind = LayerKind::MAXPOOL;
    l.window = window;
    l.stride = stride;
    return l;
}

bool approx_within(double value, double target, double pct, std::string& detail,
                   const char* name) {
    const double rel = 100.0 * (value / target - 1.0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s=%.6g vs %.6g (%+.2f%%); ", name, value, target, rel);
    detail += buf;
    return std::fabs(rel) <= pct;
}

// ------------------------------------------------------------------------
// 1. tau=0 exactness: change-based outputs bitwise equal to the full-frame
//    baseline over 100 seeded random sequences.
bool criterion_tau0_exactness(std::string& detail) {
    std::mt19937 rng(20240001);
    int sequences = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int inC = 1 + static_cast<int>(rng() % 8);
        const int h = 8 + static_cast<int>(rng() % 9);   // up to 16
        const int w = 8 + static_cast<int>(rng() % 9);
        const int nConv = 1 + static_cast<int>(rng() % 3);

        TempDir dir;
        NetworkSpec spec;
        spec.inputChannels = inC;
        spec.inputHeight = h;
        spec.inputWidth = w;
        int channels = inC;
        for (int l = 0; l < nConv; ++l) {
            const int k = (rng() % 2) ? 7 : 3;
            const int outC = 1 + static_cast<int>(rng() % 8);
            spec.layers.push_back(cb_layer(k, outC, "l" + std::to_string(l) + ".w", 0.0f,
                                           (rng() % 3) != 0));
            channels = outC;
            if (l == 0) spec.layers.push_back(pool_layer(2, 2));
        }
        spec.numClasses = channels;
        generate_weights(spec, dir.path, 1000 + trial);
        Network net = load_network(spec, dir.path);
        Network ref = load_network(spec, dir.path);

        FrameTensor frame = testutil::random_tensor(inC, h, w, rng);
        for (int f = 0; f < 5; ++f) {
            const int touches = 1 + static_cast<int>(rng() % 12);
            for (int t = 0; t < touches; ++t)
                frame(static_cast<int>(rng() % inC), static_cast<int>(rng() % h),
                      static_cast<int>(rng() % w)) = testutil::unit_float(rng);
            ForwardTrace cbT, blT;
            auto cb = forward_frame(net, frame, Engine::CBInfer, &cbT);
            auto bl = forward_frame(ref, frame, Engine::Baseline, &blT);
            if (!testutil::bitwise_equal(cbT.finalActivation, blT.finalActivation) ||
                cb.labels.labels != bl.labels.labels) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "mismatch at sequence %d frame %d", trial, f);
                detail += buf;
                return false;
            }
        }
        ++sequences;
    }
    detail += std::to_string(sequences) + " sequences bitwise-identical";
    return true;
}

// ------------------------------------------------------------------------
// 2. Dilation growth constants: 49 and 169 output pixels.
bool criterion_dilation_growth(std::string& detail) {
    ConvGeometry g;
    g.kernelH = g.kernelW = 7;
    g.padH = g.padW = 3;
    g.inChannels = g.outChannels = 1;

    ChangeMap m(31, 31);
    m.set(15, 15);
    const ChangeMap once = dilate_changes(m, g);
    const ChangeMap twice = dilate_changes(once, g);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "one layer: %lld, two layers: %lld",
                  static_cast<long long>(once.count()), static_cast<long long>(twice.count()));
    detail += buf;
    return once.count() == 49 && twice.count() == 169;
}

// ------------------------------------------------------------------------
// 3. MAC proportionality: gemmMacs == p * full-frame MACs as an exact
//    integer accounting identity, per layer and frame.
bool criterion_mac_proportionality(std::string& detail) {
    TempDir dir;
    NetworkSpec spec;
    spec.inputChannels = 2;
    spec.inputHeight = spec.inputWidth = 32;
    spec.numClasses = 6;
    spec.layers.push_back(cb_layer(7, 4, "l1.w", 0.02f, true));
    spec.layers.push_back(pool_layer(2, 2));
    spec.layers.push_back(cb_layer(3, 6, "l2.w", 0.05f, true));
    generate_weights(spec, dir.path, 77);
    Network net = load_network(spec, dir.path);

    SynthConfig cfg;
    cfg.channels = 2;
    cfg.height = cfg.width = 32;
    cfg.frames = 8;
    cfg.sprites.push_back({7, 2, 0.9f});
    cfg.noiseAmplitude = 0.004f;
    cfg.seed = 31;
    Sequence seq = synth_sequence(cfg);

    int checked = 0;
    reset_state(net);
    for (const auto& frame : seq.frames) {
        auto res = forward_frame(net, frame);
        for (int cb : net.cbLayers) {
            const Layer& layer = net.layers[cb];
            const std::uint64_t pixels =
                static_cast<std::uint64_t>(layer.outDims.height) * layer.outDims.width;
            const std::uint64_t full =
                full_frame_macs(layer.spec.geom, layer.outDims.height, layer.outDims.width);
            const auto& st = res.stats[cb];
            // gemmMacs / full == changedOutputPixels / pixels, cross-multiplied.
            if (st.gemmMacs * pixels !=
                full * static_cast<std::uint64_t>(st.changedOutputPixels)) {
                detail += "identity violated";
                return false;
            }
            ++checked;
        }
    }
    detail += std::to_string(checked) + " layer-frames satisfy the identity exactly";
    return true;
}

// ------------------------------------------------------------------------
// 4. Monotonicity: exact set inclusion in tau and in the joint factor over
//    50 random frame pairs.
bool criterion_monotonicity(std::string& detail) {
    std::mt19937 rng(20240004);
    TempDir dir;
    NetworkSpec spec;
    spec.inputChannels = 2;
    spec.inputHeight = spec.inputWidth = 20;
    spec.numClasses = 4;
    spec.layers.push_back(cb_layer(5, 3, "l1.w", 0.05f, true));
    spec.layers.push_back(cb_layer(3, 4, "l2.w", 0.08f, true));
    generate_weights(spec, dir.path, 404);
    Network net = load_network(spec, dir.path);
    const ThresholdVector base = net.thresholds();

    for (int pair = 0; pair < 50; ++pair) {
        FrameTensor a = testutil::random_tensor(2, 20, 20, rng);
        FrameTensor b = a;
        const int touches = 1 + static_cast<int>(rng() % 30);
        for (int t = 0; t < touches; ++t)
            b(static_cast<int>(rng() % 2), static_cast<int>(rng() % 20),
              static_cast<int>(rng() % 20)) += testutil::uniform(rng, -0.5f, 0.5f);

        // Raw detection inclusion for ascending taus.
        const float ta = testutil::uniform(rng, 0.0f, 0.2f);
        const float tb = ta + testutil::uniform(rng, 0.0f, 0.3f);
        ChangeMap ma = detect_changes(b, a, ta);
        ChangeMap mb = detect_changes(b, a, tb);
        for (std::size_t k = 0; k < ma.bits.size(); ++k)
            if (mb.bits[k] && !ma.bits[k]) {
                detail += "tau inclusion violated";
                return false;
            }

        // Joint-factor inclusion per layer on the same frame pair.
        const double fa = 0.5, fb = 1.5;
        std::vector<ChangeIndexList> updatedA, updatedB;
        for (double f : {fa, fb}) {
            ThresholdVector taus(base.size());
            for (std::size_t k = 0; k < base.size(); ++k)
                taus[k] = static_cast<float>(f) * base[k];
            net.set_thresholds(taus);
            reset_state(net);
            ForwardTrace trace;
            forward_frame(net, a, Engine::CBInfer, &trace);
            forward_frame(net, b, Engine::CBInfer, &trace);
            auto& dst = (f == fa) ? updatedA : updatedB;
            dst.clear();
            for (const auto& cb : trace.cb) dst.push_back(cb.updated);
        }
        for (std::size_t layer = 0; layer < updatedA.size(); ++layer) {
            const auto& small = updatedB[layer].indices;
            const auto& large = updatedA[layer].indices;
            if (!std::includes(large.begin(), large.end(), small.begin(), small.end())) {
                detail += "factor inclusion violated";
                return false;
            }
        }
    }
    detail += "50 frame pairs: inclusion exact at every layer";
    return true;
}

// ------------------------------------------------------------------------
// 5. Change-propagation reduction: layer-2 detected changes within the
//    worst-case propagation every frame, strictly fewer on >= 90% of frames.
bool criterion_propagation_reduction(std::string& detail) {
    TempDir dir;
    NetworkSpec spec;
    spec.inputChannels = 1;
    spec.inputHeight = spec.inputWidth = 48;
    spec.numClasses = 6;
    spec.layers.push_back(cb_layer(7, 4, "l1.w", 0.03f, true));
    spec.layers.push_back(cb_layer(7, 6, "l2.w", 0.05f, true));
    generate_weights(spec, dir.path, 550);
    Network net = load_network(spec, dir.path);

    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = cfg.width = 48;
    cfg.frames = 31;
    cfg.sprites.push_back({6, 1, 0.9f});
    cfg.noiseAmplitude = 0.01f;
    cfg.seed = 18;
    Sequence seq = synth_sequence(cfg);

    const Layer& l1 = net.layers[0];
    const Layer& l2 = net.layers[1];
    int frames = 0, strictlyFewer = 0;
    reset_state(net);
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        ForwardTrace trace;
        forward_frame(net, seq.frames[f], Engine::CBInfer, &trace);
        if (f == 0) continue;
        const ChangeMap worst = worst_case_propagation(trace.cb[0].updated, l2.spec.geom,
                                                       l1.outDims.height, l1.outDims.width);
        const std::int64_t worstCount = worst.count();
        const std::int64_t detected = trace.cb[1].updated.count();
        // Set inclusion, not just counts.
        ChangeMap detectedMap(l2.outDims.height, l2.outDims.width);
        for (std::int32_t p : trace.cb[1].updated.indices)
            detectedMap.bits[static_cast<std::size_t>(p)] = 1;
        for (std::size_t k = 0; k < worst.bits.size(); ++k)
            if (detectedMap.bits[k] && !worst.bits[k]) {
                detail += "detected set escapes the worst case";
                return false;
            }
        ++frames;
        if (detected < worstCount) ++strictlyFewer;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "strictly fewer on %d/%d frames", strictlyFewer, frames);
    detail += buf;
    return strictlyFewer * 10 >= frames * 9;
}

// ------------------------------------------------------------------------
// 6. Throughput speed-up: on a 128x128 16->16 channel two-7x7-CBCONV net
//    with <=2% of input pixels changing, change-based inference runs at
//    least 3x faster than the full-frame path (median over 50 frames).
bool criterion_throughput(std::string& detail) {
    TempDir dir;
    NetworkSpec spec;
    spec.inputChannels = 16;
    spec.inputHeight = spec.inputWidth = 128;
    spec.numClasses = 16;
    spec.layers.push_back(cb_layer(7, 16, "l1.w", 0.02f, true));
    spec.layers.push_back(cb_layer(7, 16, "l2.w", 0.02f, true));
    generate_weights(spec, dir.path, 660);
    Network net = load_network(spec, dir.path);

    SynthConfig cfg;
    cfg.channels = 16;
    cfg.height = cfg.width = 128;
    cfg.frames = 51;  // warm-up + 50 measured
    cfg.sprites.push_back({8, 2, 0.9f});
    cfg.noiseAmplitude = 0.004f;  // frame-to-frame noise delta stays below tau
    cfg.seed = 27;

    std::vector<double> cbMillis, blMillis;
    std::int64_t changedBudget = 0;
    reset_state(net);
    for (int f = 0; f < cfg.frames; ++f) {
        const FrameTensor frame = synth_frame(cfg, f);
        const auto c0 = std::chrono::steady_clock::now();
        auto cb = forward_frame(net, frame, Engine::CBInfer);
        const auto c1 = std::chrono::steady_clock::now();
        auto bl = forward_frame(net, frame, Engine::Baseline);
        const auto c2 = std::chrono::steady_clock::now();
        if (f == 0) continue;
        cbMillis.push_back(std::chrono::duration<double, std::milli>(c1 - c0).count());
        blMillis.push_back(std::chrono::duration<double, std::milli>(c2 - c1).count());
        changedBudget = std::max(changedBudget, cb.stats[0].changedInputPixels);
    }
    std::sort(cbMillis.begin(), cbMillis.end());
    std::sort(blMillis.begin(), blMillis.end());
    const double cbMed = cbMillis[cbMillis.size() / 2];
    const double blMed = blMillis[blMillis.size() / 2];
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "median cb %.2f ms vs baseline %.2f ms (%.1fx), max changed inputs %lld "
                  "(%.2f%%)",
                  cbMed, blMed, blMed / cbMed, static_cast<long long>(changedBudget),
                  100.0 * static_cast<double>(changedBudget) / (128.0 * 128.0));
    detail += buf;
    // The scene construction must hold up: at most 2% of input pixels change.
    if (changedBudget > 128 * 128 * 2 / 100) return false;
    return cbMed * 3.0 <= blMed;
}

// ------------------------------------------------------------------------
// 7. Calibration behavior: noise amplitude 0.02 with budget 0.1pp selects
//    tau1 >= 0.02 and the factor-1 sweep stays within 0.1% disagreement.
bool criterion_calibration(std::string& detail) {
    TempDir dir;
    NetworkSpec spec;
    spec.inputChannels = 1;
    spec.inputHeight = spec.inputWidth = 32;
    spec.numClasses = 4;
    spec.layers.push_back(cb_layer(7, 4, "l1.w", 0.0f, true));
    spec.layers.push_back(cb_layer(3, 4, "l2.w", 0.0f, true));
    generate_weights(spec, dir.path, 770);
    Network net = load_network(spec, dir.path);

    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = cfg.width = 32;
    cfg.frames = 8;
    cfg.sprites.push_back({8, 1, 0.9f});
    cfg.noiseAmplitude = 0.02f;
    cfg.seed = 9;
    std::vector<Sequence> seqs{synth_sequence(cfg, "a")};
    cfg.seed = 10;
    seqs.push_back(synth_sequence(cfg, "b"));

    const auto grids = default_threshold_grids(net, seqs);
    const auto result = calibrate_thresholds(net, seqs, grids, 0.1);
    const auto points = sweep_threshold_factor(net, seqs, result.thresholds, {1.0});

    char buf[160];
    std::snprintf(buf, sizeof(buf), "tau = (%.4g, %.4g), factor-1 disagreement %.4g%%",
                  static_cast<double>(result.thresholds[0]),
                  static_cast<double>(result.thresholds[1]), points[0].disagreement);
    detail += buf;
    return result.thresholds[0] >= 0.02f && points[0].disagreement <= 0.1;
}

// ------------------------------------------------------------------------
// 8. Memory accountant: paper-scale aggregates within 15% on the
//    reconstructed spec; exact equality on hand-counted toys.
bool criterion_memory(std::string& detail) {
    // Toy: single 1x1 conv, 1->1 channels, 2x2 input.
    NetworkSpec tiny;
    tiny.inputChannels = 1;
    tiny.inputHeight = tiny.inputWidth = 2;
    tiny.numClasses = 1;
    LayerSpec conv;
    conv.kind = LayerKind::CONV;
    conv.geom.kernelH = conv.geom.kernelW = 1;
    conv.geom.outChannels = 1;
    conv.weightsFile = "w";
    tiny.layers.push_back(conv);
    const auto naive = memory_footprint(tiny, MemoryMode::BaselineNaive);
    if (naive.intermediateValues != 4 || naive.patchMatrixValues != 4 ||
        naive.parameterValues != 2) {
        detail += "toy accounting broke";
        return false;
    }

    const fs::path specFile = fs::path(CBINFER_NETSPEC_DIR) / "paper_like.json";
    NetworkSpec paperLike = load_network_spec(specFile);
    const auto big = memory_footprint(paperLike, MemoryMode::BaselineNaive);
    const auto shared = memory_footprint(paperLike, MemoryMode::BaselineShared);
    const auto cb = memory_footprint(paperLike, MemoryMode::CBInfer);
    const auto extra = cb.totalValues - shared.totalValues;

    bool ok = true;
    ok &= approx_within(static_cast<double>(big.intermediateValues), 30e6, 15.0, detail,
                        "intermediate");
    ok &= approx_within(static_cast<double>(big.patchMatrixValues), 264e6, 15.0, detail, "X");
    ok &= approx_within(static_cast<double>(big.parameterValues), 873e3, 15.0, detail,
                        "params");
    ok &= approx_within(static_cast<double>(extra), 60e6, 15.0, detail, "cbExtra");
    return ok;
}

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "tau=0 exactness vs full-frame baseline", criterion_tau0_exactness},
        {2, "dilation growth constants 49 / 169", criterion_dilation_growth},
        {3, "MAC accounting proportionality", criterion_mac_proportionality},
        {4, "monotonicity in tau and joint factor", criterion_monotonicity},
        {5, "change propagation vs worst case", criterion_propagation_reduction},
        {6, "throughput speed-up on low-motion video", criterion_throughput},
        {7, "threshold calibration under noise", criterion_calibration},
        {8, "memory accountant aggregates", criterion_memory},
    };

    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail += std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
        std::printf("[%s] criterion %d: %s (%.1fs) — %s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    secs, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
