// cbench: synthetic-sequence generation and change-based vs full-frame
// inference benchmarking. Exit codes: 0 success, 1 usage, 2 data error,
// 3 verification failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbinfer/calibration.hpp"
#include "cbinfer/cbconv.hpp"
#include "cbinfer/io.hpp"
#include "cbinfer/network.hpp"
#include "cbinfer/synth.hpp"

namespace fs = std::filesystem;
using namespace cbinfer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

std::vector<float> parse_float_list(const std::string& text) {
    std::vector<float> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stof(item));
        } catch (const std::exception&) {
            throw spec_error("cannot parse \"" + item + "\" as a number");
        }
    }
    if (values.empty()) throw spec_error("empty list \"" + text + "\"");
    return values;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (float v : parse_float_list(text)) out.push_back(v);
    return out;
}

std::string format_thresholds(const std::vector<float>& taus) {
    std::string out;
    char buf[48];
    for (std::size_t k = 0; k < taus.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.9g", taus[k]);
        if (k) out += ",";
        out += buf;
    }
    return out;
}

struct RunOptions {
    std::string netFile;
    std::string weightsDir;
    std::vector<std::string> seqDirs;
    std::string csvFile;
    std::string thresholds;
    double factor = 1.0;
    bool verify = false;
    std::string engine = "cbinfer";
};

Network load_from(const RunOptions& opt) {
    NetworkSpec spec = load_network_spec(opt.netFile);
    Network net = load_network(spec, opt.weightsDir);
    if (!opt.thresholds.empty()) net.set_thresholds(parse_float_list(opt.thresholds));
    if (opt.factor != 1.0) {
        auto taus = net.thresholds();
        for (float& t : taus) t = static_cast<float>(opt.factor) * t;
        net.set_thresholds(taus);
    }
    return net;
}

std::ofstream open_csv(const std::string& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw io_error("cannot open " + file + " for writing");
    return out;
}

// ---------------------------------------------------------------- run ----

int cmd_run(const RunOptions& opt) {
    Network net = load_from(opt);
    const Sequence seq = load_sequence(opt.seqDirs.at(0));

    const bool wantCb = opt.verify || opt.engine == "cbinfer";
    const bool wantBaseline = opt.verify || opt.engine == "baseline";
    const auto taus = net.thresholds();
    const bool allZero = std::all_of(taus.begin(), taus.end(),
                                     [](float t) { return t == 0.0f; });

    std::ofstream csv;
    if (!opt.csvFile.empty()) {
        csv = open_csv(opt.csvFile);
        csv << "frameIndex,engine,wallNanos,macsTotal";
        for (std::size_t k = 1; k <= net.cbLayers.size(); ++k)
            csv << ",changedIn_l" << k << ",changedOut_l" << k;
        csv << ",disagreement\n";
    }

    auto emit = [&](int frameIdx, const char* engine, std::int64_t nanos,
                    const ForwardResult& res, double disagreement) {
        if (!csv.is_open()) return;
        csv << frameIdx << "," << engine << "," << nanos << "," << res.macsTotal;
        for (int cb : net.cbLayers)
            csv << "," << res.stats[cb].changedInputPixels << ","
                << res.stats[cb].changedOutputPixels;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", disagreement);
        csv << "," << buf << "\n";
    };

    double maxDisagreement = 0.0;
    bool verifyFailed = false;
    reset_state(net);
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        std::optional<ForwardResult> cb, bl;
        if (wantCb) {
            const auto t0 = std::chrono::steady_clock::now();
            cb = forward_frame(net, seq.frames[f], Engine::CBInfer);
            const auto t1 = std::chrono::steady_clock::now();
            const auto ns =
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            double dis = 0.0;
            if (wantBaseline) {
                const auto b0 = std::chrono::steady_clock::now();
                bl = forward_frame(net, seq.frames[f], Engine::Baseline);
                const auto b1 = std::chrono::steady_clock::now();
                dis = pixel_disagreement(cb->labels, bl->labels);
                maxDisagreement = std::max(maxDisagreement, dis);
                if (allZero && cb->labels.labels != bl->labels.labels) verifyFailed = true;
                emit(static_cast<int>(f), "baseline",
                     std::chrono::duration_cast<std::chrono::nanoseconds>(b1 - b0).count(),
                     *bl, 0.0);
            }
            emit(static_cast<int>(f), "cbinfer", ns, *cb, dis);
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            bl = forward_frame(net, seq.frames[f], Engine::Baseline);
            const auto t1 = std::chrono::steady_clock::now();
            emit(static_cast<int>(f), "baseline",
                 std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count(), *bl,
                 0.0);
        }
    }

    if (opt.verify) {
        if (allZero) {
            if (verifyFailed) {
                std::cerr << "verification FAILED: tau=0 outputs differ from baseline\n";
                return kExitVerify;
            }
            std::cout << "verify: tau=0 outputs identical to baseline over "
                      << seq.frames.size() << " frames\n";
        } else {
            std::printf("verify: max disagreement vs baseline %.6g%%\n", maxDisagreement);
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------- calibrate ----

int cmd_calibrate(const RunOptions& opt, double budget, const std::string& thresholdsOut,
                  bool useGt) {
    Network net = load_from(opt);
    std::vector<Sequence> seqs;
    for (const auto& dir : opt.seqDirs) seqs.push_back(load_sequence(dir));

    const auto grids = default_threshold_grids(net, seqs);
    const auto result = calibrate_thresholds(net, seqs, grids, budget, useGt);

    if (!opt.csvFile.empty()) {
        auto csv = open_csv(opt.csvFile);
        csv << "layer,threshold,errorIncrease\n";
        char buf[96];
        for (const auto& p : result.sweep) {
            std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", p.layer,
                          static_cast<double>(p.threshold), p.errorIncrease);
            csv << buf;
        }
    }
    const std::string line = format_thresholds(result.thresholds);
    std::cout << "thresholds: " << line << "\n";
    if (!thresholdsOut.empty()) {
        std::ofstream out(thresholdsOut, std::ios::trunc);
        if (!out) throw io_error("cannot open " + thresholdsOut + " for writing");
        out << line << "\n";
    }
    return kExitOk;
}

// -------------------------------------------------------------- sweep ----

int cmd_sweep(const RunOptions& opt, const std::string& factorsArg) {
    Network net = load_from(opt);
    ThresholdVector base = net.thresholds();
    const auto factors = parse_double_list(factorsArg);

    std::ofstream csv;
    if (!opt.csvFile.empty()) {
        csv = open_csv(opt.csvFile);
        csv << "sequence,factor,errorIncrease,numChangeTotal,throughput,macsTotal\n";
    }
    char buf[192];
    for (const auto& dir : opt.seqDirs) {
        std::vector<Sequence> one{load_sequence(dir)};
        const auto points = sweep_threshold_factor(net, one, base, factors);
        for (const auto& p : points) {
            std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%lld,%.9g,%llu", one[0].name.c_str(),
                          p.thresholdFactor, p.errorIncrease,
                          static_cast<long long>(p.changedPixelsTotal), p.framesPerSecond,
                          static_cast<unsigned long long>(p.macsTotal));
            if (csv.is_open()) csv << buf << "\n";
            std::cout << buf << "\n";
        }
    }
    return kExitOk;
}

// ------------------------------------------------------- analyze-prop ----

ChangeMap densify(const ChangeIndexList& idx, int h, int w) {
    ChangeMap m(h, w);
    for (std::int32_t p : idx.indices) m.bits[static_cast<std::size_t>(p)] = 1;
    return m;
}

int cmd_analyze_prop(const RunOptions& opt) {
    Network net = load_from(opt);
    const Sequence seq = load_sequence(opt.seqDirs.at(0));
    if (net.cbLayers.size() < 2)
        throw spec_error("analyze-prop needs at least two CBCONV layers");

    std::ofstream csv;
    if (!opt.csvFile.empty()) {
        csv = open_csv(opt.csvFile);
        csv << "frameIndex,layer,detectedCount,worstCaseCount,detectedFraction,"
               "worstCaseFraction\n";
    }

    reset_state(net);
    char buf[160];
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        ForwardTrace trace;
        forward_frame(net, seq.frames[f], Engine::CBInfer, &trace);
        if (f == 0) continue;  // full evaluation, no propagation to compare

        for (std::size_t k = 1; k < net.cbLayers.size(); ++k) {
            const Layer& prevLayer = net.layers[net.cbLayers[k - 1]];
            const Layer& nextLayer = net.layers[net.cbLayers[k]];

            // Worst case: the previous layer's update set pushed through every
            // intermediate stage. Pooling and full-frame convs dilate the set
            // by their support; ReLU leaves the grid untouched.
            ChangeMap wave = densify(trace.cb[k - 1].updated, prevLayer.outDims.height,
                                     prevLayer.outDims.width);
            for (int li = net.cbLayers[k - 1] + 1; li < net.cbLayers[k]; ++li) {
                const Layer& mid = net.layers[li];
                switch (mid.spec.kind) {
                    case LayerKind::MAXPOOL:
                        wave = dilate_changes(
                            wave, ConvGeometry::pooling(mid.spec.window, mid.spec.stride,
                                                        mid.inDims.channels));
                        break;
                    case LayerKind::CONV:
                        wave = dilate_changes(wave, mid.spec.geom);
                        break;
                    default:
                        break;  // RELU: per-pixel, grid unchanged
                }
            }
            const ChangeMap worst = dilate_changes(wave, nextLayer.spec.geom);
            const std::int64_t worstCount = worst.count();
            const std::int64_t detectedCount = trace.cb[k].updated.count();
            const double grid = static_cast<double>(nextLayer.outDims.height) *
                                nextLayer.outDims.width;
            std::snprintf(buf, sizeof(buf), "%d,%zu,%lld,%lld,%.9g,%.9g",
                          static_cast<int>(f), k + 1,
                          static_cast<long long>(detectedCount),
                          static_cast<long long>(worstCount),
                          100.0 * static_cast<double>(detectedCount) / grid,
                          100.0 * static_cast<double>(worstCount) / grid);
            if (csv.is_open()) csv << buf << "\n";
            std::cout << buf << "\n";
        }
    }
    return kExitOk;
}

// -------------------------------------------------------------- synth ----

int cmd_synth(const SynthConfig& cfg, const std::string& outDir,
              const std::vector<std::string>& spriteArgs, const std::string& netFile,
              const std::string& weightsOut) {
    SynthConfig full = cfg;
    for (const auto& arg : spriteArgs) {
        SpriteConfig s;
        if (std::sscanf(arg.c_str(), "%d:%d:%f", &s.size, &s.velocity, &s.intensity) != 3)
            throw spec_error("cannot parse sprite \"" + arg + "\" (want size:velocity:intensity)");
        full.sprites.push_back(s);
    }
    if (!outDir.empty()) {
        const auto man = synth_generate(full, outDir);
        std::cout << "wrote " << man.frames << " frames (" << man.channels << "x" << man.height
                  << "x" << man.width << ") to " << outDir << "\n";
    }
    if (!weightsOut.empty()) {
        if (netFile.empty()) throw spec_error("--gen-weights requires --net");
        NetworkSpec spec = load_network_spec(netFile);
        generate_weights(spec, weightsOut, full.seed);
        std::cout << "wrote weights for " << netFile << " to " << weightsOut << "\n";
    }
    if (outDir.empty() && weightsOut.empty())
        throw spec_error("synth: nothing to do (need --out and/or --gen-weights)");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"change-based CNN inference benchmark harness"};
    app.require_subcommand(1);

    // synth
    SynthConfig synthCfg;
    std::string synthOut, synthNet, synthWeights;
    std::vector<std::string> spriteArgs;
    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence and/or weights");
    synth->add_option("--out", synthOut, "output sequence directory");
    synth->add_option("--channels", synthCfg.channels, "frame channels")->default_val(3);
    synth->add_option("--height", synthCfg.height, "frame height")->default_val(64);
    synth->add_option("--width", synthCfg.width, "frame width")->default_val(64);
    synth->add_option("--frames", synthCfg.frames, "frame count")->default_val(10);
    synth->add_option("--noise", synthCfg.noiseAmplitude,
                      "additive uniform noise amplitude per pixel per frame");
    synth->add_option("--sprite", spriteArgs,
                      "moving sprite as size:velocity:intensity (repeatable)");
    synth->add_option("--seed", synthCfg.seed, "RNG seed")->default_val(1);
    synth->add_option("--net", synthNet, "network spec (for --gen-weights)");
    synth->add_option("--gen-weights", synthWeights, "write seeded random weights here");

    auto add_common = [](CLI::App* cmd, RunOptions& opt, bool multiSeq) {
        cmd->add_option("--net", opt.netFile, "network spec JSON")->required();
        cmd->add_option("--weights", opt.weightsDir, "weights directory")->required();
        auto* seq = cmd->add_option("--seq", opt.seqDirs, "sequence directory");
        if (multiSeq)
            seq->required()->take_all();
        else
            seq->required()->expected(1);
        cmd->add_option("--csv", opt.csvFile, "CSV output file");
        cmd->add_option("--thresholds", opt.thresholds,
                        "per-CBCONV-layer thresholds, comma separated");
        cmd->add_option("--factor", opt.factor, "scale all thresholds jointly");
    };

    // run
    RunOptions runOpt;
    auto* run = app.add_subcommand("run", "benchmark one engine over a sequence");
    add_common(run, runOpt, false);
    run->add_option("--engine", runOpt.engine, "baseline or cbinfer")
        ->check(CLI::IsMember({"baseline", "cbinfer"}));
    run->add_flag("--verify", runOpt.verify,
                  "also run the other engine and compare label maps");

    // calibrate
    RunOptions calOpt;
    double budget = 0.1;
    std::string thresholdsOut;
    bool useGt = false;
    auto* calibrate = app.add_subcommand("calibrate", "select per-layer thresholds");
    add_common(calibrate, calOpt, true);
    calibrate->add_option("--budget", budget, "max error increase, percentage points")
        ->default_val(0.1);
    calibrate->add_option("--thresholds-out", thresholdsOut, "write the selected vector here");
    calibrate->add_flag("--use-gt", useGt, "score against ground-truth labels");

    // sweep
    RunOptions sweepOpt;
    std::string factorsArg = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2";
    auto* sweep = app.add_subcommand("sweep", "joint threshold-factor trade-off");
    add_common(sweep, sweepOpt, true);
    sweep->add_option("--factors", factorsArg, "comma-separated factor list");

    // analyze-prop
    RunOptions propOpt;
    auto* prop = app.add_subcommand("analyze-prop",
                                    "detected changes vs worst-case propagation per layer");
    add_common(prop, propOpt, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synthCfg, synthOut, spriteArgs, synthNet, synthWeights);
        if (run->parsed()) return cmd_run(runOpt);
        if (calibrate->parsed()) return cmd_calibrate(calOpt, budget, thresholdsOut, useGt);
        if (sweep->parsed()) return cmd_sweep(sweepOpt, factorsArg);
        if (prop->parsed()) return cmd_analyze_prop(propOpt);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
