#include "cbinfer/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

namespace cbinfer {

namespace {

using clock_type = std::chrono::steady_clock;

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double label_mismatch_pct(const LabelMap& a, const LabelMap& b) {
    if (!a.same_dims(b)) throw shape_error("label maps have different dimensions");
    std::size_t diff = 0;
    for (std::size_t k = 0; k < a.labels.size(); ++k)
        if (a.labels[k] != b.labels[k]) ++diff;
    return 100.0 * static_cast<double>(diff) / static_cast<double>(a.labels.size());
}

// Mean disagreement of one sequence run against reference labels,
// measured over frames >= 1 (the first frame is always a full evaluation).
double run_disagreement(Network& net, const Sequence& seq,
                        const std::vector<LabelMap>& reference) {
    reset_state(net);
    std::vector<double> per;
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        auto res = forward_frame(net, seq.frames[f], Engine::CBInfer);
        if (f >= 1) per.push_back(label_mismatch_pct(res.labels, reference[f]));
    }
    return mean(per);
}

double run_gt_error(Network& net, const Sequence& seq) {
    reset_state(net);
    std::vector<double> per;
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        auto res = forward_frame(net, seq.frames[f], Engine::CBInfer);
        if (f >= 1) per.push_back(label_mismatch_pct(res.labels, seq.groundTruth[f]));
    }
    return mean(per);
}

}  // namespace

double pixel_disagreement(const LabelMap& a, const LabelMap& b) {
    return label_mismatch_pct(a, b);
}

double pixel_error(const LabelMap& pred, const LabelMap& gt) {
    return label_mismatch_pct(pred, gt);
}

std::vector<LabelMap> run_sequence_labels(Network& net, const Sequence& seq, Engine engine) {
    reset_state(net);
    std::vector<LabelMap> labels;
    labels.reserve(seq.frames.size());
    for (const FrameTensor& frame : seq.frames)
        labels.push_back(forward_frame(net, frame, engine).labels);
    return labels;
}

std::vector<std::vector<float>> default_threshold_grids(Network& net,
                                                        const std::vector<Sequence>& sequences,
                                                        int gridSize) {
    if (sequences.empty()) throw spec_error("default_threshold_grids: no sequences");
    if (gridSize < 2) throw spec_error("default_threshold_grids: grid too small");

    const auto saved = net.thresholds();
    net.set_thresholds(std::vector<float>(net.cbLayers.size(), 0.0f));

    // Largest frame-to-frame input difference seen at each CBCONV layer.
    std::vector<float> maxDiff(net.cbLayers.size(), 0.0f);
    for (const Sequence& seq : sequences) {
        reset_state(net);
        std::vector<std::optional<FrameTensor>> prior(net.cbLayers.size());
        for (const FrameTensor& frame : seq.frames) {
            forward_frame(net, frame, Engine::CBInfer);
            for (std::size_t k = 0; k < net.cbLayers.size(); ++k) {
                const auto& cur = net.layers[net.cbLayers[k]].state.prevInput;
                if (prior[k])
                    maxDiff[k] = std::max(maxDiff[k], max_abs_diff(*cur, *prior[k]));
                prior[k] = *cur;
            }
        }
    }
    net.set_thresholds(saved);

    std::vector<std::vector<float>> grids;
    for (float md : maxDiff) {
        const float lo = 1e-3f;
        const float hi = std::max(2.0f * md, 2e-3f);
        std::vector<float> grid(gridSize);
        const double ratio = std::pow(static_cast<double>(hi) / lo,
                                      1.0 / static_cast<double>(gridSize - 1));
        double v = lo;
        for (int i = 0; i < gridSize; ++i, v *= ratio)
            grid[i] = static_cast<float>(v);
        grid.back() = hi;
        grids.push_back(std::move(grid));
    }
    return grids;
}

CalibrationResult calibrate_thresholds(Network& net, const std::vector<Sequence>& sequences,
                                       const std::vector<std::vector<float>>& grids,
                                       double budgetPct, bool useGroundTruth) {
    const std::size_t nLayers = net.cbLayers.size();
    if (sequences.empty()) throw spec_error("calibrate_thresholds: no sequences");
    if (grids.size() != nLayers)
        throw spec_error("calibrate_thresholds: expected one grid per CBCONV layer");
    for (const auto& g : grids) {
        if (g.empty()) throw spec_error("calibrate_thresholds: empty grid");
        if (!std::is_sorted(g.begin(), g.end()))
            throw spec_error("calibrate_thresholds: grid values must ascend");
    }
    if (budgetPct < 0.0) throw spec_error("calibrate_thresholds: negative budget");
    if (useGroundTruth)
        for (const auto& s : sequences)
            if (!s.has_ground_truth())
                throw spec_error("calibrate_thresholds: sequence \"" + s.name +
                                 "\" has no ground truth");

    const auto saved = net.thresholds();
    ThresholdVector chosen(nLayers, 0.0f);

    // All-zero reference run.
    net.set_thresholds(chosen);
    std::vector<std::vector<LabelMap>> reference;
    std::vector<double> refErr;
    for (const Sequence& seq : sequences) {
        reference.push_back(run_sequence_labels(net, seq));
        if (useGroundTruth) refErr.push_back(run_gt_error(net, seq));
    }

    CalibrationResult result;
    for (std::size_t L = 0; L < nLayers; ++L) {
        float best = 0.0f;
        for (float tau : grids[L]) {
            ThresholdVector taus = chosen;  // later layers stay at zero
            taus[L] = tau;
            net.set_thresholds(taus);
            std::vector<double> metric;
            for (std::size_t s = 0; s < sequences.size(); ++s) {
                if (useGroundTruth)
                    metric.push_back(run_gt_error(net, sequences[s]) - refErr[s]);
                else
                    metric.push_back(run_disagreement(net, sequences[s], reference[s]));
            }
            const double err = mean(metric);
            result.sweep.push_back({static_cast<int>(L + 1), tau, err});
            if (err <= budgetPct) best = std::max(best, tau);
        }
        chosen[L] = best;
    }

    net.set_thresholds(saved);
    result.thresholds = std::move(chosen);
    return result;
}

std::vector<TradeoffPoint> sweep_threshold_factor(Network& net,
                                                  const std::vector<Sequence>& sequences,
                                                  const ThresholdVector& base,
                                                  const std::vector<double>& factors) {
    if (sequences.empty()) throw spec_error("sweep_threshold_factor: no sequences");
    if (base.size() != net.cbLayers.size())
        throw spec_error("sweep_threshold_factor: base vector size mismatch");
    for (double f : factors)
        if (f < 0.0) throw spec_error("sweep_threshold_factor: negative factor");

    const auto saved = net.thresholds();
    const bool haveGt = std::all_of(sequences.begin(), sequences.end(),
                                    [](const Sequence& s) { return s.has_ground_truth(); });

    // Factor-0 reference run (identical to the full-frame baseline).
    net.set_thresholds(ThresholdVector(base.size(), 0.0f));
    std::vector<std::vector<LabelMap>> reference;
    std::vector<double> refErr;  // per frame, same weighting as the sweep runs
    for (const Sequence& seq : sequences) {
        reference.push_back(run_sequence_labels(net, seq));
        if (haveGt)
            for (std::size_t fr = 1; fr < seq.frames.size(); ++fr)
                refErr.push_back(
                    label_mismatch_pct(reference.back()[fr], seq.groundTruth[fr]));
    }

    std::vector<TradeoffPoint> points;
    for (double f : factors) {
        ThresholdVector taus(base.size());
        for (std::size_t k = 0; k < base.size(); ++k)
            taus[k] = static_cast<float>(f) * base[k];
        net.set_thresholds(taus);

        TradeoffPoint pt;
        pt.thresholdFactor = f;
        std::int64_t wallNanos = 0;
        std::int64_t measured = 0;
        std::vector<double> disagree;
        std::vector<double> gtErr;
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            const Sequence& seq = sequences[s];
            reset_state(net);
            for (std::size_t fr = 0; fr < seq.frames.size(); ++fr) {
                const auto t0 = clock_type::now();
                auto res = forward_frame(net, seq.frames[fr], Engine::CBInfer);
                const auto t1 = clock_type::now();
                if (fr == 0) continue;  // warm-up frame excluded
                wallNanos +=
                    std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
                ++measured;
                pt.macsTotal += res.macsTotal;
                for (int cb : net.cbLayers)
                    pt.changedPixelsTotal += res.stats[cb].changedInputPixels;
                disagree.push_back(label_mismatch_pct(res.labels, reference[s][fr]));
                if (haveGt)
                    gtErr.push_back(label_mismatch_pct(res.labels, seq.groundTruth[fr]));
            }
        }
        pt.disagreement = mean(disagree);
        pt.errorIncrease = haveGt ? (mean(gtErr) - mean(refErr)) : pt.disagreement;
        pt.framesPerSecond =
            wallNanos > 0 ? static_cast<double>(measured) * 1e9 / static_cast<double>(wallNanos)
                          : 0.0;
        points.push_back(pt);
    }

    net.set_thresholds(saved);
    return points;
}

void write_tradeoff_csv(const std::filesystem::path& file,
                        const std::vector<TradeoffPoint>& points) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw io_error("cannot open " + file.string() + " for writing");
    out << "factor,errorIncrease,numChangeTotal,throughput,macsTotal\n";
    char buf[160];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%lld,%.9g,%llu\n", p.thresholdFactor,
                      p.errorIncrease, static_cast<long long>(p.changedPixelsTotal),
                      p.framesPerSecond, static_cast<unsigned long long>(p.macsTotal));
        out << buf;
    }
    if (!out) throw io_error("failed writing " + file.string());
}

}  // namespace cbinfer
