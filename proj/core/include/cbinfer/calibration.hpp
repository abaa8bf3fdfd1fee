#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cbinfer/network.hpp"
#include "cbinfer/synth.hpp"

namespace cbinfer {

// One threshold per CBCONV layer, network order.
using ThresholdVector = std::vector<float>;

// Percent of pixels whose labels differ. Throws shape_error on mismatch.
double pixel_disagreement(const LabelMap& a, const LabelMap& b);

// Percent of mislabeled pixels against ground truth.
double pixel_error(const LabelMap& pred, const LabelMap& gt);

// One point of the joint threshold-factor trade-off.
struct TradeoffPoint {
    double thresholdFactor = 0.0;
    double errorIncrease = 0.0;            // percent, signed; vs ground truth when
                                           // available, else disagreement vs the
                                           // factor-0 reference
    double disagreement = 0.0;             // percent vs the factor-0 reference
    std::int64_t changedPixelsTotal = 0;   // detected changed input pixels, summed
                                           // over CBCONV layers and measured frames
    double framesPerSecond = 0.0;
    std::uint64_t macsTotal = 0;
};

// Labels of a full sequence run from reset.
std::vector<LabelMap> run_sequence_labels(Network& net, const Sequence& seq,
                                          Engine engine = Engine::CBInfer);

// One sweep sample recorded during calibration, for Fig.-style CSV plots.
struct CalibrationPoint {
    int layer = 0;  // CBCONV ordinal, 1-based
    float threshold = 0.0f;
    double errorIncrease = 0.0;  // percent
};

struct CalibrationResult {
    ThresholdVector thresholds;
    std::vector<CalibrationPoint> sweep;
};

// Per-layer candidate grids: 16 logarithmically spaced values from 1e-3 up
// to twice the largest per-layer frame-to-frame input difference observed
// over the sequences.
std::vector<std::vector<float>> default_threshold_grids(Network& net,
                                                        const std::vector<Sequence>& sequences,
                                                        int gridSize = 16);

// Layer-by-layer threshold selection: starting from all zeros, sweep each
// CBCONV layer's grid with earlier choices fixed and later layers at zero,
// and keep the largest value whose mean error increase (vs the all-zero
// reference) stays within the budget. useGroundTruth switches the metric
// from disagreement to signed ground-truth error increase.
CalibrationResult calibrate_thresholds(Network& net, const std::vector<Sequence>& sequences,
                                       const std::vector<std::vector<float>>& grids,
                                       double budgetPct, bool useGroundTruth = false);

// Joint scaling: for each factor f runs all sequences from reset with
// per-layer tau = f * base and records the trade-off. The first frame of
// each sequence (always a full evaluation) is excluded from the counters
// and timing.
std::vector<TradeoffPoint> sweep_threshold_factor(Network& net,
                                                  const std::vector<Sequence>& sequences,
                                                  const ThresholdVector& base,
                                                  const std::vector<double>& factors);

// CSV with header factor,errorIncrease,numChangeTotal,throughput,macsTotal.
void write_tradeoff_csv(const std::filesystem::path& file,
                        const std::vector<TradeoffPoint>& points);

}  // namespace cbinfer
