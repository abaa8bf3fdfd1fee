#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbinfer/network.hpp"
#include "cbinfer/tensor.hpp"

namespace cbinfer {

// One moving square sprite: side length, speed in pixels per frame and the
// intensity written into every channel it covers.
struct SpriteConfig {
    int size = 8;
    int velocity = 1;
    float intensity = 0.9f;
};

// Deterministic synthetic sequence: static background pattern, moving
// sprites, optional additive uniform noise. The seed fully determines all
// frames; sprite boxes clamp at the frame borders.
struct SynthConfig {
    int channels = 3;
    int height = 64;
    int width = 64;
    int frames = 10;
    std::vector<SpriteConfig> sprites;
    float noiseAmplitude = 0.0f;
    std::uint32_t seed = 1;
};

struct SpriteRect {
    int y0 = 0, x0 = 0;  // inclusive top-left
    int y1 = 0, x1 = 0;  // exclusive bottom-right
};

// Closed-form sprite position for a frame (start and direction derived from
// the seed, clamped to stay in frame). Exposed so tests can recompute exact
// changed-pixel counts.
SpriteRect sprite_rect(const SynthConfig& cfg, int spriteIdx, int frameIdx);

// Background value at (c, j, i); static across frames, range well inside
// (0, 0.5) so default sprite intensities always contrast with it.
float synth_background(const SynthConfig& cfg, int c, int j, int i);

FrameTensor synth_frame(const SynthConfig& cfg, int frameIdx);
LabelMap synth_labels(const SynthConfig& cfg, int frameIdx);  // sprite = 1, background = 0

struct SequenceManifest {
    int channels = 0;
    int height = 0;
    int width = 0;
    int frames = 0;
};

// A fully loaded frame sequence with optional per-frame ground truth labels.
struct Sequence {
    std::string name;
    SequenceManifest manifest;
    std::vector<FrameTensor> frames;
    std::vector<LabelMap> groundTruth;  // empty when unavailable

    bool has_ground_truth() const { return !groundTruth.empty(); }
};

// Writes frame_%04d.f32le files, frame_%04d.labels.u16le ground truth and a
// manifest.json into outDir. Returns the manifest.
SequenceManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& outDir);

// In-memory variant of synth_generate, for tests and sweeps without IO.
Sequence synth_sequence(const SynthConfig& cfg, const std::string& name = "synthetic");

// Loads a sequence directory produced by synth_generate (or hand-assembled:
// manifest.json plus frame_%04d.f32le or frame_%04d.ppm files).
Sequence load_sequence(const std::filesystem::path& dir);

// Seeded random filters for a conv geometry; weights scaled by fan-in so
// activations stay well-conditioned through several layers.
FilterMatrix random_filters(const ConvGeometry& geom, std::uint32_t seed);

// Writes one weights file per conv layer of the spec into dir, using each
// layer's weightsFile name.
void generate_weights(NetworkSpec spec, const std::filesystem::path& dir, std::uint32_t seed);

}  // namespace cbinfer
