#include "cbinfer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "cbinfer/io.hpp"
#include "json.hpp"

namespace cbinfer {

namespace {

// Engine output mapped to [0,1) with a fixed 24-bit mantissa, so results do
// not depend on std::uniform_real_distribution internals.
float unit_float(std::mt19937& rng) {
    return static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
}

std::string frame_name(int index, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "frame_%04d%s", index, suffix);
    return buf;
}

struct SpriteMotion {
    int startY = 0, startX = 0;
    int dirY = 0, dirX = 0;
};

SpriteMotion sprite_motion(const SynthConfig& cfg, int spriteIdx) {
    const SpriteConfig& s = cfg.sprites[spriteIdx];
    if (s.size > cfg.height || s.size > cfg.width)
        throw spec_error("sprite larger than frame");
    std::mt19937 rng(cfg.seed ^ (0x9e3779b9u * static_cast<std::uint32_t>(spriteIdx + 1)));
    SpriteMotion m;
    m.startY = static_cast<int>(rng() % static_cast<std::uint32_t>(cfg.height - s.size + 1));
    m.startX = static_cast<int>(rng() % static_cast<std::uint32_t>(cfg.width - s.size + 1));
    static constexpr int dirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                       {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    const auto& d = dirs[rng() % 8];
    m.dirY = d[0];
    m.dirX = d[1];
    return m;
}

}  // namespace

SpriteRect sprite_rect(const SynthConfig& cfg, int spriteIdx, int frameIdx) {
    const SpriteConfig& s = cfg.sprites.at(spriteIdx);
    const SpriteMotion m = sprite_motion(cfg, spriteIdx);
    const int travel = s.velocity * frameIdx;
    const int y = std::clamp(m.startY + m.dirY * travel, 0, cfg.height - s.size);
    const int x = std::clamp(m.startX + m.dirX * travel, 0, cfg.width - s.size);
    return {y, x, y + s.size, x + s.size};
}

float synth_background(const SynthConfig& cfg, int c, int j, int i) {
    (void)cfg;
    const unsigned v = static_cast<unsigned>(i * 31 + j * 17 + c * 47) % 101u;
    return 0.2f + 0.25f * (static_cast<float>(v) / 100.0f);
}

FrameTensor synth_frame(const SynthConfig& cfg, int frameIdx) {
    FrameTensor t(cfg.channels, cfg.height, cfg.width);
    for (int c = 0; c < cfg.channels; ++c) {
        float* plane = t.plane(c);
        for (int j = 0; j < cfg.height; ++j)
            for (int i = 0; i < cfg.width; ++i)
                plane[static_cast<std::size_t>(j) * cfg.width + i] =
                    synth_background(cfg, c, j, i);
    }
    for (std::size_t s = 0; s < cfg.sprites.size(); ++s) {
        const SpriteRect r = sprite_rect(cfg, static_cast<int>(s), frameIdx);
        const float v = cfg.sprites[s].intensity;
        for (int c = 0; c < cfg.channels; ++c) {
            float* plane = t.plane(c);
            for (int j = r.y0; j < r.y1; ++j)
                for (int i = r.x0; i < r.x1; ++i)
                    plane[static_cast<std::size_t>(j) * cfg.width + i] = v;
        }
    }
    if (cfg.noiseAmplitude > 0.0f) {
        std::mt19937 rng(cfg.seed * 2654435761u + static_cast<std::uint32_t>(frameIdx) + 1u);
        for (float& v : t.data)
            v += cfg.noiseAmplitude * (2.0f * unit_float(rng) - 1.0f);
    }
    return t;
}

LabelMap synth_labels(const SynthConfig& cfg, int frameIdx) {
    LabelMap m(cfg.height, cfg.width);
    for (std::size_t s = 0; s < cfg.sprites.size(); ++s) {
        const SpriteRect r = sprite_rect(cfg, static_cast<int>(s), frameIdx);
        for (int j = r.y0; j < r.y1; ++j)
            for (int i = r.x0; i < r.x1; ++i) m(j, i) = 1;
    }
    return m;
}

SequenceManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& outDir) {
    if (cfg.channels < 1 || cfg.height < 1 || cfg.width < 1 || cfg.frames < 1)
        throw spec_error("synth config has invalid dimensions");
    std::error_code ec;
    std::filesystem::create_directories(outDir, ec);
    if (ec) throw io_error("cannot create " + outDir.string() + ": " + ec.message());

    for (int f = 0; f < cfg.frames; ++f) {
        write_frame_f32le(outDir / frame_name(f, ".f32le"), synth_frame(cfg, f));
        write_labels_u16le(outDir / frame_name(f, ".labels.u16le"), synth_labels(cfg, f));
    }
    SequenceManifest man{cfg.channels, cfg.height, cfg.width, cfg.frames};
    nlohmann::json doc;
    doc["channels"] = man.channels;
    doc["height"] = man.height;
    doc["width"] = man.width;
    doc["frames"] = man.frames;
    std::ofstream out(outDir / "manifest.json", std::ios::trunc);
    if (!out) throw io_error("cannot write manifest in " + outDir.string());
    out << doc.dump(2) << "\n";
    return man;
}

Sequence synth_sequence(const SynthConfig& cfg, const std::string& name) {
    Sequence seq;
    seq.name = name;
    seq.manifest = {cfg.channels, cfg.height, cfg.width, cfg.frames};
    seq.frames.reserve(cfg.frames);
    seq.groundTruth.reserve(cfg.frames);
    for (int f = 0; f < cfg.frames; ++f) {
        seq.frames.push_back(synth_frame(cfg, f));
        seq.groundTruth.push_back(synth_labels(cfg, f));
    }
    return seq;
}

Sequence load_sequence(const std::filesystem::path& dir) {
    const auto manifestFile = dir / "manifest.json";
    std::ifstream in(manifestFile);
    if (!in) throw io_error("cannot open " + manifestFile.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(manifestFile.string() + ": " + e.what());
    }
    Sequence seq;
    seq.name = dir.filename().string();
    try {
        seq.manifest.channels = doc.at("channels").get<int>();
        seq.manifest.height = doc.at("height").get<int>();
        seq.manifest.width = doc.at("width").get<int>();
        seq.manifest.frames = doc.at("frames").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(manifestFile.string() + ": " + e.what());
    }

    for (int f = 0; f < seq.manifest.frames; ++f) {
        const auto raw = dir / frame_name(f, ".f32le");
        const auto ppm = dir / frame_name(f, ".ppm");
        if (std::filesystem::exists(raw)) {
            seq.frames.push_back(read_frame_f32le(raw, seq.manifest.channels,
                                                  seq.manifest.height, seq.manifest.width));
        } else if (std::filesystem::exists(ppm)) {
            FrameTensor t = read_ppm(ppm);
            if (t.channels != seq.manifest.channels || t.height != seq.manifest.height ||
                t.width != seq.manifest.width)
                throw io_error(ppm.string() + ": dimensions do not match manifest");
            seq.frames.push_back(std::move(t));
        } else {
            throw io_error("missing frame " + raw.string());
        }
    }
    bool haveAllLabels = true;
    for (int f = 0; f < seq.manifest.frames && haveAllLabels; ++f)
        haveAllLabels = std::filesystem::exists(dir / frame_name(f, ".labels.u16le"));
    if (haveAllLabels) {
        for (int f = 0; f < seq.manifest.frames; ++f)
            seq.groundTruth.push_back(read_labels_u16le(dir / frame_name(f, ".labels.u16le"),
                                                        seq.manifest.height,
                                                        seq.manifest.width));
    }
    return seq;
}

FilterMatrix random_filters(const ConvGeometry& geom, std::uint32_t seed) {
    std::mt19937 rng(seed);
    const int fanIn = geom.inChannels * geom.kernelH * geom.kernelW;
    const float scale = 1.0f / std::sqrt(static_cast<float>(fanIn));
    FilterMatrix f(geom.outChannels, fanIn);
    for (float& v : f.data) v = scale * (2.0f * unit_float(rng) - 1.0f);
    for (float& v : f.bias) v = 0.1f * (2.0f * unit_float(rng) - 1.0f);
    return f;
}

void generate_weights(NetworkSpec spec, const std::filesystem::path& dir, std::uint32_t seed) {
    chain_dims(spec);  // fills inChannels along the chain
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
    std::uint32_t k = 0;
    for (const LayerSpec& l : spec.layers) {
        ++k;
        if (!l.is_conv()) continue;
        write_weights_f32le(dir / l.weightsFile, random_filters(l.geom, seed + k));
    }
}

}  // namespace cbinfer
