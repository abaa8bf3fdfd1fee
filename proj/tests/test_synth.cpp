#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cbinfer/cbconv.hpp"
#include "cbinfer/io.hpp"
#include "cbinfer/synth.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace cbinfer;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("synth");

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cbinfer_synth_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("no noise and no sprites: all frames byte-identical") {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.height = 12;
    cfg.width = 10;
    cfg.frames = 4;
    Sequence seq = synth_sequence(cfg);
    for (int f = 1; f < cfg.frames; ++f)
        CHECK(testutil::bitwise_equal(seq.frames[0], seq.frames[f]));
}

TEST_CASE("the same seed reproduces byte-identical files") {
    SynthConfig cfg;
    cfg.channels = 3;
    cfg.height = cfg.width = 16;
    cfg.frames = 3;
    cfg.noiseAmplitude = 0.05f;
    cfg.sprites.push_back({4, 1, 0.9f});
    cfg.seed = 77;

    TempDir a, b;
    synth_generate(cfg, a.path);
    synth_generate(cfg, b.path);
    for (int f = 0; f < cfg.frames; ++f) {
        char name[64];
        std::snprintf(name, sizeof(name), "frame_%04d.f32le", f);
        CHECK(slurp(a.path / name) == slurp(b.path / name));
    }

    cfg.seed = 78;
    TempDir c;
    synth_generate(cfg, c.path);
    CHECK(slurp(a.path / "frame_0000.f32le") != slurp(c.path / "frame_0000.f32le"));
}

TEST_CASE("moving sprite: changed pixels equal the exact box symmetric difference") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = cfg.width = 32;
    cfg.frames = 6;
    cfg.sprites.push_back({6, 2, 0.9f});
    cfg.seed = 5;
    Sequence seq = synth_sequence(cfg);

    for (int f = 1; f < cfg.frames; ++f) {
        const SpriteRect a = sprite_rect(cfg, 0, f - 1);
        const SpriteRect b = sprite_rect(cfg, 0, f);
        std::set<int> expectChanged;
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i) {
                const bool inA = j >= a.y0 && j < a.y1 && i >= a.x0 && i < a.x1;
                const bool inB = j >= b.y0 && j < b.y1 && i >= b.x0 && i < b.x1;
                if (inA != inB) expectChanged.insert(j * 32 + i);
            }
        ChangeMap m = detect_changes(seq.frames[f], seq.frames[f - 1], 0.01f);
        CHECK(static_cast<std::size_t>(m.count()) == expectChanged.size());
        for (int idx : expectChanged) CHECK(m.bits[idx]);

        // Never more than the 2*s*(s+d) motion bound.
        const int s = cfg.sprites[0].size, d = cfg.sprites[0].velocity;
        CHECK(m.count() <= 2 * s * (s + d));
    }
}

TEST_CASE("ground-truth labels mark exactly the sprite boxes") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = 20;
    cfg.width = 24;
    cfg.frames = 2;
    cfg.sprites.push_back({5, 1, 0.8f});
    cfg.seed = 13;
    LabelMap gt = synth_labels(cfg, 1);
    const SpriteRect r = sprite_rect(cfg, 0, 1);
    for (int j = 0; j < 20; ++j)
        for (int i = 0; i < 24; ++i) {
            const bool inside = j >= r.y0 && j < r.y1 && i >= r.x0 && i < r.x1;
            CHECK(gt(j, i) == (inside ? 1 : 0));
        }
}

TEST_CASE("generated sequences load back unchanged") {
    SynthConfig cfg;
    cfg.channels = 2;
    cfg.height = 10;
    cfg.width = 14;
    cfg.frames = 3;
    cfg.noiseAmplitude = 0.02f;
    cfg.sprites.push_back({3, 1, 0.9f});
    cfg.seed = 21;

    TempDir dir;
    const auto man = synth_generate(cfg, dir.path);
    CHECK(man.frames == 3);
    Sequence loaded = load_sequence(dir.path);
    Sequence direct = synth_sequence(cfg);
    CHECK(loaded.manifest.channels == 2);
    REQUIRE(loaded.frames.size() == 3);
    REQUIRE(loaded.has_ground_truth());
    for (int f = 0; f < 3; ++f) {
        CHECK(testutil::bitwise_equal(loaded.frames[f], direct.frames[f]));
        CHECK(loaded.groundTruth[f].labels == direct.groundTruth[f].labels);
    }
}

TEST_CASE("sprite boxes clamp at the frame border") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = cfg.width = 16;
    cfg.frames = 64;  // long enough to hit a border at velocity 2
    cfg.sprites.push_back({4, 2, 0.9f});
    cfg.seed = 2;
    for (int f = 0; f < cfg.frames; ++f) {
        const SpriteRect r = sprite_rect(cfg, 0, f);
        CHECK(r.y0 >= 0);
        CHECK(r.x0 >= 0);
        CHECK(r.y1 <= 16);
        CHECK(r.x1 <= 16);
        CHECK(r.y1 - r.y0 == 4);
        CHECK(r.x1 - r.x0 == 4);
    }
    // Clamped: the final position equals one of the corners' coordinates.
    const SpriteRect last = sprite_rect(cfg, 0, 63);
    const bool pinnedY = last.y0 == 0 || last.y1 == 16;
    const bool pinnedX = last.x0 == 0 || last.x1 == 16;
    CHECK((pinnedY || pinnedX));
}

TEST_CASE("oversized sprites are rejected") {
    SynthConfig cfg;
    cfg.channels = 1;
    cfg.height = cfg.width = 8;
    cfg.frames = 1;
    cfg.sprites.push_back({9, 1, 0.9f});
    CHECK_THROWS_AS(synth_sequence(cfg), spec_error);
}

TEST_CASE("ppm frames load as [0,1] planar tensors") {
    TempDir dir;
    const auto file = dir.path / "frame.ppm";
    {
        std::ofstream out(file, std::ios::binary);
        out << "P6\n# comment\n2 2\n255\n";
        const unsigned char px[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 102, 153};
        out.write(reinterpret_cast<const char*>(px), 12);
    }
    FrameTensor t = read_ppm(file);
    REQUIRE(t.channels == 3);
    REQUIRE(t.height == 2);
    REQUIRE(t.width == 2);
    CHECK(t(0, 0, 0) == 1.0f);
    CHECK(t(1, 0, 1) == 1.0f);
    CHECK(t(2, 1, 0) == 1.0f);
    CHECK(t(0, 1, 1) == doctest::Approx(51.0f / 255.0f));
    CHECK(t(1, 1, 1) == doctest::Approx(102.0f / 255.0f));
    CHECK(t(2, 1, 1) == doctest::Approx(153.0f / 255.0f));

    std::ofstream bad(dir.path / "bad.ppm", std::ios::binary);
    bad << "P5\n2 2\n255\n";
    bad.close();
    CHECK_THROWS_AS(read_ppm(dir.path / "bad.ppm"), io_error);
}

TEST_CASE("weight generation is deterministic per seed") {
    TempDir a, b;
    NetworkSpec spec;
    spec.inputChannels = 1;
    spec.inputHeight = spec.inputWidth = 8;
    spec.numClasses = 2;
    LayerSpec l;
    l.kind = LayerKind::CONV;
    l.geom.kernelH = l.geom.kernelW = 3;
    l.geom.padH = l.geom.padW = 1;
    l.geom.outChannels = 2;
    l.weightsFile = "w.f32le";
    spec.layers.push_back(l);
    generate_weights(spec, a.path, 9);
    generate_weights(spec, b.path, 9);
    CHECK(slurp(a.path / "w.f32le") == slurp(b.path / "w.f32le"));
    generate_weights(spec, b.path, 10);
    CHECK(slurp(a.path / "w.f32le") != slurp(b.path / "w.f32le"));
}

TEST_SUITE_END();
