#include "cbinfer/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace cbinfer {

namespace {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

std::vector<char> read_all(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw io_error("cannot open " + file.string());
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<char> buf(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(buf.data(), size))
        throw io_error("failed reading " + file.string());
    return buf;
}

void write_all(const std::filesystem::path& file, const void* data, std::size_t bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + file.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw io_error("failed writing " + file.string());
}

void check_finite(const std::vector<float>& values, const std::filesystem::path& file) {
    for (float v : values)
        if (!std::isfinite(v)) throw io_error("non-finite value in " + file.string());
}

}  // namespace

FrameTensor read_frame_f32le(const std::filesystem::path& file, int channels, int height,
                             int width) {
    const auto buf = read_all(file);
    const std::size_t expect = static_cast<std::size_t>(channels) * height * width * 4;
    if (buf.size() != expect)
        throw io_error(file.string() + ": expected " + std::to_string(expect) + " bytes, got " +
                       std::to_string(buf.size()));
    FrameTensor t(channels, height, width);
    std::memcpy(t.data.data(), buf.data(), buf.size());
    check_finite(t.data, file);
    return t;
}

void write_frame_f32le(const std::filesystem::path& file, const FrameTensor& t) {
    write_all(file, t.data.data(), t.data.size() * 4);
}

FrameTensor read_ppm(const std::filesystem::path& file) {
    const auto buf = read_all(file);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        // Skip whitespace and '#' comments between header fields.
        while (pos < buf.size()) {
            if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
                ++pos;
            } else if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])))
            tok.push_back(buf[pos++]);
        return tok;
    };

    if (next_token() != "P6") throw io_error(file.string() + ": not a binary PPM (P6) file");
    const std::string ws = next_token(), hs = next_token(), ms = next_token();
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(ws);
        h = std::stoi(hs);
        maxval = std::stoi(ms);
    } catch (const std::exception&) {
        throw io_error(file.string() + ": malformed PPM header");
    }
    if (w <= 0 || h <= 0) throw io_error(file.string() + ": invalid PPM dimensions");
    if (maxval != 255) throw io_error(file.string() + ": only 8-bit PPM supported");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (buf.size() - pos < need)
        throw io_error(file.string() + ": truncated PPM pixel data");

    FrameTensor t(3, h, w);
    const unsigned char* px = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    const std::size_t planeSize = static_cast<std::size_t>(h) * w;
    for (std::size_t p = 0; p < planeSize; ++p)
        for (int c = 0; c < 3; ++c)
            t.data[static_cast<std::size_t>(c) * planeSize + p] = px[p * 3 + c] / 255.0f;
    return t;
}

LabelMap read_labels_u16le(const std::filesystem::path& file, int height, int width) {
    const auto buf = read_all(file);
    const std::size_t expect = static_cast<std::size_t>(height) * width * 2;
    if (buf.size() != expect)
        throw io_error(file.string() + ": expected " + std::to_string(expect) + " bytes, got " +
                       std::to_string(buf.size()));
    LabelMap m(height, width);
    std::memcpy(m.labels.data(), buf.data(), buf.size());
    return m;
}

void write_labels_u16le(const std::filesystem::path& file, const LabelMap& m) {
    write_all(file, m.labels.data(), m.labels.size() * 2);
}

FilterMatrix read_weights_f32le(const std::filesystem::path& file, const ConvGeometry& geom) {
    const std::size_t kernelValues = static_cast<std::size_t>(geom.outChannels) *
                                     geom.inChannels * geom.kernelH * geom.kernelW;
    const std::size_t expect = (kernelValues + geom.outChannels) * 4;
    const auto buf = read_all(file);
    if (buf.size() != expect)
        throw io_error(file.string() + ": expected " + std::to_string(expect) +
                       " bytes (kernel " + std::to_string(geom.outChannels) + "x" +
                       std::to_string(geom.inChannels) + "x" + std::to_string(geom.kernelH) +
                       "x" + std::to_string(geom.kernelW) + " + bias), got " +
                       std::to_string(buf.size()));
    FilterMatrix f(geom.outChannels, geom.inChannels * geom.kernelH * geom.kernelW);
    std::memcpy(f.data.data(), buf.data(), kernelValues * 4);
    std::memcpy(f.bias.data(), buf.data() + kernelValues * 4,
                static_cast<std::size_t>(geom.outChannels) * 4);
    check_finite(f.data, file);
    check_finite(f.bias, file);
    return f;
}

void write_weights_f32le(const std::filesystem::path& file, const FilterMatrix& filters) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + file.string() + " for writing");
    out.write(reinterpret_cast<const char*>(filters.data.data()),
              static_cast<std::streamsize>(filters.data.size() * 4));
    out.write(reinterpret_cast<const char*>(filters.bias.data()),
              static_cast<std::streamsize>(filters.bias.size() * 4));
    if (!out) throw io_error("failed writing " + file.string());
}

}  // namespace cbinfer
