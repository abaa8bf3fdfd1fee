#pragma once

#include <filesystem>
#include <vector>

#include "cbinfer/baseline.hpp"
#include "cbinfer/geometry.hpp"
#include "cbinfer/tensor.hpp"

namespace cbinfer {

// Raw frame file: little-endian 32-bit reals in planar (c, j, i) order.
// Dimensions are supplied externally (sequence manifest). Length and
// finiteness are validated.
FrameTensor read_frame_f32le(const std::filesystem::path& file, int channels, int height,
                             int width);
void write_frame_f32le(const std::filesystem::path& file, const FrameTensor& t);

// Binary PPM (P6, maxval 255): RGB planes scaled to [0,1] by dividing by 255.
FrameTensor read_ppm(const std::filesystem::path& file);

// Label map file: little-endian 16-bit class indices, row-major.
LabelMap read_labels_u16le(const std::filesystem::path& file, int height, int width);
void write_labels_u16le(const std::filesystem::path& file, const LabelMap& m);

// Per-layer weights file: kernel values in k(o,c,j,i) nested row-major order
// (o outermost) immediately followed by outChannels bias values, all
// little-endian 32-bit reals. The byte length must match the geometry
// exactly.
FilterMatrix read_weights_f32le(const std::filesystem::path& file, const ConvGeometry& geom);
void write_weights_f32le(const std::filesystem::path& file, const FilterMatrix& filters);

}  // namespace cbinfer
