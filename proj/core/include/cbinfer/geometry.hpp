#pragma once

#include <string>

#include "cbinfer/error.hpp"

namespace cbinfer {

// Convolution layer geometry: kernel support, stride, zero padding and
// channel counts. Output size follows the usual floor formula
//   h_o = (h_in + 2*padH - kernelH) / strideH + 1.
struct ConvGeometry {
    int kernelH = 1;
    int kernelW = 1;
    int strideH = 1;
    int strideW = 1;
    int padH = 0;
    int padW = 0;
    int inChannels = 1;
    int outChannels = 1;

    int outHeight(int inHeight) const {
        return (inHeight + 2 * padH - kernelH) / strideH + 1;
    }
    int outWidth(int inWidth) const {
        return (inWidth + 2 * padW - kernelW) / strideW + 1;
    }

    // Validates that the output grid is non-empty for the given input.
    void check_output(int inHeight, int inWidth) const {
        if (kernelH < 1 || kernelW < 1 || strideH < 1 || strideW < 1 || padH < 0 || padW < 0)
            throw geometry_error("invalid convolution geometry");
        if (inHeight + 2 * padH < kernelH || inWidth + 2 * padW < kernelW)
            throw geometry_error("convolution output would be empty: input " +
                                 std::to_string(inHeight) + "x" + std::to_string(inWidth) +
                                 ", kernel " + std::to_string(kernelH) + "x" +
                                 std::to_string(kernelW));
    }

    // Geometry of a pooling window, used when propagating change maps
    // through pooling layers (window acts as an unpadded kernel).
    static ConvGeometry pooling(int window, int stride, int channels) {
        ConvGeometry g;
        g.kernelH = g.kernelW = window;
        g.strideH = g.strideW = stride;
        g.inChannels = g.outChannels = channels;
        return g;
    }
};

}  // namespace cbinfer
