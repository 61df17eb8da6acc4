#pragma once

#include <vector>

#include "sarcd/raster.hpp"

namespace sarcd {

/// Normalized absolute log-ratio of a coregistered pair. Values lie in
/// [0, 255]; the maximum is exactly 255 unless the raw ratio is constant.
struct DifferenceImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
};

// Per pixel: |ln(i2+1) - ln(i1+1)|, then linear rescale of [0, max] onto
// [0, 255]. The +1 offset keeps the ratio finite on 8-bit data; the
// difference-of-logs form makes log_ratio(a, b) == log_ratio(b, a) exact.
DifferenceImage log_ratio(const RasterImage& i1, const RasterImage& i2);

}  // namespace sarcd
