#include "sarcd/diff_image.hpp"

#include <cmath>
#include <string>

#include "sarcd/common.hpp"

namespace sarcd {

DifferenceImage log_ratio(const RasterImage& i1, const RasterImage& i2) {
    validate(i1);
    validate(i2);
    if (i1.width != i2.width || i1.height != i2.height)
        throw ValidationError("log_ratio: dimension mismatch, " + std::to_string(i1.width) + "x" +
                              std::to_string(i1.height) + " vs " + std::to_string(i2.width) + "x" +
                              std::to_string(i2.height));

    DifferenceImage di;
    di.width = i1.width;
    di.height = i1.height;
    di.data.resize(i1.data.size());

    double max_raw = 0.0;
    for (std::size_t i = 0; i < i1.data.size(); ++i) {
        const double raw = std::fabs(std::log(i2.data[i] + 1.0) - std::log(i1.data[i] + 1.0));
        di.data[i] = raw;
        max_raw = std::max(max_raw, raw);
    }
    if (max_raw == 0.0) return di;  // identical inputs -> all zeros
    for (double& v : di.data) v = (v / max_raw) * 255.0;
    return di;
}

}  // namespace sarcd
