#pragma once

#include <cstdint>
#include <vector>

#include "sarcd/diff_image.hpp"
#include "sarcd/preclassify.hpp"
#include "sarcd/raster.hpp"
#include "sarcd/tensor.hpp"

namespace sarcd {

struct PatchConfig {
    int r = 7;                 // patch side length, odd, in [3, 31]
    int max_per_class = 20000;
    std::uint64_t seed = 0;
};

void validate(const PatchConfig& cfg);

/// One training/inference unit: a 3 x R x R patch (channels: image 1,
/// image 2, difference image; values scaled to [0, 1]) plus its label and
/// the flat index of the source pixel.
struct Sample {
    Tensor patch;
    int label = 0;  // 0 unchanged, 1 changed
    std::size_t pixel_index = 0;
};

// Window of half-width (r-1)/2 centered at (row, col); out-of-bounds
// coordinates clamp to the nearest valid pixel (replicate padding).
Tensor extract_patch(const RasterImage& i1, const RasterImage& i2, const DifferenceImage& di,
                     int row, int col, int r);

// All confident pixels become candidates (Intermediate excluded); each class
// is shuffled with cfg.seed and truncated to max_per_class, then the merged
// set is shuffled once more. Same seed, same order.
std::vector<Sample> build_training_set(const RasterImage& i1, const RasterImage& i2,
                                       const DifferenceImage& di, const PseudoLabelMap& labels,
                                       const PatchConfig& cfg);

// Flips the labels of exactly round(flip_rate * n) samples chosen uniformly
// without replacement; patch data is untouched.
void inject_label_noise(std::vector<Sample>& samples, double flip_rate, std::uint64_t seed);

}  // namespace sarcd
