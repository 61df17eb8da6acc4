#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sarcd/diff_image.hpp"

namespace sarcd {

enum class PixelLabel : std::uint8_t { Unchanged = 0, Changed = 1, Intermediate = 2 };

/// Fuzzy c-means output. Centers are ascending; membership rows sum to 1;
/// the objective trace is non-increasing.
struct FcmResult {
    std::vector<double> centers;       // c entries, strictly ascending
    std::vector<double> memberships;   // n x c row-major
    std::vector<double> objective_trace;

    double membership(std::size_t sample, std::size_t cluster) const {
        return memberships[sample * centers.size() + cluster];
    }
};

/// Three-way pixel labeling produced by the clustering stage; only Changed
/// and Unchanged pixels feed training.
struct PseudoLabelMap {
    int width = 0;
    int height = 0;
    std::vector<PixelLabel> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t count(PixelLabel l) const;
};

// Classical FCM on scalar samples. Initial centers sit at the c evenly
// spaced quantiles (levels (k+0.5)/c) of the sample values, so runs are
// deterministic; the seed is kept for optional subsampling and is unused
// by the core loop. Iterates until max |delta center| < tol or max_iter.
FcmResult fcm(const std::vector<double>& samples, std::size_t c, double fuzzifier,
              std::size_t max_iter, double tol, std::uint64_t seed);

// Two-stage clustering of the difference image. Stage 1 (c=2) fixes the
// low/high partition means; stage 2 (c=5) assigns each pixel to its
// argmax-membership cluster. The lowest cluster maps to Unchanged and the
// highest to Changed; middle clusters need winning membership >= 0.90 and
// a center on the proper side of the stage-1 midpoint, otherwise the pixel
// stays Intermediate.
PseudoLabelMap hierarchical_fcm(const DifferenceImage& di);

// Debug rendering: 0 = unchanged, 128 = intermediate, 255 = changed.
void write_label_map(const PseudoLabelMap& map, const std::string& path);

}  // namespace sarcd
