#include "sarcd/patches.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sarcd/common.hpp"

namespace sarcd {

void validate(const PatchConfig& cfg) {
    if (cfg.r < 3 || cfg.r > 31 || cfg.r % 2 == 0)
        throw ValidationError("patch config: r must be odd and in [3, 31], got " + std::to_string(cfg.r));
    if (cfg.max_per_class < 1)
        throw ValidationError("patch config: max_per_class must be at least 1");
}

namespace {

int clamp_coord(int v, int limit) {
    return v < 0 ? 0 : (v >= limit ? limit - 1 : v);
}

void fill_channel(const std::vector<double>& src, int width, int height, int row, int col,
                  int r, double* dst) {
    const int half = (r - 1) / 2;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = clamp_coord(row + dy, height);
        for (int dx = -half; dx <= half; ++dx) {
            const int x = clamp_coord(col + dx, width);
            *dst++ = src[static_cast<std::size_t>(y) * width + x] / 255.0;
        }
    }
}

}  // namespace

Tensor extract_patch(const RasterImage& i1, const RasterImage& i2, const DifferenceImage& di,
                     int row, int col, int r) {
    if (i1.width != i2.width || i1.height != i2.height || i1.width != di.width ||
        i1.height != di.height)
        throw ValidationError("extract_patch: sources must share dimensions");
    if (r < 3 || r % 2 == 0) throw ValidationError("extract_patch: r must be odd and >= 3");
    if (row < 0 || row >= i1.height || col < 0 || col >= i1.width)
        throw ValidationError("extract_patch: center (" + std::to_string(row) + ", " +
                              std::to_string(col) + ") outside image");

    const std::size_t ru = static_cast<std::size_t>(r);
    Tensor patch({3, ru, ru});
    fill_channel(i1.data, i1.width, i1.height, row, col, r, patch.data.data());
    fill_channel(i2.data, i1.width, i1.height, row, col, r, patch.data.data() + ru * ru);
    fill_channel(di.data, i1.width, i1.height, row, col, r, patch.data.data() + 2 * ru * ru);
    return patch;
}

std::vector<Sample> build_training_set(const RasterImage& i1, const RasterImage& i2,
                                       const DifferenceImage& di, const PseudoLabelMap& labels,
                                       const PatchConfig& cfg) {
    validate(cfg);
    if (labels.width != i1.width || labels.height != i1.height)
        throw ValidationError("build_training_set: label map dimensions do not match images");

    std::vector<std::size_t> changed, unchanged;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (labels.labels[i] == PixelLabel::Changed) changed.push_back(i);
        else if (labels.labels[i] == PixelLabel::Unchanged) unchanged.push_back(i);
    }
    if (changed.empty() || unchanged.empty())
        throw ValidationError("build_training_set: both classes must be present");

    std::mt19937_64 rng(cfg.seed);
    std::shuffle(changed.begin(), changed.end(), rng);
    std::shuffle(unchanged.begin(), unchanged.end(), rng);
    const std::size_t cap = static_cast<std::size_t>(cfg.max_per_class);
    if (changed.size() > cap) changed.resize(cap);
    if (unchanged.size() > cap) unchanged.resize(cap);

    std::vector<std::pair<std::size_t, int>> picks;
    picks.reserve(changed.size() + unchanged.size());
    for (std::size_t idx : changed) picks.emplace_back(idx, 1);
    for (std::size_t idx : unchanged) picks.emplace_back(idx, 0);
    std::shuffle(picks.begin(), picks.end(), rng);

    std::vector<Sample> samples;
    samples.reserve(picks.size());
    for (const auto& [idx, label] : picks) {
        const int row = static_cast<int>(idx) / i1.width;
        const int col = static_cast<int>(idx) % i1.width;
        Sample s;
        s.patch = extract_patch(i1, i2, di, row, col, cfg.r);
        s.label = label;
        s.pixel_index = idx;
        samples.push_back(std::move(s));
    }
    return samples;
}

void inject_label_noise(std::vector<Sample>& samples, double flip_rate, std::uint64_t seed) {
    if (!(flip_rate >= 0.0 && flip_rate < 1.0))
        throw ValidationError("inject_label_noise: flip rate must be in [0, 1)");
    const std::size_t n = samples.size();
    const std::size_t flips =
        static_cast<std::size_t>(std::llround(flip_rate * static_cast<double>(n)));
    if (flips == 0) return;

    // Partial Fisher-Yates picks the flip set without replacement.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < flips; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        samples[idx[i]].label = 1 - samples[idx[i]].label;
    }
}

}  // namespace sarcd
