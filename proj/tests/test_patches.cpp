#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>

#include "doctest.h"
#include "sarcd/common.hpp"
#include "sarcd/patches.hpp"

using namespace sarcd;

namespace {

RasterImage constant_image(int w, int h, double v) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.data.assign(static_cast<std::size_t>(w) * h, v);
    return img;
}

RasterImage ramp_image(int w, int h) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.data[y * w + x] = (y * w + x) % 256;
    return img;
}

DifferenceImage zero_di(int w, int h) {
    DifferenceImage di;
    di.width = w;
    di.height = h;
    di.data.assign(static_cast<std::size_t>(w) * h, 0.0);
    return di;
}

// Straightforward clamped-index extraction, kept independent of the
// implementation under test.
double oracle_value(const std::vector<double>& img, int w, int h, int row, int col, int dy,
                    int dx) {
    const int y = std::clamp(row + dy, 0, h - 1);
    const int x = std::clamp(col + dx, 0, w - 1);
    return img[static_cast<std::size_t>(y) * w + x] / 255.0;
}

}  // namespace

TEST_CASE("constant inputs give constant channels with a zero difference channel") {
    RasterImage i1 = constant_image(8, 8, 100);
    RasterImage i2 = constant_image(8, 8, 100);
    DifferenceImage di = zero_di(8, 8);
    Tensor patch = extract_patch(i1, i2, di, 4, 4, 3);
    REQUIRE(patch.shape == std::vector<std::size_t>{3, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(patch.data[i] == doctest::Approx(100.0 / 255.0).epsilon(1e-15));
        CHECK(patch.data[9 + i] == doctest::Approx(100.0 / 255.0).epsilon(1e-15));
        CHECK(patch.data[18 + i] == 0.0);
    }
}

TEST_CASE("corner extraction replicates the border pixels") {
    RasterImage i1;
    i1.width = 3;
    i1.height = 3;
    i1.data = {5, 6, 7, 8, 9, 10, 11, 12, 13};
    RasterImage i2 = i1;
    DifferenceImage di = zero_di(3, 3);
    Tensor patch = extract_patch(i1, i2, di, 0, 0, 3);
    const std::vector<double> expected{5, 5, 6, 5, 5, 6, 8, 8, 9};
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(patch.data[i] == doctest::Approx(expected[i] / 255.0).epsilon(1e-15));
}

TEST_CASE("extraction matches the clamped-index oracle at random centers") {
    RasterImage i1 = ramp_image(17, 13);
    RasterImage i2 = ramp_image(17, 13);
    std::reverse(i2.data.begin(), i2.data.end());
    DifferenceImage di = zero_di(17, 13);
    for (std::size_t i = 0; i < di.data.size(); ++i) di.data[i] = (7 * i) % 256 ? (7 * i) % 256 : 0;

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> row_d(0, 12), col_d(0, 16);
    const int r = 5, half = 2;
    for (int trial = 0; trial < 100; ++trial) {
        const int row = row_d(rng), col = col_d(rng);
        Tensor patch = extract_patch(i1, i2, di, row, col, r);
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
                const std::size_t at = (dy + half) * r + (dx + half);
                CHECK(patch.data[at] == oracle_value(i1.data, 17, 13, row, col, dy, dx));
                CHECK(patch.data[r * r + at] == oracle_value(i2.data, 17, 13, row, col, dy, dx));
                CHECK(patch.data[2 * r * r + at] == oracle_value(di.data, 17, 13, row, col, dy, dx));
            }
    }
}

TEST_CASE("extraction validates center and r") {
    RasterImage img = constant_image(4, 4, 1);
    DifferenceImage di = zero_di(4, 4);
    CHECK_THROWS_AS(extract_patch(img, img, di, 4, 0, 3), ValidationError);
    CHECK_THROWS_AS(extract_patch(img, img, di, 0, -1, 3), ValidationError);
    CHECK_THROWS_AS(extract_patch(img, img, di, 0, 0, 4), ValidationError);
}

namespace {

PseudoLabelMap label_block(int w, int h, int changed, int unchanged) {
    PseudoLabelMap map;
    map.width = w;
    map.height = h;
    map.labels.assign(static_cast<std::size_t>(w) * h, PixelLabel::Intermediate);
    for (int i = 0; i < changed; ++i) map.labels[i] = PixelLabel::Changed;
    for (int i = 0; i < unchanged; ++i) map.labels[changed + i] = PixelLabel::Unchanged;
    return map;
}

}  // namespace

TEST_CASE("training set caps each class independently") {
    RasterImage i1 = ramp_image(16, 16);
    RasterImage i2 = ramp_image(16, 16);
    DifferenceImage di = zero_di(16, 16);

    PatchConfig cfg;
    cfg.r = 3;
    cfg.seed = 5;

    cfg.max_per_class = 5;
    auto samples = build_training_set(i1, i2, di, label_block(16, 16, 10, 10), cfg);
    CHECK(samples.size() == 10);
    CHECK(std::count_if(samples.begin(), samples.end(),
                        [](const Sample& s) { return s.label == 1; }) == 5);

    cfg.max_per_class = 50;
    samples = build_training_set(i1, i2, di, label_block(16, 16, 3, 100), cfg);
    CHECK(samples.size() == 53);
    CHECK(std::count_if(samples.begin(), samples.end(),
                        [](const Sample& s) { return s.label == 1; }) == 3);
}

TEST_CASE("training set labels agree with the source map and patches stay in range") {
    RasterImage i1 = ramp_image(16, 16);
    RasterImage i2 = ramp_image(16, 16);
    DifferenceImage di = zero_di(16, 16);
    PseudoLabelMap map = label_block(16, 16, 40, 60);
    PatchConfig cfg;
    cfg.r = 5;
    cfg.seed = 1;
    auto samples = build_training_set(i1, i2, di, map, cfg);
    for (const Sample& s : samples) {
        CHECK(s.patch.shape == std::vector<std::size_t>{3, 5, 5});
        for (double v : s.patch.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const PixelLabel src = map.labels[s.pixel_index];
        CHECK(src == (s.label == 1 ? PixelLabel::Changed : PixelLabel::Unchanged));
    }
}

TEST_CASE("training set order is a pure function of the seed") {
    RasterImage i1 = ramp_image(12, 12);
    RasterImage i2 = ramp_image(12, 12);
    DifferenceImage di = zero_di(12, 12);
    PseudoLabelMap map = label_block(12, 12, 30, 30);
    PatchConfig cfg;
    cfg.r = 3;
    cfg.seed = 77;
    auto a = build_training_set(i1, i2, di, map, cfg);
    auto b = build_training_set(i1, i2, di, map, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].pixel_index == b[i].pixel_index);
        CHECK(a[i].label == b[i].label);
    }

    cfg.seed = 78;
    auto c = build_training_set(i1, i2, di, map, cfg);
    bool same_order = true;
    for (std::size_t i = 0; i < a.size(); ++i) same_order &= a[i].pixel_index == c[i].pixel_index;
    CHECK_FALSE(same_order);
}

TEST_CASE("training set requires both classes") {
    RasterImage i1 = ramp_image(8, 8);
    DifferenceImage di = zero_di(8, 8);
    PatchConfig cfg;
    cfg.r = 3;
    CHECK_THROWS_AS(build_training_set(i1, i1, di, label_block(8, 8, 10, 0), cfg),
                    ValidationError);
}

TEST_CASE("label noise flips exactly the requested count and is an involution") {
    RasterImage i1 = ramp_image(10, 10);
    DifferenceImage di = zero_di(10, 10);
    PatchConfig cfg;
    cfg.r = 3;
    cfg.seed = 3;
    auto samples = build_training_set(i1, i1, di, label_block(10, 10, 5, 5), cfg);
    REQUIRE(samples.size() == 10);
    std::vector<int> original;
    for (const Sample& s : samples) original.push_back(s.label);

    auto copy = samples;
    inject_label_noise(copy, 0.0, 9);
    for (std::size_t i = 0; i < copy.size(); ++i) CHECK(copy[i].label == original[i]);

    inject_label_noise(copy, 0.5, 9);
    int flipped = 0;
    for (std::size_t i = 0; i < copy.size(); ++i) flipped += copy[i].label != original[i];
    CHECK(flipped == 5);
    for (std::size_t i = 0; i < copy.size(); ++i) CHECK(copy[i].patch.data == samples[i].patch.data);

    inject_label_noise(copy, 0.5, 9);  // same flip set restores the labels
    for (std::size_t i = 0; i < copy.size(); ++i) CHECK(copy[i].label == original[i]);

    CHECK_THROWS_AS(inject_label_noise(copy, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(inject_label_noise(copy, -0.1, 0), ValidationError);
}

TEST_CASE("patch config validation") {
    PatchConfig cfg;
    cfg.r = 4;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg.r = 33;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg.r = 7;
    cfg.max_per_class = 0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
}
