#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "sarcd/common.hpp"
#include "sarcd/diff_image.hpp"

using namespace sarcd;

namespace {

RasterImage make(int w, int h, std::vector<double> data) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.data = std::move(data);
    return img;
}

}  // namespace

TEST_CASE("identical inputs give the all-zero difference image") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> byte(0, 255);
    RasterImage img = make(8, 6, {});
    img.data.resize(48);
    for (double& v : img.data) v = byte(rng);
    DifferenceImage di = log_ratio(img, img);
    for (double v : di.data) CHECK(v == 0.0);
}

TEST_CASE("1x2 pair pins the normalization endpoints") {
    RasterImage i1 = make(2, 1, {0, 0});
    RasterImage i2 = make(2, 1, {255, 0});
    DifferenceImage di = log_ratio(i1, i2);
    // raw = [ln 256, 0]; the max element lands exactly on 255
    CHECK(di.data[0] == 255.0);
    CHECK(di.data[1] == 0.0);
}

TEST_CASE("1x3 pair: ln4 = 2 ln2 forces the midpoint") {
    RasterImage i1 = make(3, 1, {10, 10, 10});
    RasterImage i2 = make(3, 1, {10, 21, 43});
    DifferenceImage di = log_ratio(i1, i2);
    CHECK(di.data[0] == 0.0);
    CHECK(di.data[1] == doctest::Approx(127.5).epsilon(1e-12));
    CHECK(di.data[2] == 255.0);
}

TEST_CASE("dimension mismatch names both sizes") {
    RasterImage a = make(2, 1, {0, 0});
    RasterImage b = make(1, 2, {0, 0});
    CHECK_THROWS_WITH_AS(log_ratio(a, b), doctest::Contains("2x1"), ValidationError);
    CHECK_THROWS_WITH_AS(log_ratio(a, b), doctest::Contains("1x2"), ValidationError);
}

TEST_CASE("log ratio is exactly symmetric in its arguments") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> byte(0, 255);
    RasterImage a = make(16, 16, {});
    RasterImage b = make(16, 16, {});
    a.data.resize(256);
    b.data.resize(256);
    for (int trial = 0; trial < 10; ++trial) {
        for (double& v : a.data) v = byte(rng);
        for (double& v : b.data) v = byte(rng);
        DifferenceImage ab = log_ratio(a, b);
        DifferenceImage ba = log_ratio(b, a);
        CHECK(ab.data == ba.data);
    }
}

TEST_CASE("normalized range is [0, 255] with an exact max on non-constant input") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> byte(0, 255);
    RasterImage a = make(20, 20, {});
    RasterImage b = make(20, 20, {});
    a.data.resize(400);
    b.data.resize(400);
    for (double& v : a.data) v = byte(rng);
    for (double& v : b.data) v = byte(rng);
    DifferenceImage di = log_ratio(a, b);
    double mx = 0.0;
    for (double v : di.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
        mx = std::max(mx, v);
    }
    CHECK(mx == 255.0);
}

TEST_CASE("response grows with the intensity gap on either side of equality") {
    // Two-pixel images: the far anchor pins the normalization so the first
    // pixel's output tracks its raw value monotonically.
    auto value = [](double v2) {
        RasterImage a = make(2, 1, {100, 0});
        RasterImage b = make(2, 1, {v2, 255});
        return log_ratio(a, b).data[0];
    };
    double prev = value(100);
    CHECK(prev == 0.0);
    for (double v2 : {110.0, 130.0, 170.0, 250.0}) {
        const double cur = value(v2);
        CHECK(cur >= prev);
        prev = cur;
    }
    prev = value(100);
    for (double v2 : {90.0, 70.0, 30.0, 5.0}) {
        const double cur = value(v2);
        CHECK(cur >= prev);
        prev = cur;
    }
}
