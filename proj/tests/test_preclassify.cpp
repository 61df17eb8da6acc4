#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "sarcd/common.hpp"
#include "sarcd/preclassify.hpp"
#include "sarcd/raster.hpp"

using namespace sarcd;

namespace {

DifferenceImage make_di(int w, int h, std::vector<double> data) {
    DifferenceImage di;
    di.width = w;
    di.height = h;
    di.data = std::move(data);
    return di;
}

}  // namespace

TEST_CASE("fcm separates two point masses exactly") {
    const std::vector<double> samples{0, 0, 0, 255, 255, 255};
    FcmResult res = fcm(samples, 2, 2.0, 100, 1e-5, 0);
    REQUIRE(res.centers.size() == 2);
    CHECK(std::abs(res.centers[0] - 0.0) < 1e-6);
    CHECK(std::abs(res.centers[1] - 255.0) < 1e-6);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::size_t own = samples[i] == 0.0 ? 0 : 1;
        CHECK(res.membership(i, own) == 1.0);
        CHECK(res.membership(i, 1 - own) == 0.0);
    }
}

TEST_CASE("fcm with one cluster per point nails the points") {
    const std::vector<double> samples{0, 100, 200};
    FcmResult res = fcm(samples, 3, 2.0, 100, 1e-5, 0);
    REQUIRE(res.centers.size() == 3);
    CHECK(std::abs(res.centers[0] - 0.0) < 1e-9);
    CHECK(std::abs(res.centers[1] - 100.0) < 1e-9);
    CHECK(std::abs(res.centers[2] - 200.0) < 1e-9);
    CHECK(res.objective_trace.back() < 1e-12);
}

TEST_CASE("fcm objective trace never increases") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_real_distribution<double> u(0.0, 255.0);
        std::vector<double> samples(400);
        for (double& v : samples) v = u(rng);
        const std::size_t c = 2 + static_cast<std::size_t>(trial % 4);
        FcmResult res = fcm(samples, c, 2.0, 100, 1e-5, 0);
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("fcm membership rows sum to one") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    std::vector<double> samples(300);
    for (double& v : samples) v = u(rng);
    FcmResult res = fcm(samples, 5, 2.0, 100, 1e-5, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            const double m = res.membership(i, k);
            CHECK(m >= 0.0);
            CHECK(m <= 1.0);
            sum += m;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("fcm centers come back strictly ascending") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    std::vector<double> samples(500);
    for (double& v : samples) v = u(rng);
    FcmResult res = fcm(samples, 4, 2.0, 100, 1e-5, 0);
    for (std::size_t k = 1; k < res.centers.size(); ++k)
        CHECK(res.centers[k] > res.centers[k - 1]);
}

TEST_CASE("fcm validates its inputs") {
    CHECK_THROWS_WITH_AS(fcm({1, 1, 1, 1}, 2, 2.0, 100, 1e-5, 0),
                         doctest::Contains("degenerate clustering input"), NumericError);
    CHECK_THROWS_AS(fcm({1, 2, 3}, 1, 2.0, 100, 1e-5, 0), ValidationError);
    CHECK_THROWS_AS(fcm({1, 2, 3}, 2, 1.0, 100, 1e-5, 0), ValidationError);
    CHECK_THROWS_AS(fcm({}, 2, 2.0, 100, 1e-5, 0), ValidationError);
}

TEST_CASE("bimodal point masses split cleanly with no intermediate pixels") {
    std::vector<double> data(1024);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = i % 2 == 0 ? 3.0 : 251.0;
    DifferenceImage di = make_di(32, 32, std::move(data));
    PseudoLabelMap map = hierarchical_fcm(di);
    CHECK(map.count(PixelLabel::Intermediate) == 0);
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        const PixelLabel expected = i % 2 == 0 ? PixelLabel::Unchanged : PixelLabel::Changed;
        CHECK(map.labels[i] == expected);
    }
}

TEST_CASE("constant difference image is rejected as degenerate") {
    DifferenceImage di = make_di(8, 8, std::vector<double>(64, 40.0));
    CHECK_THROWS_WITH_AS(hierarchical_fcm(di), doctest::Contains("degenerate clustering input"),
                         NumericError);
}

TEST_CASE("tri-band stripes: extremes take hard labels, midpoint rule wins in between") {
    // Stripes at 10/120/245. Every stripe coincides exactly with a cluster
    // center, so winning memberships are 1.0 and the midpoint test decides
    // the middle clusters: 120 sits below the stage-1 midpoint.
    std::vector<double> data;
    for (int row = 0; row < 30; ++row) {
        const double v = row < 10 ? 10.0 : (row < 20 ? 120.0 : 245.0);
        data.insert(data.end(), 30, v);
    }
    DifferenceImage di = make_di(30, 30, std::move(data));
    PseudoLabelMap map = hierarchical_fcm(di);
    for (int row = 0; row < 10; ++row)
        for (int col = 0; col < 30; ++col)
            CHECK(map.labels[row * 30 + col] == PixelLabel::Unchanged);
    for (int row = 10; row < 20; ++row)
        for (int col = 0; col < 30; ++col)
            CHECK(map.labels[row * 30 + col] == PixelLabel::Unchanged);
    for (int row = 20; row < 30; ++row)
        for (int col = 0; col < 30; ++col)
            CHECK(map.labels[row * 30 + col] == PixelLabel::Changed);
}

TEST_CASE("a ramp between modes produces intermediate pixels") {
    std::vector<double> data;
    data.insert(data.end(), 600, 10.0);
    for (int i = 0; i < 300; ++i) data.push_back(60.0 + 130.0 * i / 299.0);
    data.insert(data.end(), 600, 245.0);
    DifferenceImage di = make_di(50, 30, std::move(data));
    PseudoLabelMap map = hierarchical_fcm(di);
    CHECK(map.count(PixelLabel::Intermediate) > 0);
    for (std::size_t i = 0; i < 600; ++i) CHECK(map.labels[i] == PixelLabel::Unchanged);
    for (std::size_t i = 900; i < 1500; ++i) CHECK(map.labels[i] == PixelLabel::Changed);
}

TEST_CASE("labels are monotone in the difference value") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    std::vector<double> data(900);
    for (double& v : data) v = u(rng);
    DifferenceImage di = make_di(30, 30, std::move(data));
    PseudoLabelMap map = hierarchical_fcm(di);

    double max_unchanged = -1.0, min_changed = 256.0;
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        if (map.labels[i] == PixelLabel::Unchanged)
            max_unchanged = std::max(max_unchanged, di.data[i]);
        if (map.labels[i] == PixelLabel::Changed) min_changed = std::min(min_changed, di.data[i]);
    }
    CHECK(max_unchanged <= min_changed);
}

TEST_CASE("hierarchical_fcm is deterministic") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    std::vector<double> data(400);
    for (double& v : data) v = u(rng);
    DifferenceImage di = make_di(20, 20, data);
    PseudoLabelMap a = hierarchical_fcm(di);
    PseudoLabelMap b = hierarchical_fcm(di);
    CHECK(a.labels == b.labels);
}

TEST_CASE("label map debug dump uses 0/128/255") {
    PseudoLabelMap map;
    map.width = 3;
    map.height = 1;
    map.labels = {PixelLabel::Unchanged, PixelLabel::Intermediate, PixelLabel::Changed};
    const auto path = std::filesystem::temp_directory_path() / "sarcd_labels.pgm";
    write_label_map(map, path.string());
    RasterImage img = read_pgm(path.string());
    CHECK(img.data == std::vector<double>{0, 128, 255});
    std::filesystem::remove(path);
}
