#include "sarcd/synth.hpp"

#include <algorithm>
#include <random>

#include "sarcd/common.hpp"

namespace sarcd {

void validate(const SceneSpec& spec) {
    if (spec.width < 8 || spec.height < 8)
        throw ValidationError("scene: width and height must be at least 8");
    if (spec.n_shapes < 0) throw ValidationError("scene: n_shapes must be non-negative");
    if (!(spec.background_level >= 0.0 && spec.background_level < spec.change_level &&
          spec.change_level <= 255.0))
        throw ValidationError("scene: need 0 <= background_level < change_level <= 255");
    if (spec.speckle_looks < 1) throw ValidationError("scene: speckle_looks must be at least 1");
}

bool shape_contains(const PlacedShape& s, int x, int y) {
    if (!s.ellipse)
        return std::abs(x - s.cx) <= s.half_x && std::abs(y - s.cy) <= s.half_y;
    const double nx = static_cast<double>(x - s.cx) / s.half_x;
    const double ny = static_cast<double>(y - s.cy) / s.half_y;
    return nx * nx + ny * ny <= 1.0;
}

Scene generate(const SceneSpec& spec) {
    validate(spec);
    const int w = spec.width, h = spec.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::mt19937_64 rng(spec.seed);

    // Shape placement first, then speckle for image 1, then image 2; the
    // draw order is part of the determinism contract.
    Scene scene;
    const int min_half = std::max(3, std::min(w, h) / 10);
    const int max_half = std::max(min_half + 1, std::min(w, h) / 5);
    std::uniform_int_distribution<int> kind(0, 1);
    std::uniform_int_distribution<int> cx_dist(0, w - 1);
    std::uniform_int_distribution<int> cy_dist(0, h - 1);
    std::uniform_int_distribution<int> half_dist(min_half, max_half);
    for (int i = 0; i < spec.n_shapes; ++i) {
        PlacedShape s;
        s.ellipse = kind(rng) == 1;
        s.cx = cx_dist(rng);
        s.cy = cy_dist(rng);
        s.half_x = half_dist(rng);
        s.half_y = half_dist(rng);
        scene.shapes.push_back(s);
    }

    scene.truth.width = w;
    scene.truth.height = h;
    scene.truth.labels.assign(n, 0);
    for (const PlacedShape& s : scene.shapes) {
        const int x0 = std::max(0, s.cx - s.half_x), x1 = std::min(w - 1, s.cx + s.half_x);
        const int y0 = std::max(0, s.cy - s.half_y), y1 = std::min(h - 1, s.cy + s.half_y);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (shape_contains(s, x, y))
                    scene.truth.labels[static_cast<std::size_t>(y) * w + x] = 1;
    }
    const std::size_t changed =
        static_cast<std::size_t>(std::count(scene.truth.labels.begin(), scene.truth.labels.end(), 1));
    if (changed == n) throw ValidationError("scene: shapes cover the whole image");

    const double looks = static_cast<double>(spec.speckle_looks);
    std::gamma_distribution<double> speckle(looks, 1.0 / looks);

    auto render = [&](bool raised) {
        RasterImage img;
        img.width = w;
        img.height = h;
        img.data.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double clean =
                (raised && scene.truth.labels[i]) ? spec.change_level : spec.background_level;
            img.data[i] = std::clamp(clean * speckle(rng), 0.0, 255.0);
        }
        return img;
    };
    scene.i1 = render(false);
    scene.i2 = render(true);
    return scene;
}

}  // namespace sarcd
