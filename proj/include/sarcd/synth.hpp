#pragma once

#include <cstdint>
#include <vector>

#include "sarcd/raster.hpp"

namespace sarcd {

/// Synthetic coregistered pair: flat background, a set of raised regions in
/// the second image, multiplicative L-look gamma speckle on both.
struct SceneSpec {
    int width = 128;
    int height = 128;
    int n_shapes = 4;
    double background_level = 60.0;
    double change_level = 180.0;
    int speckle_looks = 4;
    std::uint64_t seed = 0;
};

/// Axis-aligned placed region; `half_x`/`half_y` are half-extents around the
/// center. Ellipse membership: ((x-cx)/hx)^2 + ((y-cy)/hy)^2 <= 1.
struct PlacedShape {
    bool ellipse = false;
    int cx = 0;
    int cy = 0;
    int half_x = 0;
    int half_y = 0;
};

struct Scene {
    RasterImage i1;
    RasterImage i2;
    ChangeMap truth;
    std::vector<PlacedShape> shapes;
};

void validate(const SceneSpec& spec);

bool shape_contains(const PlacedShape& s, int x, int y);

// Deterministic given the seed. Throws when the placed shapes cover every
// pixel (no unchanged region would remain).
Scene generate(const SceneSpec& spec);

}  // namespace sarcd
