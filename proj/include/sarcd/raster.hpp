#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sarcd {

/// 2-D grayscale intensity grid, row-major, top-left origin. Values are kept
/// as reals in [0, 255] even though files are 8-bit; downstream ratio math
/// needs real arithmetic.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
    double at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
};

/// Per-pixel binary decision map: 0 = unchanged, 1 = changed.
struct ChangeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return labels.size(); }
};

void validate(const RasterImage& img);
void validate(const ChangeMap& map);

// Binary PGM (P5), 8-bit, maxval 255. Header comments (# lines) are
// tolerated on read, never emitted on write.
RasterImage read_pgm(const std::string& path);

// Values are rounded to the nearest integer byte on write; a read of the
// written file reproduces an integer-valued image bit-exactly.
void write_pgm(const RasterImage& img, const std::string& path);

// Label 1 is stored as intensity 255, label 0 as 0.
void write_change_map(const ChangeMap& map, const std::string& path);

// Ground-truth rasters are conventionally 0/255; the midpoint threshold
// (>= 128 -> changed) tolerates antialiased edges and is idempotent.
ChangeMap binarize(const RasterImage& img);

}  // namespace sarcd
