#include "sarcd/raster.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sarcd/common.hpp"

namespace sarcd {

void validate(const RasterImage& img) {
    if (img.width <= 0 || img.height <= 0)
        throw ValidationError("raster: dimensions must be positive");
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height)
        throw ValidationError("raster: data length does not equal width*height");
    for (double v : img.data)
        if (!(v >= 0.0 && v <= 255.0))
            throw ValidationError("raster: value outside [0, 255]");
}

void validate(const ChangeMap& map) {
    if (map.width <= 0 || map.height <= 0)
        throw ValidationError("change map: dimensions must be positive");
    if (map.labels.size() != static_cast<std::size_t>(map.width) * map.height)
        throw ValidationError("change map: label length does not equal width*height");
    for (std::uint8_t v : map.labels)
        if (v > 1) throw ValidationError("change map: label outside {0, 1}");
}

namespace {

// Reads the next header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) continue;
        break;
    }
    if (c == EOF) return tok;
    tok.push_back(static_cast<char>(c));
    while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(c));
    if (c == '#') in.unget();
    return tok;
}

int parse_header_int(const std::string& tok, const char* field) {
    if (tok.empty())
        throw ValidationError(std::string("pgm: missing ") + field + " in header");
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw ValidationError(std::string("pgm: malformed ") + field + " '" + tok + "'");
    }
    if (pos != tok.size() || v <= 0 || v > std::numeric_limits<int>::max())
        throw ValidationError(std::string("pgm: malformed ") + field + " '" + tok + "'");
    return static_cast<int>(v);
}

}  // namespace

RasterImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("pgm: cannot open '" + path + "' for reading");

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || m1 != '5')
        throw ValidationError("pgm: malformed magic number, expected P5");

    const int width = parse_header_int(next_token(in), "width");
    const int height = parse_header_int(next_token(in), "height");
    const int maxval = parse_header_int(next_token(in), "maxval");
    if (maxval != 255)
        throw ValidationError("pgm: unsupported maxval " + std::to_string(maxval) + ", expected 255");
    // Exactly one whitespace byte separates the header from the payload;
    // next_token already consumed it.

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw ValidationError("pgm: truncated payload, expected " + std::to_string(n) +
                              " bytes, got " + std::to_string(in.gcount()));

    RasterImage img;
    img.width = width;
    img.height = height;
    img.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<double>(bytes[i]);
    return img;
}

void write_pgm(const RasterImage& img, const std::string& path) {
    validate(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("pgm: cannot open '" + path + "' for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const long long v = std::llround(img.data[i]);
        bytes[i] = static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("pgm: write to '" + path + "' failed");
}

void write_change_map(const ChangeMap& map, const std::string& path) {
    validate(map);
    RasterImage img;
    img.width = map.width;
    img.height = map.height;
    img.data.resize(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i) img.data[i] = map.labels[i] ? 255.0 : 0.0;
    write_pgm(img, path);
}

ChangeMap binarize(const RasterImage& img) {
    validate(img);
    ChangeMap map;
    map.width = img.width;
    map.height = img.height;
    map.labels.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) map.labels[i] = img.data[i] >= 128.0 ? 1 : 0;
    return map;
}

}  // namespace sarcd
