#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace covbalance {

/// Grayscale image with intensities in [0, 1], row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    std::size_t size() const { return pixels.size(); }
    double operator()(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

namespace detail {

// Skips whitespace and '#' comment lines, then reads one unsigned integer.
inline unsigned read_pnm_uint(std::istream& in, const std::string& what) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) {
        throw std::runtime_error("pgm: expected " + what);
    }
    unsigned value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + static_cast<unsigned>(c - '0');
        c = in.get();
    }
    if (c == EOF && what != "maxval") {
        throw std::runtime_error("pgm: truncated header after " + what);
    }
    return value;
}

}  // namespace detail

/// Loads a binary (P5) portable graymap and rescales to [0, 1].
/// Maxval up to 65535; two-byte samples are big-endian per the format.
inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("pgm: cannot open " + path);
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw std::runtime_error("pgm: " + path + " is not a binary P5 graymap");
    }
    const unsigned width = detail::read_pnm_uint(in, "width");
    const unsigned height = detail::read_pnm_uint(in, "height");
    const unsigned maxval = detail::read_pnm_uint(in, "maxval");
    if (width == 0 || height == 0) {
        throw std::runtime_error("pgm: zero dimension in " + path);
    }
    if (maxval == 0 || maxval > 65535) {
        throw std::runtime_error("pgm: maxval out of range in " + path);
    }
    // read_pnm_uint consumed exactly one whitespace byte after maxval.

    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height);
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(img.pixels.size() * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw std::runtime_error("pgm: truncated pixel data in " + path);
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        std::uint32_t v;
        if (bytes_per == 2) {
            v = (static_cast<std::uint32_t>(raw[2 * i]) << 8) | raw[2 * i + 1];
        } else {
            v = raw[i];
        }
        if (v > maxval) {
            throw std::runtime_error("pgm: sample exceeds maxval in " + path);
        }
        img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

}  // namespace covbalance
