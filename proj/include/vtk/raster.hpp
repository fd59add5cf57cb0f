#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vtk/error.hpp"

namespace vtk {

/// Hard per-pixel labels for one frame. Row-major, top-to-bottom,
/// values restricted to {0, 1}.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), data(size_t(w) * size_t(h), 0) {}

    std::uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }

    bool operator==(const BinaryMask&) const = default;
};

/// Soft foreground probabilities for one frame. Row-major, top-to-bottom,
/// values in [0, 1]. Stored as 32-bit floats to match the on-disk format
/// bit for bit.
struct ProbMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ProbMap() = default;
    ProbMap(int w, int h) : width(w), height(h), data(size_t(w) * size_t(h), 0.f) {}

    float& at(int x, int y) { return data[size_t(y) * width + x]; }
    float at(int x, int y) const { return data[size_t(y) * width + x]; }

    bool operator==(const ProbMap&) const = default;
};

/// Throws Error unless dims are >= 1, data length matches, and values are
/// in range ({0,1} for masks, [0,1] for maps).
void validate(const BinaryMask& m);
void validate(const ProbMap& p);

/// Reads an 8-bit single-channel PNG as a binary mask: 0 stays 0, any
/// nonzero pixel becomes 1. Rejects missing files, non-PNG content,
/// multi-channel or non-8-bit images, and zero-sized images.
BinaryMask read_mask(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG, 0 as 0 and 1 as 255. Byte output is
/// deterministic for a given mask; read_mask(write_mask(m)) == m.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Reads a grayscale PFM ("Pf", negative scale = little-endian). The file
/// stores rows bottom-to-top; the returned map is top-to-bottom. Values
/// outside [0, 1] are an error, not clamped.
ProbMap read_pfm(const std::filesystem::path& path);

/// Writes "Pf\n<w> <h>\n-1.0\n" followed by little-endian 32-bit floats,
/// bottom-to-top. read_pfm(write_pfm(p)) == p bit-exactly.
void write_pfm(const ProbMap& map, const std::filesystem::path& path);

/// Width/height from a PNG header without decoding the raster. Works for
/// any channel layout; used to recover original frame geometry.
std::pair<int, int> read_png_dims(const std::filesystem::path& path);

}  // namespace vtk
