#include "vtk/raster.hpp"

#include <png.h>

#include <bit>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

static_assert(std::endian::native == std::endian::little,
              "raster I/O assumes a little-endian host");

namespace vtk {

namespace {

// RAII wrapper to handle file pointer clean up
struct FilePointer {
    explicit FilePointer(FILE* ptr) : p(ptr) {}
    ~FilePointer() {
        if (p) fclose(p);
    }
    FilePointer(const FilePointer&) = delete;
    FilePointer& operator=(const FilePointer&) = delete;
    operator FILE*() const { return p; }
    FILE* p;
};

// libpng reports errors through longjmp; the message is stashed here and
// rethrown as vtk::Error once control is back in our frame.
struct PngErrorState {
    std::string message;
};

void png_error_handler(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
    if (state) state->message = msg ? msg : "unknown libpng error";
    longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

void validate(const BinaryMask& m) {
    if (m.width < 1 || m.height < 1)
        throw Error("BinaryMask: dimensions must be >= 1, got " + std::to_string(m.width) + "x" +
                    std::to_string(m.height));
    if (m.data.size() != size_t(m.width) * size_t(m.height))
        throw Error("BinaryMask: data length " + std::to_string(m.data.size()) +
                    " does not match " + std::to_string(m.width) + "x" + std::to_string(m.height));
    for (std::uint8_t v : m.data)
        if (v > 1) throw Error("BinaryMask: value " + std::to_string(int(v)) + " not in {0,1}");
}

void validate(const ProbMap& p) {
    if (p.width < 1 || p.height < 1)
        throw Error("ProbMap: dimensions must be >= 1, got " + std::to_string(p.width) + "x" +
                    std::to_string(p.height));
    if (p.data.size() != size_t(p.width) * size_t(p.height))
        throw Error("ProbMap: data length " + std::to_string(p.data.size()) + " does not match " +
                    std::to_string(p.width) + "x" + std::to_string(p.height));
    for (float v : p.data)
        if (!(v >= 0.f && v <= 1.f))
            throw Error("ProbMap: value " + std::to_string(v) + " not in [0,1]");
}

BinaryMask read_mask(const std::filesystem::path& path) {
    FilePointer f(fopen(path.c_str(), "rb"));
    if (!f) throw Error("read_mask: cannot open " + path.string());

    unsigned char sig[8];
    if (fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error("read_mask: not a PNG file: " + path.string());

    PngErrorState err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                             png_warning_handler);
    if (!png) throw Error("read_mask: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("read_mask: libpng init failed");
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    std::string reject;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("read_mask: PNG decode error in " + path.string() + ": " + err.message);
    }

    png_init_io(png, f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (w < 1 || h < 1)
        reject = "zero-sized image";
    else if (bit_depth != 8)
        reject = "bit depth " + std::to_string(bit_depth) + ", expected 8";
    else if (color_type != PNG_COLOR_TYPE_GRAY)
        reject = "color type " + std::to_string(color_type) + ", expected single-channel gray";
    if (!reject.empty()) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("read_mask: " + path.string() + ": " + reject);
    }

    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    pixels.resize(size_t(w) * size_t(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + size_t(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    BinaryMask mask{int(w), int(h)};
    for (size_t i = 0; i < pixels.size(); ++i) mask.data[i] = pixels[i] ? 1 : 0;
    return mask;
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    validate(mask);
    FilePointer f(fopen(path.c_str(), "wb"));
    if (!f) throw Error("write_mask: cannot open " + path.string() + " for writing");

    PngErrorState err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                              png_warning_handler);
    if (!png) throw Error("write_mask: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("write_mask: libpng init failed");
    }

    std::vector<std::uint8_t> pixels(mask.data.size());
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.data[i] ? 255 : 0;
    std::vector<png_bytep> rows(mask.height);
    for (int y = 0; y < mask.height; ++y) rows[y] = pixels.data() + size_t(y) * mask.width;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("write_mask: PNG encode error for " + path.string() + ": " + err.message);
    }

    png_init_io(png, f);
    // Fixed compression settings keep the byte output deterministic.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, png_uint_32(mask.width), png_uint_32(mask.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    if (fflush(f) != 0) throw Error("write_mask: I/O failure writing " + path.string());
}

namespace {

// Whitespace-delimited header token, PFM style.
std::string next_token(FILE* f, const std::filesystem::path& path) {
    std::string tok;
    int c;
    while ((c = fgetc(f)) != EOF && std::isspace(c)) {}
    if (c == EOF) throw Error("read_pfm: truncated header in " + path.string());
    do {
        tok.push_back(char(c));
    } while ((c = fgetc(f)) != EOF && !std::isspace(c));
    if (c == EOF) throw Error("read_pfm: truncated header in " + path.string());
    return tok;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path) {
    size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw Error("read_pfm: bad dimension '" + tok + "' in " + path.string());
    }
    if (pos != tok.size() || v < 1)
        throw Error("read_pfm: bad dimension '" + tok + "' in " + path.string());
    return v;
}

}  // namespace

ProbMap read_pfm(const std::filesystem::path& path) {
    FilePointer f(fopen(path.c_str(), "rb"));
    if (!f) throw Error("read_pfm: cannot open " + path.string());

    std::string magic = next_token(f, path);
    if (magic != "Pf")
        throw Error("read_pfm: bad magic '" + magic + "' in " + path.string() +
                    " (expected grayscale 'Pf')");
    int w = parse_dim(next_token(f, path), path);
    int h = parse_dim(next_token(f, path), path);
    std::string scale_tok = next_token(f, path);
    double scale = 0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw Error("read_pfm: bad scale '" + scale_tok + "' in " + path.string());
    }
    if (scale >= 0)
        throw Error("read_pfm: positive scale (big-endian) unsupported in " + path.string());
    // next_token consumed exactly one whitespace byte after the scale; the
    // raster starts here, rows bottom-to-top.

    ProbMap map(w, h);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        if (fread(row.data(), sizeof(float), size_t(w), f) != size_t(w))
            throw Error("read_pfm: raster length mismatch in " + path.string());
        std::memcpy(&map.data[size_t(y) * w], row.data(), size_t(w) * sizeof(float));
    }
    if (fgetc(f) != EOF)
        throw Error("read_pfm: raster length mismatch (trailing data) in " + path.string());
    for (float v : map.data)
        if (!(v >= 0.f && v <= 1.f))
            throw Error("read_pfm: value " + std::to_string(v) + " outside [0,1] in " +
                        path.string());
    return map;
}

void write_pfm(const ProbMap& map, const std::filesystem::path& path) {
    validate(map);
    FilePointer f(fopen(path.c_str(), "wb"));
    if (!f) throw Error("write_pfm: cannot open " + path.string() + " for writing");

    if (fprintf(f, "Pf\n%d %d\n-1.0\n", map.width, map.height) < 0)
        throw Error("write_pfm: I/O failure writing " + path.string());
    for (int y = map.height - 1; y >= 0; --y) {
        if (fwrite(&map.data[size_t(y) * map.width], sizeof(float), size_t(map.width), f) !=
            size_t(map.width))
            throw Error("write_pfm: I/O failure writing " + path.string());
    }
    if (fflush(f) != 0) throw Error("write_pfm: I/O failure writing " + path.string());
}

std::pair<int, int> read_png_dims(const std::filesystem::path& path) {
    FilePointer f(fopen(path.c_str(), "rb"));
    if (!f) throw Error("read_png_dims: cannot open " + path.string());
    // 8-byte signature, 4-byte chunk length, "IHDR", then width and height.
    unsigned char buf[24];
    if (fread(buf, 1, 24, f) != 24 || png_sig_cmp(buf, 0, 8) != 0 ||
        std::memcmp(buf + 12, "IHDR", 4) != 0)
        throw Error("read_png_dims: not a PNG file: " + path.string());
    auto be32 = [](const unsigned char* p) {
        return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
               (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
    };
    int w = int(be32(buf + 16));
    int h = int(be32(buf + 20));
    if (w < 1 || h < 1) throw Error("read_png_dims: zero-sized image: " + path.string());
    return {w, h};
}

}  // namespace vtk
