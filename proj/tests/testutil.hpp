#pragma once

// Shared test fixtures: scratch directories, raster generators, raw PNG/PFM
// writers for malformed-input cases, a tiny synthetic RVOS-style dataset,
// and helpers for driving the installed binaries.

#include <png.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vtk/error.hpp"
#include "vtk/manifest.hpp"
#include "vtk/raster.hpp"
#include "vtk/subprocess.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& hint = "case") {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("vtk-test-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + "-" +
                 hint);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    fs::path path_;
};

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vtk::Error("testutil::slurp: cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline void spit(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw vtk::Error("testutil::spit: cannot write " + path.string());
}

inline vtk::BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density = 0.5) {
    vtk::BinaryMask m(w, h);
    std::bernoulli_distribution bit(density);
    for (auto& v : m.data) v = bit(rng) ? 1 : 0;
    return m;
}

inline vtk::ProbMap random_prob(std::mt19937_64& rng, int w, int h) {
    vtk::ProbMap p(w, h);
    std::uniform_real_distribution<float> val(0.f, 1.f);
    for (auto& v : p.data) v = val(rng);
    return p;
}

// Grayscale (or RGB) PNG with arbitrary sample values, for exercising
// read_mask on inputs write_mask never produces.
inline void write_raw_png(const fs::path& path, int w, int h,
                          const std::vector<std::uint8_t>& samples, int bit_depth = 8,
                          bool rgb = false) {
    const int channels = rgb ? 3 : 1;
    const size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
    if (samples.size() != size_t(w) * h * channels * bytes_per_sample)
        throw vtk::Error("write_raw_png: sample count mismatch");

    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw vtk::Error("write_raw_png: cannot open " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fclose(f);
        throw vtk::Error("write_raw_png: libpng failure");
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, bit_depth, rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const size_t stride = size_t(w) * channels * bytes_per_sample;
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(samples.data() + size_t(y) * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    fclose(f);
}

// Decoded 8-bit gray samples, for checking what write_mask put on disk.
inline std::vector<std::uint8_t> read_gray_png_bytes(const fs::path& path) {
    FILE* f = fopen(path.c_str(), "rb");
    if (!f) throw vtk::Error("read_gray_png_bytes: cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fclose(f);
        throw vtk::Error("read_gray_png_bytes: libpng failure");
    }
    png_init_io(png, f);
    png_read_info(png, info);
    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    std::vector<std::uint8_t> out(size_t(w) * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = out.data() + size_t(y) * w;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    fclose(f);
    return out;
}

struct CommandResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs a binary with stdout/stderr captured into scratch files.
inline CommandResult run_cli(const std::vector<std::string>& argv) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / "vtk-test-cli-logs";
    fs::create_directories(dir);
    const std::string stem = std::to_string(getpid()) + "-" + std::to_string(counter++);
    const fs::path out = dir / (stem + ".out");
    const fs::path err = dir / (stem + ".err");
    CommandResult r;
    r.code = vtk::run_command(argv, out, err);
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic RVOS-style dataset: a few videos, two expressions per video, a
// moving rectangle as the referred object. Frame images and ground-truth
// masks share one resolution; truth for every split lives under truth/ so a
// fixture predictor can simulate an oracle-guided model on unlabeled splits.

struct MiniDataset {
    fs::path root;
    fs::path train_manifest;
    fs::path val_manifest;
    fs::path test_manifest;
    fs::path truth_root;  // truth/<video>/<expr>/<frame>.png for all splits
    int width = 0;
    int height = 0;
    int frames_per_seq = 0;
    std::vector<std::string> train_videos, val_videos, test_videos;
    std::vector<std::string> expressions;  // per video
    std::vector<std::string> frame_ids;
};

// Rectangle moving right by 2px per frame; geometry offset per video and
// expression index so every sequence differs.
inline vtk::BinaryMask dataset_gt(int video_index, int expr_index, int frame_index, int w,
                                  int h) {
    vtk::BinaryMask m(w, h);
    const int rw = w / 3, rh = h / 3;
    const int x0 = 2 + 4 * video_index + 3 * expr_index + 2 * frame_index;
    const int y0 = 2 + 2 * video_index + 3 * expr_index;
    for (int y = y0; y < y0 + rh && y < h; ++y)
        for (int x = x0; x < x0 + rw && x < w; ++x) m.at(x, y) = 1;
    return m;
}

inline MiniDataset make_dataset(const fs::path& root, int train_videos, int val_videos,
                                int test_videos, int exprs_per_video, int frames_per_seq,
                                int width, int height) {
    MiniDataset d;
    d.root = root;
    d.truth_root = root / "truth";
    d.width = width;
    d.height = height;
    d.frames_per_seq = frames_per_seq;
    for (int e = 0; e < exprs_per_video; ++e) d.expressions.push_back("e" + std::to_string(e));
    for (int t = 0; t < frames_per_seq; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%05d", t);
        d.frame_ids.push_back(buf);
    }

    const int total = train_videos + val_videos + test_videos;
    std::vector<std::string> videos;
    for (int v = 0; v < total; ++v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "v%02d", v);
        videos.push_back(buf);
    }
    d.train_videos.assign(videos.begin(), videos.begin() + train_videos);
    d.val_videos.assign(videos.begin() + train_videos, videos.begin() + train_videos + val_videos);
    d.test_videos.assign(videos.begin() + train_videos + val_videos, videos.end());

    // Frame images (shared per video) and per-expression ground truth.
    for (int v = 0; v < total; ++v) {
        const fs::path frame_dir = root / "frames" / videos[v];
        fs::create_directories(frame_dir);
        for (int t = 0; t < frames_per_seq; ++t) {
            vtk::BinaryMask frame(width, height);  // content irrelevant, dims are not
            vtk::write_mask(frame, frame_dir / (d.frame_ids[t] + ".png"));
        }
        for (int e = 0; e < exprs_per_video; ++e) {
            const fs::path label_dir = d.truth_root / videos[v] / d.expressions[e];
            fs::create_directories(label_dir);
            for (int t = 0; t < frames_per_seq; ++t)
                vtk::write_mask(dataset_gt(v, e, t, width, height),
                                label_dir / (d.frame_ids[t] + ".png"));
        }
    }

    auto build_split = [&](const std::vector<std::string>& split_videos, const std::string& name,
                           bool labeled) {
        vtk::Manifest m;
        m.split_name = name;
        for (const auto& video : split_videos) {
            for (const auto& expr : d.expressions) {
                vtk::SequenceEntry entry;
                entry.video_id = video;
                entry.expression_id = expr;
                entry.expression_text = "the rectangle referred to as " + expr + " in " + video;
                entry.frame_ids = d.frame_ids;
                entry.frame_dir = root / "frames" / video;
                if (labeled) {
                    entry.label_dir = d.truth_root / video / expr;
                    entry.label_source = vtk::LabelSource::ground_truth();
                } else {
                    entry.label_source = vtk::LabelSource::none();
                }
                m.entries.push_back(std::move(entry));
            }
        }
        return m;
    };

    d.train_manifest = root / "train.json";
    d.val_manifest = root / "val.json";
    d.test_manifest = root / "test.json";
    vtk::save_manifest(build_split(d.train_videos, "train", true), d.train_manifest);
    vtk::save_manifest(build_split(d.val_videos, "val", false), d.val_manifest);
    vtk::save_manifest(build_split(d.test_videos, "test", false), d.test_manifest);
    return d;
}

}  // namespace testutil
