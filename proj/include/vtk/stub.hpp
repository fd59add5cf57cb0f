#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "vtk/manifest.hpp"

namespace vtk {

/// State written by the stub trainer and read by the stub predictor. The
/// only thing the fixture "learns" is how many labeled frames it saw.
struct StubModel {
    long labeled_frames = 0;
    long schedule_rows = 0;
};

StubModel load_stub_model(const std::filesystem::path& path);
void write_stub_model(const StubModel& model, const std::filesystem::path& path);

/// Counts labeled frames in the manifest, validates the schedule CSV, and
/// writes the model file. Returns the written model. This exercises the
/// exact file surfaces a real trainer would consume; it learns nothing.
StubModel stub_train(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& schedule_path,
                     const std::filesystem::path& model_path);

struct StubPredictOptions {
    std::filesystem::path manifest_path;
    std::filesystem::path out_root;
    /// Ground-truth masks at <truth_root>/<video>/<expression>/<frame>.png.
    /// When absent, each entry's own label_dir is used instead.
    std::optional<std::filesystem::path> truth_root;
    /// Stub model from a previous stub_train; absent means an untrained
    /// model (zero labeled frames).
    std::optional<std::filesystem::path> model_path;
    std::uint64_t seed = 0;
    /// Base perturbation magnitude in [0, 1].
    double noise = 0.5;
    /// Effective magnitude is noise / (1 + labeled_frames / decay_frames),
    /// so predictions sharpen as the trainer sees more labels.
    double decay_frames = 32.0;
    /// Augmented geometry; absent scale means identity geometry.
    std::optional<int> scale;
    std::optional<int> long_cap;
    bool flip = false;
};

/// Emits one PFM per manifest frame at <out_root>/<video>/<expression>/
/// <frame>.pfm: the ground-truth mask blended with a smooth deterministic
/// noise field, then resized/flipped per the requested augmentation.
/// Identical options produce byte-identical outputs. Returns the number of
/// files written.
long stub_predict(const StubPredictOptions& opts);

}  // namespace vtk
