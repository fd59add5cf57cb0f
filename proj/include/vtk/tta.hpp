#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vtk/geometry.hpp"
#include "vtk/manifest.hpp"

namespace vtk {

/// One test-time-augmentation variant: resize to a target short side
/// (optionally capped on the long side) plus an optional horizontal flip.
struct AugmentationSpec {
    int short_side = 0;
    std::optional<int> long_cap;
    bool hflip = false;

    /// Unique within a set: "s<short_side>_f<0|1>".
    std::string tag() const {
        return "s" + std::to_string(short_side) + "_f" + (hflip ? "1" : "0");
    }
    bool operator==(const AugmentationSpec&) const = default;
};

/// A model output in the augmented geometry, alongside the spec that
/// produced it.
struct AugmentedOutput {
    AugmentationSpec spec;
    ProbMap prob;
};

/// Cartesian product of scales and (optionally) the flip bit, ordered by
/// (short_side ascending, unflipped first). Sizes must be positive and
/// duplicate-free.
std::vector<AugmentationSpec> enumerate_augs(const std::vector<int>& short_sides, bool use_flip,
                                             std::optional<int> long_cap = std::nullopt);

/// Maps an augmented output back to the reference geometry: un-flip first
/// (if the spec flipped), then bilinear-resize to orig. The output dims
/// must equal target_dims(orig, spec) or this throws.
ProbMap invert_output(const AugmentedOutput& out, Dims orig);

/// Pixel-wise arithmetic mean of all inverted maps, thresholded at
/// `threshold` with ties to foreground. Specs must be distinct and the
/// list nonempty; threshold must lie in (0, 1).
BinaryMask fuse_outputs(const std::vector<AugmentedOutput>& outputs, Dims orig,
                        double threshold = 0.5);

/// Lifts a hard mask to a {0.0, 1.0} probability map so predictors that
/// emit only masks can participate in fusion.
ProbMap mask_to_prob(const BinaryMask& m);

/// Fuses a full prediction tree laid out as
/// <pred_root>/<tag>/<video>/<expression>/<frame>.pfm (with a .png hard-mask
/// fallback) into <out_root>/<video>/<expression>/<frame>.png for every
/// frame in the manifest. Original geometry is taken from each entry's
/// frame files. Returns the number of masks written.
long fuse_prediction_tree(const Manifest& manifest, const std::filesystem::path& pred_root,
                          const std::vector<AugmentationSpec>& specs,
                          const std::filesystem::path& out_root, double threshold = 0.5);

}  // namespace vtk
