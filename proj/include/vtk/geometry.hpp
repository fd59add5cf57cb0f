#pragma once

#include <optional>

#include "vtk/raster.hpp"

namespace vtk {

struct Dims {
    int width = 0;
    int height = 0;
    bool operator==(const Dims&) const = default;
};

inline Dims dims_of(const BinaryMask& m) { return {m.width, m.height}; }
inline Dims dims_of(const ProbMap& p) { return {p.width, p.height}; }

/// Short-side resize arithmetic. Scales so the shorter side hits
/// `short_side`; if the scaled longer side would exceed `long_cap`, rescales
/// so the longer side hits the cap instead (aspect preserved, no cropping).
/// Rounding is half-away-from-zero; each result axis is clamped to >= 1.
Dims target_dims(Dims orig, int short_side, std::optional<int> long_cap = std::nullopt);

/// Horizontal flip: pixel (x, y) -> (width-1-x, y). Involution.
BinaryMask hflip_mask(const BinaryMask& m);
ProbMap hflip_prob(const ProbMap& p);

/// Nearest-neighbor resize with half-pixel centers:
/// source index = floor((i + 0.5) * src/dst), clamped. Identity dims
/// returns an exact copy.
BinaryMask resize_nearest(const BinaryMask& m, Dims to);

/// Bilinear resize with half-pixel centers:
/// source coord = (i + 0.5) * src/dst - 0.5, clamped to [0, src-1].
/// Output stays within [0, 1]; identity dims returns a bit-exact copy.
ProbMap resize_bilinear(const ProbMap& p, Dims to);

}  // namespace vtk
