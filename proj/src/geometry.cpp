#include "vtk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vtk {

Dims target_dims(Dims orig, int short_side, std::optional<int> long_cap) {
    if (orig.width < 1 || orig.height < 1)
        throw Error("target_dims: original dimensions must be >= 1");
    if (short_side < 1) throw Error("target_dims: short_side must be >= 1");
    if (long_cap && *long_cap < short_side)
        throw Error("target_dims: long_cap " + std::to_string(*long_cap) +
                    " smaller than short_side " + std::to_string(short_side));

    const double shorter = std::min(orig.width, orig.height);
    const double longer = std::max(orig.width, orig.height);
    double s = short_side / shorter;
    if (long_cap && std::round(s * longer) > *long_cap) s = *long_cap / longer;
    const int w = std::max(1, int(std::round(s * orig.width)));
    const int h = std::max(1, int(std::round(s * orig.height)));
    return {w, h};
}

namespace {

template <typename Raster>
Raster hflip(const Raster& src) {
    Raster out(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) out.at(src.width - 1 - x, y) = src.at(x, y);
    return out;
}

}  // namespace

BinaryMask hflip_mask(const BinaryMask& m) { return hflip(m); }
ProbMap hflip_prob(const ProbMap& p) { return hflip(p); }

BinaryMask resize_nearest(const BinaryMask& m, Dims to) {
    if (to.width < 1 || to.height < 1) throw Error("resize_nearest: target dims must be >= 1");
    if (to == dims_of(m)) return m;

    BinaryMask out(to.width, to.height);
    const double sx = double(m.width) / to.width;
    const double sy = double(m.height) / to.height;
    for (int y = 0; y < to.height; ++y) {
        const int src_y = std::clamp(int(std::floor((y + 0.5) * sy)), 0, m.height - 1);
        for (int x = 0; x < to.width; ++x) {
            const int src_x = std::clamp(int(std::floor((x + 0.5) * sx)), 0, m.width - 1);
            out.at(x, y) = m.at(src_x, src_y);
        }
    }
    return out;
}

ProbMap resize_bilinear(const ProbMap& p, Dims to) {
    if (to.width < 1 || to.height < 1) throw Error("resize_bilinear: target dims must be >= 1");
    if (to == dims_of(p)) return p;

    ProbMap out(to.width, to.height);
    const double sx = double(p.width) / to.width;
    const double sy = double(p.height) / to.height;
    for (int y = 0; y < to.height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(p.height - 1));
        const int y0 = int(std::floor(fy));
        const int y1 = std::min(y0 + 1, p.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < to.width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(p.width - 1));
            const int x0 = int(std::floor(fx));
            const int x1 = std::min(x0 + 1, p.width - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * p.at(x0, y0) + wx * p.at(x1, y0);
            const double bot = (1.0 - wx) * p.at(x0, y1) + wx * p.at(x1, y1);
            const double v = (1.0 - wy) * top + wy * bot;
            out.at(x, y) = float(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace vtk
