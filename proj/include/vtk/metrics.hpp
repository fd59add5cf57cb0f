#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vtk/raster.hpp"

namespace vtk {

/// Region similarity J and boundary accuracy F for one frame (or the mean
/// over a sequence). Both in [0, 1].
struct FrameScore {
    double j = 0.0;
    double f = 0.0;
};

/// Key identifying one sequence: a (video, expression) pair.
using SequenceKey = std::pair<std::string, std::string>;

struct MetricReport {
    std::map<SequenceKey, FrameScore> per_sequence;
    double j_mean = 0.0;
    double f_mean = 0.0;
    double jf = 0.0;  // (j_mean + f_mean) / 2
};

/// |pred AND gt| / |pred OR gt|. Both empty -> 1.0. Dims must match.
double jaccard(const BinaryMask& pred, const BinaryMask& gt);

/// DAVIS-style contour accuracy. Boundary pixels are foreground pixels with
/// a 4-neighbor that is background or out of bounds. A boundary pixel is
/// matched when the other mask has a boundary pixel within Euclidean
/// distance r = ceil(bound_frac * sqrt(w^2 + h^2)). F = 2PR/(P+R);
/// 1 if both boundaries are empty, 0 if exactly one is.
double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double bound_frac = 0.008);

/// Arithmetic mean of per-frame J and F over the (pred, gt) pairs.
FrameScore eval_sequence(const std::vector<std::pair<BinaryMask, BinaryMask>>& frames,
                         double bound_frac = 0.008);

/// Unweighted mean across sequences; jf = (j_mean + f_mean) / 2.
MetricReport aggregate(const std::map<SequenceKey, FrameScore>& per_sequence);

struct RankedRow {
    std::string name;
    double j = 0.0;
    double f = 0.0;
    double jf = 0.0;
};

/// Computes jf = (j+f)/2 per row and sorts descending by jf; ties broken by
/// descending j, then ascending name.
std::vector<RankedRow> rank_table(const std::vector<std::tuple<std::string, double, double>>& rows);

/// Report JSON per the documented schema: per_sequence keyed "video/expr"
/// with {J, F}, plus J_mean, F_mean, JF. All values are fractions in [0,1].
std::string report_to_json(const MetricReport& report);

/// Optional CSV form: header `video,expression,J,F`, one row per sequence.
std::string report_to_csv(const MetricReport& report);

}  // namespace vtk
