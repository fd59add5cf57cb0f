#include "vtk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace vtk {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* op) {
    if (a.width != b.width || a.height != b.height)
        throw Error(std::string(op) + ": dimension mismatch, " + std::to_string(a.width) + "x" +
                    std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                    std::to_string(b.height));
}

// Foreground pixels with at least one 4-neighbor that is background or out
// of bounds.
std::vector<std::uint8_t> boundary_map(const BinaryMask& m) {
    std::vector<std::uint8_t> b(m.data.size(), 0);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool edge = x == 0 || x == m.width - 1 || y == 0 || y == m.height - 1 ||
                              !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) ||
                              !m.at(x, y + 1);
            if (edge) b[size_t(y) * m.width + x] = 1;
        }
    }
    return b;
}

// Disk dilation of a boundary bitmap: every pixel within Euclidean distance
// r of a set pixel becomes set.
std::vector<std::uint8_t> dilate_disk(const std::vector<std::uint8_t>& src, int w, int h, int r) {
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r * r) offsets.emplace_back(dx, dy);

    std::vector<std::uint8_t> out(src.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!src[size_t(y) * w + x]) continue;
            for (auto [dx, dy] : offsets) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < w && ny >= 0 && ny < h) out[size_t(ny) * w + nx] = 1;
            }
        }
    }
    return out;
}

}  // namespace

double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_dims(pred, gt, "jaccard");
    std::size_t inter = 0, uni = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        inter += pred.data[i] & gt.data[i];
        uni += pred.data[i] | gt.data[i];
    }
    if (uni == 0) return 1.0;
    return double(inter) / double(uni);
}

double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double bound_frac) {
    require_same_dims(pred, gt, "boundary_f");
    if (!(bound_frac > 0.0 && bound_frac < 1.0))
        throw Error("boundary_f: bound_frac must be in (0,1), got " + std::to_string(bound_frac));

    const int w = pred.width, h = pred.height;
    const auto pred_b = boundary_map(pred);
    const auto gt_b = boundary_map(gt);
    const std::size_t n_pred = std::count(pred_b.begin(), pred_b.end(), 1);
    const std::size_t n_gt = std::count(gt_b.begin(), gt_b.end(), 1);
    if (n_pred == 0 && n_gt == 0) return 1.0;
    if (n_pred == 0 || n_gt == 0) return 0.0;

    const int r = int(std::ceil(bound_frac * std::sqrt(double(w) * w + double(h) * h)));
    const auto gt_dilated = dilate_disk(gt_b, w, h, r);
    const auto pred_dilated = dilate_disk(pred_b, w, h, r);

    std::size_t matched_pred = 0, matched_gt = 0;
    for (size_t i = 0; i < pred_b.size(); ++i) {
        matched_pred += pred_b[i] & gt_dilated[i];
        matched_gt += gt_b[i] & pred_dilated[i];
    }
    const double precision = double(matched_pred) / double(n_pred);
    const double recall = double(matched_gt) / double(n_gt);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

FrameScore eval_sequence(const std::vector<std::pair<BinaryMask, BinaryMask>>& frames,
                         double bound_frac) {
    if (frames.empty()) throw Error("eval_sequence: empty frame list");
    double j_sum = 0.0, f_sum = 0.0;
    for (const auto& [pred, gt] : frames) {
        j_sum += jaccard(pred, gt);
        f_sum += boundary_f(pred, gt, bound_frac);
    }
    return {j_sum / frames.size(), f_sum / frames.size()};
}

MetricReport aggregate(const std::map<SequenceKey, FrameScore>& per_sequence) {
    if (per_sequence.empty()) throw Error("aggregate: no sequences");
    MetricReport report;
    report.per_sequence = per_sequence;
    for (const auto& [key, score] : per_sequence) {
        report.j_mean += score.j;
        report.f_mean += score.f;
    }
    report.j_mean /= double(per_sequence.size());
    report.f_mean /= double(per_sequence.size());
    report.jf = (report.j_mean + report.f_mean) / 2.0;
    return report;
}

std::vector<RankedRow> rank_table(
    const std::vector<std::tuple<std::string, double, double>>& rows) {
    std::vector<RankedRow> out;
    out.reserve(rows.size());
    for (const auto& [name, j, f] : rows) out.push_back({name, j, f, (j + f) / 2.0});
    std::stable_sort(out.begin(), out.end(), [](const RankedRow& a, const RankedRow& b) {
        if (a.jf != b.jf) return a.jf > b.jf;
        if (a.j != b.j) return a.j > b.j;
        return a.name < b.name;
    });
    return out;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["J_mean"] = report.j_mean;
    j["F_mean"] = report.f_mean;
    j["JF"] = report.jf;
    j["per_sequence"] = nlohmann::json::object();
    for (const auto& [key, score] : report.per_sequence) {
        j["per_sequence"][key.first + "/" + key.second] = {{"J", score.j}, {"F", score.f}};
    }
    return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricReport& report) {
    std::ostringstream out;
    out << "video,expression,J,F\n";
    out.precision(17);
    for (const auto& [key, score] : report.per_sequence)
        out << key.first << "," << key.second << "," << score.j << "," << score.f << "\n";
    return out.str();
}

}  // namespace vtk
