#include "vtk/tta.hpp"

#include <algorithm>
#include <set>

namespace fs = std::filesystem;

namespace vtk {

std::vector<AugmentationSpec> enumerate_augs(const std::vector<int>& short_sides, bool use_flip,
                                             std::optional<int> long_cap) {
    if (short_sides.empty()) throw Error("enumerate_augs: no scales given");
    std::set<int> seen;
    for (int s : short_sides) {
        if (s < 1) throw Error("enumerate_augs: scale " + std::to_string(s) + " must be >= 1");
        if (!seen.insert(s).second)
            throw Error("enumerate_augs: duplicate scale " + std::to_string(s));
    }

    std::vector<AugmentationSpec> specs;
    for (int s : seen) {
        specs.push_back({s, long_cap, false});
        if (use_flip) specs.push_back({s, long_cap, true});
    }
    return specs;
}

ProbMap invert_output(const AugmentedOutput& out, Dims orig) {
    const Dims expected = target_dims(orig, out.spec.short_side, out.spec.long_cap);
    if (dims_of(out.prob) != expected)
        throw Error("invert_output: " + out.spec.tag() + " output is " +
                    std::to_string(out.prob.width) + "x" + std::to_string(out.prob.height) +
                    ", expected " + std::to_string(expected.width) + "x" +
                    std::to_string(expected.height) + " for original " +
                    std::to_string(orig.width) + "x" + std::to_string(orig.height));
    if (out.spec.hflip) return resize_bilinear(hflip_prob(out.prob), orig);
    return resize_bilinear(out.prob, orig);
}

BinaryMask fuse_outputs(const std::vector<AugmentedOutput>& outputs, Dims orig, double threshold) {
    if (outputs.empty()) throw Error("fuse_outputs: no outputs to fuse");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw Error("fuse_outputs: threshold must be in (0,1), got " + std::to_string(threshold));
    std::set<std::string> tags;
    for (const auto& out : outputs)
        if (!tags.insert(out.spec.tag()).second)
            throw Error("fuse_outputs: duplicate augmentation " + out.spec.tag());

    std::vector<double> acc(size_t(orig.width) * size_t(orig.height), 0.0);
    for (const auto& out : outputs) {
        const ProbMap inv = invert_output(out, orig);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += inv.data[i];
    }

    BinaryMask mask(orig.width, orig.height);
    const double n = double(outputs.size());
    for (size_t i = 0; i < acc.size(); ++i) mask.data[i] = (acc[i] / n >= threshold) ? 1 : 0;
    return mask;
}

ProbMap mask_to_prob(const BinaryMask& m) {
    ProbMap p(m.width, m.height);
    for (size_t i = 0; i < m.data.size(); ++i) p.data[i] = m.data[i] ? 1.f : 0.f;
    return p;
}

long fuse_prediction_tree(const Manifest& manifest, const fs::path& pred_root,
                          const std::vector<AugmentationSpec>& specs, const fs::path& out_root,
                          double threshold) {
    if (specs.empty()) throw Error("fuse_prediction_tree: no augmentations");

    long written = 0;
    for (const auto& entry : manifest.entries) {
        const fs::path out_dir = out_root / entry.video_id / entry.expression_id;
        fs::create_directories(out_dir);
        for (const auto& frame : entry.frame_ids) {
            const auto [w, h] = read_png_dims(entry.frame_dir / (frame + ".png"));
            const Dims orig{w, h};

            std::vector<AugmentedOutput> outputs;
            outputs.reserve(specs.size());
            for (const auto& spec : specs) {
                const fs::path base =
                    pred_root / spec.tag() / entry.video_id / entry.expression_id / frame;
                fs::path pfm = base;
                pfm += ".pfm";
                if (fs::exists(pfm)) {
                    outputs.push_back({spec, read_pfm(pfm)});
                    continue;
                }
                fs::path png = base;
                png += ".png";
                if (fs::exists(png)) {
                    outputs.push_back({spec, mask_to_prob(read_mask(png))});
                    continue;
                }
                throw Error("fuse_prediction_tree: missing prediction " + pfm.string() +
                            " (no .pfm or .png)");
            }

            write_mask(fuse_outputs(outputs, orig, threshold), out_dir / (frame + ".png"));
            ++written;
        }
    }
    return written;
}

}  // namespace vtk
