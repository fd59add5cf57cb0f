#include "vtk/stub.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vtk/geometry.hpp"
#include "vtk/hash.hpp"
#include "vtk/raster.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vtk {

namespace {

// Smooth per-frame noise field in [0,1): an 8px cell grid of hash values,
// bilinearly upsampled to frame resolution. Low-frequency on purpose so it
// survives the TTA resize round trip instead of averaging away.
ProbMap noise_field(std::uint64_t seed, const std::string& frame_key, int w, int h) {
    constexpr int kCell = 8;
    const int cw = std::max(1, (w + kCell - 1) / kCell);
    const int ch = std::max(1, (h + kCell - 1) / kCell);
    const std::uint64_t key_hash = fnv1a64(frame_key);

    ProbMap cells(cw, ch);
    for (int cy = 0; cy < ch; ++cy)
        for (int cx = 0; cx < cw; ++cx)
            cells.at(cx, cy) =
                float(hash01(seed, key_hash, (std::uint64_t(cy) << 32) | std::uint64_t(cx)));
    return resize_bilinear(cells, {w, h});
}

}  // namespace

StubModel load_stub_model(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_stub_model: cannot open " + path.string());
    json j;
    try {
        in >> j;
        StubModel m;
        m.labeled_frames = j.at("labeled_frames").get<long>();
        m.schedule_rows = j.value("schedule_rows", 0L);
        return m;
    } catch (const json::exception& e) {
        throw Error("load_stub_model: " + path.string() + ": " + e.what());
    }
}

void write_stub_model(const StubModel& model, const fs::path& path) {
    json j;
    j["labeled_frames"] = model.labeled_frames;
    j["schedule_rows"] = model.schedule_rows;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_stub_model: cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("write_stub_model: I/O failure writing " + path.string());
}

StubModel stub_train(const fs::path& manifest_path, const fs::path& schedule_path,
                     const fs::path& model_path) {
    const Manifest m = load_manifest(manifest_path);
    const ProvenanceStats stats = manifest_stats(m);

    std::ifstream sched(schedule_path);
    if (!sched) throw Error("stub_train: cannot open schedule " + schedule_path.string());
    std::string line;
    if (!std::getline(sched, line) || line != "iter,lr")
        throw Error("stub_train: bad schedule header in " + schedule_path.string());
    long rows = 0;
    while (std::getline(sched, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        long iter = 0;
        double lr = 0;
        char comma = 0;
        if (!(ls >> iter >> comma >> lr) || comma != ',' || !(lr > 0))
            throw Error("stub_train: bad schedule row '" + line + "' in " +
                        schedule_path.string());
        ++rows;
    }
    if (rows == 0) throw Error("stub_train: empty schedule " + schedule_path.string());

    StubModel model;
    model.labeled_frames = stats.ground_truth.frames + stats.pseudo_total().frames;
    model.schedule_rows = rows;
    write_stub_model(model, model_path);
    return model;
}

long stub_predict(const StubPredictOptions& opts) {
    if (!(opts.noise >= 0.0 && opts.noise <= 1.0))
        throw Error("stub_predict: noise must be in [0,1]");
    if (!(opts.decay_frames > 0)) throw Error("stub_predict: decay_frames must be > 0");

    long labeled = 0;
    if (opts.model_path) labeled = load_stub_model(*opts.model_path).labeled_frames;
    const double eta = opts.noise / (1.0 + double(labeled) / opts.decay_frames);

    const Manifest m = load_manifest(opts.manifest_path);
    long written = 0;
    for (const auto& entry : m.entries) {
        fs::path truth_dir;
        if (opts.truth_root) {
            truth_dir = *opts.truth_root / entry.video_id / entry.expression_id;
        } else if (entry.label_dir) {
            truth_dir = *entry.label_dir;
        } else {
            throw Error("stub_predict: entry " + entry.video_id + "/" + entry.expression_id +
                        " has no labels and no truth root was given");
        }

        const fs::path out_dir = opts.out_root / entry.video_id / entry.expression_id;
        fs::create_directories(out_dir);
        for (const auto& frame : entry.frame_ids) {
            const BinaryMask gt = read_mask(truth_dir / (frame + ".png"));
            const std::string key =
                entry.video_id + "/" + entry.expression_id + "/" + frame;
            const ProbMap u = noise_field(opts.seed, key, gt.width, gt.height);

            ProbMap prob(gt.width, gt.height);
            for (size_t i = 0; i < prob.data.size(); ++i) {
                const double n = eta * u.data[i];
                prob.data[i] = float(gt.data[i] ? 1.0 - n : n);
            }

            if (opts.scale) {
                const Dims to = target_dims({gt.width, gt.height}, *opts.scale, opts.long_cap);
                prob = resize_bilinear(prob, to);
            }
            if (opts.flip) prob = hflip_prob(prob);

            write_pfm(prob, out_dir / (frame + ".pfm"));
            ++written;
        }
    }
    return written;
}

}  // namespace vtk
