#include "vtk/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vtk {

namespace {

constexpr const char* kSchema = "vtk-manifest/1";

std::string key_str(const SequenceEntry& e) { return e.video_id + "/" + e.expression_id; }

LabelSource parse_label_source(const json& j, const std::string& ctx) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "ground_truth") return LabelSource::ground_truth();
        if (s == "none") return LabelSource::none();
        throw Error(ctx + ": unknown label_source '" + s + "'");
    }
    if (j.is_object() && j.contains("pseudo") && j["pseudo"].is_number_integer()) {
        const int round = j["pseudo"].get<int>();
        if (round < 1) throw Error(ctx + ": pseudo round must be >= 1");
        return LabelSource::pseudo(round);
    }
    throw Error(ctx + ": label_source must be \"ground_truth\", \"none\", or {\"pseudo\": k}");
}

json label_source_to_json(const LabelSource& s) {
    switch (s.kind) {
        case LabelSource::Kind::ground_truth: return "ground_truth";
        case LabelSource::Kind::pseudo: return json{{"pseudo", s.round}};
        case LabelSource::Kind::none: return "none";
    }
    throw Error("label_source_to_json: invalid kind");
}

// Relative when expressible from `base`, absolute otherwise.
std::string portable_path(const fs::path& target, const fs::path& base) {
    const fs::path rel = target.lexically_normal().lexically_relative(base.lexically_normal());
    if (rel.empty()) return ".";
    return rel.generic_string();
}

void check_entry_files(const SequenceEntry& e) {
    for (const auto& frame : e.frame_ids) {
        const fs::path fpath = e.frame_dir / (frame + ".png");
        if (!fs::exists(fpath))
            throw Error("manifest: missing frame file " + fpath.string() + " for sequence " +
                        key_str(e));
        if (e.label_dir) {
            const fs::path lpath = *e.label_dir / (frame + ".png");
            if (!fs::exists(lpath))
                throw Error("manifest: missing label file " + lpath.string() + " for sequence " +
                            key_str(e));
        }
    }
}

}  // namespace

void validate(const Manifest& m) {
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& e : m.entries) {
        const std::string ctx = "manifest entry " + key_str(e);
        if (e.video_id.empty() || e.expression_id.empty())
            throw Error(ctx + ": video and expression_id must be nonempty");
        if (e.frame_ids.empty()) throw Error(ctx + ": frames must be nonempty");
        if (!std::is_sorted(e.frame_ids.begin(), e.frame_ids.end()))
            throw Error(ctx + ": frames must be sorted ascending");
        if (std::adjacent_find(e.frame_ids.begin(), e.frame_ids.end()) != e.frame_ids.end())
            throw Error(ctx + ": duplicate frame ids");
        const bool unlabeled = e.label_source.kind == LabelSource::Kind::none;
        if (unlabeled != !e.label_dir.has_value())
            throw Error(ctx + ": label_dir must be present exactly when label_source is not none");
        if (e.label_source.kind == LabelSource::Kind::pseudo && e.label_source.round < 1)
            throw Error(ctx + ": pseudo round must be >= 1");
        if (!keys.insert({e.video_id, e.expression_id}).second)
            throw Error("manifest: duplicate sequence key " + key_str(e));
    }
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_manifest: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("load_manifest: " + path.string() + ": " + e.what());
    }

    const std::string ctx = "load_manifest: " + path.string();
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
        throw Error(ctx + ": missing schema field");
    if (j["schema"] != kSchema)
        throw Error(ctx + ": unsupported schema '" + j["schema"].get<std::string>() +
                    "', expected '" + kSchema + "'");
    if (!j.contains("split") || !j["split"].is_string())
        throw Error(ctx + ": missing split field");
    if (!j.contains("entries") || !j["entries"].is_array())
        throw Error(ctx + ": missing entries array");

    const fs::path base = fs::absolute(path).parent_path().lexically_normal();
    auto resolve = [&base](const std::string& p) {
        fs::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).lexically_normal();
    };

    Manifest m;
    m.split_name = j["split"].get<std::string>();
    for (const auto& je : j["entries"]) {
        SequenceEntry e;
        try {
            e.video_id = je.at("video").get<std::string>();
            e.expression_id = je.at("expression_id").get<std::string>();
            e.expression_text = je.at("expression").get<std::string>();
            e.frame_ids = je.at("frames").get<std::vector<std::string>>();
            e.frame_dir = resolve(je.at("frame_dir").get<std::string>());
            const auto& label_dir = je.at("label_dir");
            if (!label_dir.is_null()) e.label_dir = resolve(label_dir.get<std::string>());
            e.label_source = parse_label_source(je.at("label_source"), ctx);
        } catch (const json::exception& ex) {
            throw Error(ctx + ": malformed entry: " + ex.what());
        }
        m.entries.push_back(std::move(e));
    }
    validate(m);
    for (const auto& e : m.entries) check_entry_files(e);
    return m;
}

void save_manifest(const Manifest& m, const fs::path& path) {
    validate(m);
    const fs::path base = fs::absolute(path).parent_path().lexically_normal();

    json j;
    j["schema"] = kSchema;
    j["split"] = m.split_name;
    j["entries"] = json::array();
    for (const auto& e : m.entries) {
        json je;
        je["video"] = e.video_id;
        je["expression_id"] = e.expression_id;
        je["expression"] = e.expression_text;
        je["frames"] = e.frame_ids;
        je["frame_dir"] = portable_path(e.frame_dir, base);
        je["label_dir"] = e.label_dir ? json(portable_path(*e.label_dir, base)) : json(nullptr);
        je["label_source"] = label_source_to_json(e.label_source);
        j["entries"].push_back(std::move(je));
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_manifest: cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("save_manifest: I/O failure writing " + path.string());
}

Manifest inject_pseudo(const Manifest& m, const fs::path& pred_root, int round,
                       std::vector<std::pair<std::string, std::string>>* skipped_ground_truth) {
    if (round < 1) throw Error("inject_pseudo: round must be >= 1");
    const fs::path root = fs::absolute(pred_root).lexically_normal();

    Manifest out = m;
    for (auto& e : out.entries) {
        if (e.label_source.kind == LabelSource::Kind::ground_truth) {
            if (skipped_ground_truth)
                skipped_ground_truth->emplace_back(e.video_id, e.expression_id);
            continue;
        }
        const fs::path label_dir = root / e.video_id / e.expression_id;
        for (const auto& frame : e.frame_ids) {
            const fs::path pred = label_dir / (frame + ".png");
            if (!fs::exists(pred))
                throw Error("inject_pseudo: missing prediction for " + e.video_id + "/" +
                            e.expression_id + "/" + frame + " (expected " + pred.string() + ")");
        }
        e.label_dir = label_dir;
        e.label_source = LabelSource::pseudo(round);
    }
    return out;
}

Manifest merge_manifests(const std::vector<Manifest>& manifests, const std::string& name) {
    if (manifests.empty()) throw Error("merge_manifests: no inputs");
    Manifest out;
    out.split_name = name;
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& m : manifests) {
        for (const auto& e : m.entries) {
            if (!keys.insert({e.video_id, e.expression_id}).second)
                throw Error("merge_manifests: sequence key collision " + key_str(e));
            out.entries.push_back(e);
        }
    }
    return out;
}

ProvenanceStats::Bucket ProvenanceStats::pseudo_total() const {
    Bucket total;
    for (const auto& [round, b] : pseudo) {
        total.entries += b.entries;
        total.frames += b.frames;
    }
    return total;
}

ProvenanceStats manifest_stats(const Manifest& m) {
    ProvenanceStats stats;
    for (const auto& e : m.entries) {
        ProvenanceStats::Bucket* bucket = nullptr;
        switch (e.label_source.kind) {
            case LabelSource::Kind::ground_truth: bucket = &stats.ground_truth; break;
            case LabelSource::Kind::none: bucket = &stats.none; break;
            case LabelSource::Kind::pseudo: bucket = &stats.pseudo[e.label_source.round]; break;
        }
        bucket->entries += 1;
        bucket->frames += long(e.frame_ids.size());
    }
    return stats;
}

}  // namespace vtk
