#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtk/error.hpp"

namespace vtk {

/// Label provenance of one sequence: real annotation, model prediction from
/// self-training round k, or no labels at all.
struct LabelSource {
    enum class Kind { ground_truth, pseudo, none };
    Kind kind = Kind::none;
    int round = 0;  // >= 1 when kind == pseudo

    static LabelSource ground_truth() { return {Kind::ground_truth, 0}; }
    static LabelSource pseudo(int round) { return {Kind::pseudo, round}; }
    static LabelSource none() { return {Kind::none, 0}; }
    bool operator==(const LabelSource&) const = default;
};

/// One (video, expression) sequence. Directory paths are held absolute in
/// memory; serialization converts them to paths relative to the manifest
/// file. Frame files live at <frame_dir>/<frame_id>.png and labels at
/// <label_dir>/<frame_id>.png.
struct SequenceEntry {
    std::string video_id;
    std::string expression_id;
    std::string expression_text;
    std::vector<std::string> frame_ids;  // nonempty, unique, sorted ascending
    std::filesystem::path frame_dir;
    std::optional<std::filesystem::path> label_dir;  // absent iff label_source none
    LabelSource label_source;
};

struct Manifest {
    std::string split_name;
    std::vector<SequenceEntry> entries;  // (video_id, expression_id) unique
};

/// Parses and validates a manifest file (schema "vtk-manifest/1"). Checks
/// structural invariants and that every referenced frame file exists, with
/// one label file per frame for labeled entries.
Manifest load_manifest(const std::filesystem::path& path);

/// Canonical serialization: sorted keys, 2-space indent, newline-terminated,
/// directory paths relative to the output file's directory.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

/// Structural validation only (no filesystem checks).
void validate(const Manifest& m);

/// Returns a copy of m where every unlabeled or pseudo-labeled entry points
/// at <pred_root>/<video>/<expression> with label_source pseudo(round).
/// Ground-truth entries are never overwritten; their keys are appended to
/// *skipped_ground_truth when provided. Every injected entry must have one
/// prediction mask per frame under pred_root or this throws.
Manifest inject_pseudo(const Manifest& m, const std::filesystem::path& pred_root, int round,
                       std::vector<std::pair<std::string, std::string>>* skipped_ground_truth =
                           nullptr);

/// Concatenation preserving entry order within each input. Sequence keys
/// must be disjoint across inputs.
Manifest merge_manifests(const std::vector<Manifest>& manifests, const std::string& name);

struct ProvenanceStats {
    struct Bucket {
        long entries = 0;
        long frames = 0;
        bool operator==(const Bucket&) const = default;
    };
    Bucket ground_truth;
    Bucket none;
    std::map<int, Bucket> pseudo;  // keyed by round

    Bucket pseudo_total() const;
    bool operator==(const ProvenanceStats&) const = default;
};

/// Entry and frame counts per label_source value.
ProvenanceStats manifest_stats(const Manifest& m);

}  // namespace vtk
