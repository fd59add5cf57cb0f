#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtk/clr.hpp"
#include "vtk/manifest.hpp"

namespace vtk {

/// External command argv with textual placeholders. Allowed placeholders:
/// {manifest}, {out_dir}, {schedule}, {round}, {scales}, {flip}. Arguments
/// are substituted verbatim and executed directly, never through a shell.
using CommandTemplate = std::vector<std::string>;

/// Pure textual substitution of placeholders. Every placeholder appearing
/// in the template must be bound or this throws.
std::vector<std::string> render_command(const CommandTemplate& tpl,
                                        const std::map<std::string, std::string>& bindings);

struct PipelineConfig {
    std::filesystem::path train_manifest;
    std::filesystem::path val_manifest;
    std::filesystem::path test_manifest;
    CommandTemplate train_cmd;
    CommandTemplate predict_cmd;
    double lr_min = 1e-7;
    double lr_max = 1e-5;
    int iters_per_epoch = 100;
    /// Epochs per training round: the initial finetune, the first
    /// pseudo-label round, any number of re-finetune rounds, and the final
    /// joint round with test pseudo labels. Shorter lists repeat their last
    /// entry; entries beyond four add extra re-predict/re-finetune rounds.
    std::vector<int> round_epochs = {4, 5, 7, 7};
    std::vector<int> tta_scales = {288, 352, 448, 512, 640};
    bool tta_flip = true;
    std::optional<int> tta_long_cap;
    double threshold = 0.5;
    std::filesystem::path work_dir;
    long seed = 0;
    int workers = 1;

    /// Stable digest of the config, set by load_pipeline_config or
    /// compute_config_hash.
    std::string hash;
};

/// Parses a pipeline config JSON file. Relative paths resolve against the
/// config file's directory. Validates command templates, schedule bounds,
/// and the TTA scale set, and fills the config hash.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// FNV-1a digest over the canonical serialized config.
std::string compute_config_hash(const PipelineConfig& config);

/// Structural validation (templates, placeholder sets, parameter ranges).
void validate(const PipelineConfig& config);

enum class StepId { S1, S2, S3, S4, S5, S6 };
inline constexpr std::array<StepId, 6> kStepOrder = {StepId::S1, StepId::S2, StepId::S3,
                                                     StepId::S4, StepId::S5, StepId::S6};
const char* step_name(StepId id);
StepId step_from_name(const std::string& name);

struct PipelineState {
    enum class Status { running, halted, done };

    std::string config_hash;
    std::vector<StepId> completed_steps;  // always a prefix of kStepOrder
    int current_round = 0;                // training rounds completed so far
    /// Per completed step: artifact name -> path relative to work_dir.
    std::map<std::string, std::map<std::string, std::string>> artifacts;
    Status status = Status::running;
    std::string error;  // populated when halted

    bool is_complete(StepId id) const;
    std::optional<StepId> next_step() const;
};

/// Validates the config (including loading all three manifests), creates
/// work_dir, and persists a fresh state with zero completed steps. Fails if
/// a state file already exists; resume instead.
PipelineState plan(const PipelineConfig& config);

/// Persisted at <work_dir>/state.json via write-temp/fsync/rename, so a
/// crash leaves either the old or the new snapshot, never a partial file.
void save_state(const PipelineState& state, const std::filesystem::path& work_dir);
PipelineState load_state(const std::filesystem::path& work_dir);

/// Executes the next incomplete step: materializes schedules and merged
/// manifests, invokes the external command(s), fuses predictions, records
/// artifacts, and persists the new state. A failing external command or
/// missing prediction halts the pipeline with a resumable state.
PipelineState run_step(const PipelineState& state, const PipelineConfig& config);

/// Runs steps in order until done or halted. With resume, picks up an
/// existing state whose config_hash must match; completed steps trigger no
/// external calls. max_steps > 0 bounds how many steps this call executes.
PipelineState run_all(const PipelineConfig& config, bool resume, int max_steps = -1);

}  // namespace vtk
