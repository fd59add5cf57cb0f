#include "vtk/selftrain.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "vtk/hash.hpp"
#include "vtk/subprocess.hpp"
#include "vtk/tta.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vtk {

namespace {

const std::set<std::string> kAllowedPlaceholders = {"manifest", "out_dir", "schedule",
                                                    "round",    "scales",  "flip"};

// External failure within a step: halts the pipeline with a resumable
// state instead of propagating as a hard error.
struct StepHalt {
    std::string message;
};

std::set<std::string> template_placeholders(const CommandTemplate& tpl) {
    std::set<std::string> names;
    for (const auto& token : tpl) {
        for (size_t i = 0; i < token.size(); ++i) {
            if (token[i] != '{') continue;
            const size_t close = token.find('}', i);
            if (close == std::string::npos)
                throw Error("command template: unterminated '{' in '" + token + "'");
            const std::string name = token.substr(i + 1, close - i - 1);
            if (name.empty() || name.find('{') != std::string::npos)
                throw Error("command template: malformed placeholder in '" + token + "'");
            names.insert(name);
            i = close;
        }
    }
    return names;
}

std::string join_ints(const std::vector<int>& values) {
    std::string s;
    for (int v : values) {
        if (!s.empty()) s += ',';
        s += std::to_string(v);
    }
    return s;
}

// round_epochs padded to at least four entries by repeating the last one:
// [initial finetune, round 1, re-finetune rounds..., joint test round].
std::vector<int> effective_epochs(const PipelineConfig& cfg) {
    std::vector<int> e = cfg.round_epochs;
    while (e.size() < 4) e.push_back(e.back());
    return e;
}

void atomic_write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    int fd = open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("atomic_write_file: cannot create " + tmp.string());
    bool ok = true;
    size_t off = 0;
    while (ok && off < content.size()) {
        const ssize_t n = write(fd, content.data() + off, content.size() - off);
        if (n < 0)
            ok = false;
        else
            off += size_t(n);
    }
    ok = (fsync(fd) == 0) && ok;
    ok = (close(fd) == 0) && ok;
    if (!ok) throw Error("atomic_write_file: I/O failure writing " + tmp.string());
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error("atomic_write_file: rename to " + path.string() + ": " + ec.message());
}

}  // namespace

std::vector<std::string> render_command(const CommandTemplate& tpl,
                                        const std::map<std::string, std::string>& bindings) {
    std::vector<std::string> argv;
    argv.reserve(tpl.size());
    for (const auto& token : tpl) {
        std::string out;
        for (size_t i = 0; i < token.size(); ++i) {
            if (token[i] != '{') {
                out += token[i];
                continue;
            }
            const size_t close = token.find('}', i);
            if (close == std::string::npos)
                throw Error("render_command: unterminated '{' in '" + token + "'");
            const std::string name = token.substr(i + 1, close - i - 1);
            const auto it = bindings.find(name);
            if (it == bindings.end())
                throw Error("render_command: unbound placeholder {" + name + "} in '" + token +
                            "'");
            out += it->second;
            i = close;
        }
        argv.push_back(std::move(out));
    }
    return argv;
}

void validate(const PipelineConfig& cfg) {
    if (cfg.train_manifest.empty() || cfg.val_manifest.empty() || cfg.test_manifest.empty())
        throw Error("pipeline config: all three split manifests are required");
    if (cfg.work_dir.empty()) throw Error("pipeline config: work_dir is required");
    if (cfg.round_epochs.empty()) throw Error("pipeline config: round_epochs must be nonempty");
    for (int e : cfg.round_epochs)
        if (e < 1) throw Error("pipeline config: round_epochs entries must be >= 1");
    validate(ScheduleSpec{cfg.lr_min, cfg.lr_max, cfg.iters_per_epoch, 1});
    enumerate_augs(cfg.tta_scales, cfg.tta_flip, cfg.tta_long_cap);  // validates the scale set
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw Error("pipeline config: threshold must be in (0,1)");
    if (cfg.workers < 1) throw Error("pipeline config: workers must be >= 1");

    if (cfg.train_cmd.empty() || cfg.predict_cmd.empty())
        throw Error("pipeline config: train_cmd and predict_cmd are required");
    const auto train_ph = template_placeholders(cfg.train_cmd);
    const auto predict_ph = template_placeholders(cfg.predict_cmd);
    for (const auto* ph : {&train_ph, &predict_ph})
        for (const auto& name : *ph)
            if (!kAllowedPlaceholders.count(name))
                throw Error("pipeline config: unknown placeholder {" + name + "}");
    if (!train_ph.count("manifest") || !train_ph.count("schedule"))
        throw Error("pipeline config: train_cmd must use {manifest} and {schedule}");
    if (!predict_ph.count("manifest") || !predict_ph.count("out_dir"))
        throw Error("pipeline config: predict_cmd must use {manifest} and {out_dir}");
}

std::string compute_config_hash(const PipelineConfig& cfg) {
    json j;
    j["train_manifest"] = fs::absolute(cfg.train_manifest).lexically_normal().generic_string();
    j["val_manifest"] = fs::absolute(cfg.val_manifest).lexically_normal().generic_string();
    j["test_manifest"] = fs::absolute(cfg.test_manifest).lexically_normal().generic_string();
    j["train_cmd"] = cfg.train_cmd;
    j["predict_cmd"] = cfg.predict_cmd;
    j["lr_min"] = cfg.lr_min;
    j["lr_max"] = cfg.lr_max;
    j["iters_per_epoch"] = cfg.iters_per_epoch;
    j["round_epochs"] = cfg.round_epochs;
    j["tta_scales"] = cfg.tta_scales;
    j["tta_flip"] = cfg.tta_flip;
    j["tta_long_cap"] = cfg.tta_long_cap ? json(*cfg.tta_long_cap) : json(nullptr);
    j["threshold"] = cfg.threshold;
    j["work_dir"] = fs::absolute(cfg.work_dir).lexically_normal().generic_string();
    j["seed"] = cfg.seed;
    // workers is operational, not semantic: resuming with a different
    // worker count is allowed.
    return hex64(fnv1a64(j.dump()));
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_pipeline_config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("load_pipeline_config: " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error("load_pipeline_config: " + path.string() + ": not an object");

    const std::set<std::string> known = {
        "train_manifest", "val_manifest", "test_manifest", "train_cmd",  "predict_cmd",
        "clr",            "round_epochs", "tta_scales",    "tta_flip",   "tta_long_cap",
        "threshold",      "work_dir",     "seed",          "workers"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw Error("load_pipeline_config: unknown key '" + key + "' in " + path.string());

    const fs::path base = fs::absolute(path).parent_path().lexically_normal();
    auto resolve = [&base](const std::string& p) {
        const fs::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).lexically_normal();
    };

    PipelineConfig cfg;
    try {
        cfg.train_manifest = resolve(j.at("train_manifest").get<std::string>());
        cfg.val_manifest = resolve(j.at("val_manifest").get<std::string>());
        cfg.test_manifest = resolve(j.at("test_manifest").get<std::string>());
        cfg.train_cmd = j.at("train_cmd").get<std::vector<std::string>>();
        cfg.predict_cmd = j.at("predict_cmd").get<std::vector<std::string>>();
        if (j.contains("clr")) {
            const auto& c = j["clr"];
            cfg.lr_min = c.value("lr_min", cfg.lr_min);
            cfg.lr_max = c.value("lr_max", cfg.lr_max);
            cfg.iters_per_epoch = c.value("iters_per_epoch", cfg.iters_per_epoch);
        }
        if (j.contains("round_epochs")) cfg.round_epochs = j["round_epochs"].get<std::vector<int>>();
        if (j.contains("tta_scales")) cfg.tta_scales = j["tta_scales"].get<std::vector<int>>();
        if (j.contains("tta_flip")) cfg.tta_flip = j["tta_flip"].get<bool>();
        if (j.contains("tta_long_cap") && !j["tta_long_cap"].is_null())
            cfg.tta_long_cap = j["tta_long_cap"].get<int>();
        if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
        cfg.work_dir = resolve(j.at("work_dir").get<std::string>());
        if (j.contains("seed")) cfg.seed = j["seed"].get<long>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    } catch (const json::exception& e) {
        throw Error("load_pipeline_config: " + path.string() + ": " + e.what());
    }

    validate(cfg);
    cfg.hash = compute_config_hash(cfg);
    return cfg;
}

const char* step_name(StepId id) {
    switch (id) {
        case StepId::S1: return "S1";
        case StepId::S2: return "S2";
        case StepId::S3: return "S3";
        case StepId::S4: return "S4";
        case StepId::S5: return "S5";
        case StepId::S6: return "S6";
    }
    throw Error("step_name: invalid step id");
}

StepId step_from_name(const std::string& name) {
    for (StepId id : kStepOrder)
        if (name == step_name(id)) return id;
    throw Error("step_from_name: unknown step '" + name + "'");
}

bool PipelineState::is_complete(StepId id) const {
    return std::find(completed_steps.begin(), completed_steps.end(), id) != completed_steps.end();
}

std::optional<StepId> PipelineState::next_step() const {
    for (StepId id : kStepOrder)
        if (!is_complete(id)) return id;
    return std::nullopt;
}

void save_state(const PipelineState& state, const fs::path& work_dir) {
    json j;
    j["schema"] = "vtk-pipeline-state/1";
    j["config_hash"] = state.config_hash;
    j["completed_steps"] = json::array();
    for (StepId id : state.completed_steps) j["completed_steps"].push_back(step_name(id));
    j["current_round"] = state.current_round;
    j["artifacts"] = state.artifacts;
    switch (state.status) {
        case PipelineState::Status::running: j["status"] = "running"; break;
        case PipelineState::Status::halted: j["status"] = "halted"; break;
        case PipelineState::Status::done: j["status"] = "done"; break;
    }
    j["error"] = state.error.empty() ? json(nullptr) : json(state.error);
    atomic_write_file(work_dir / "state.json", j.dump(2) + "\n");
}

PipelineState load_state(const fs::path& work_dir) {
    const fs::path path = work_dir / "state.json";
    std::ifstream in(path);
    if (!in) throw Error("load_state: cannot open " + path.string());
    json j;
    try {
        in >> j;
        PipelineState state;
        if (j.at("schema") != "vtk-pipeline-state/1")
            throw Error("load_state: unsupported schema in " + path.string());
        state.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& name : j.at("completed_steps"))
            state.completed_steps.push_back(step_from_name(name.get<std::string>()));
        state.current_round = j.at("current_round").get<int>();
        if (j.contains("artifacts"))
            state.artifacts =
                j["artifacts"]
                    .get<std::map<std::string, std::map<std::string, std::string>>>();
        const std::string status = j.at("status").get<std::string>();
        if (status == "running")
            state.status = PipelineState::Status::running;
        else if (status == "halted")
            state.status = PipelineState::Status::halted;
        else if (status == "done")
            state.status = PipelineState::Status::done;
        else
            throw Error("load_state: unknown status '" + status + "'");
        if (j.contains("error") && !j["error"].is_null())
            state.error = j["error"].get<std::string>();

        // Completed steps must form a prefix of the step order.
        for (size_t i = 0; i < state.completed_steps.size(); ++i)
            if (state.completed_steps[i] != kStepOrder[i])
                throw Error("load_state: completed_steps is not a prefix of the step order");
        return state;
    } catch (const json::exception& e) {
        throw Error("load_state: " + path.string() + ": " + e.what());
    }
}

PipelineState plan(const PipelineConfig& config) {
    validate(config);
    // Manifests must load and validate before any step runs.
    load_manifest(config.train_manifest);
    load_manifest(config.val_manifest);
    load_manifest(config.test_manifest);

    fs::create_directories(config.work_dir);
    if (fs::exists(config.work_dir / "state.json"))
        throw Error("plan: " + (config.work_dir / "state.json").string() +
                    " already exists; resume it or use a fresh work_dir");

    PipelineState state;
    state.config_hash = config.hash.empty() ? compute_config_hash(config) : config.hash;
    state.status = PipelineState::Status::running;
    state.current_round = 0;
    save_state(state, config.work_dir);
    return state;
}

namespace {

// Shared context for one step execution.
struct StepRun {
    const PipelineConfig& cfg;
    fs::path work;
    fs::path sdir;
    fs::path log_dir;
    int round = 0;  // training rounds completed before this step
    std::map<std::string, std::string> artifacts;

    std::string rel(const fs::path& p) const {
        return p.lexically_relative(work).generic_string();
    }

    std::map<std::string, std::string> base_bindings() const {
        return {{"scales", join_ints(cfg.tta_scales)},
                {"flip", cfg.tta_flip ? "1" : "0"},
                {"round", std::to_string(round)}};
    }

    // Emits the round's CLR schedule, renders the train command, runs it.
    // `suffix` distinguishes repeated training events within one step.
    void train_event(const fs::path& manifest_path, int epochs, int new_round,
                     const std::string& suffix) {
        const fs::path schedule_path = sdir / ("schedule" + suffix + ".csv");
        emit_schedule({cfg.lr_min, cfg.lr_max, cfg.iters_per_epoch, epochs}, schedule_path);
        const fs::path out_dir = sdir / ("out" + suffix);
        fs::create_directories(out_dir);

        auto bindings = base_bindings();
        bindings["round"] = std::to_string(new_round);
        bindings["manifest"] = fs::absolute(manifest_path).string();
        bindings["schedule"] = fs::absolute(schedule_path).string();
        bindings["out_dir"] = fs::absolute(out_dir).string();

        const auto argv = render_command(cfg.train_cmd, bindings);
        const fs::path log_out = log_dir / ("train" + suffix + ".stdout.txt");
        const fs::path log_err = log_dir / ("train" + suffix + ".stderr.txt");
        const int code = run_command(argv, log_out, log_err);
        if (code != 0)
            throw StepHalt{"train command exited with code " + std::to_string(code) +
                           " (stderr: " + log_err.string() + ")"};

        artifacts["schedule" + suffix] = rel(schedule_path);
        artifacts["train_out" + suffix] = rel(out_dir);
    }

    // Runs the predict command once per augmentation (up to cfg.workers
    // concurrently), then fuses the per-augmentation trees into masks.
    fs::path predict_event(const fs::path& split_manifest, const std::string& suffix) {
        const auto specs = enumerate_augs(cfg.tta_scales, cfg.tta_flip, cfg.tta_long_cap);
        const fs::path pred_root = sdir / ("pred" + suffix);
        const fs::path fused_root = sdir / ("fused" + suffix);

        struct Job {
            std::vector<std::string> argv;
            fs::path log_out, log_err;
            std::string tag;
        };
        std::vector<Job> jobs;
        for (const auto& spec : specs) {
            const fs::path out_dir = pred_root / spec.tag();
            fs::create_directories(out_dir);
            auto bindings = base_bindings();
            bindings["manifest"] = fs::absolute(split_manifest).string();
            bindings["out_dir"] = fs::absolute(out_dir).string();
            bindings["scales"] = std::to_string(spec.short_side);
            bindings["flip"] = spec.hflip ? "1" : "0";
            jobs.push_back({render_command(cfg.predict_cmd, bindings),
                            log_dir / ("predict" + suffix + "_" + spec.tag() + ".stdout.txt"),
                            log_dir / ("predict" + suffix + "_" + spec.tag() + ".stderr.txt"),
                            spec.tag()});
        }

        std::vector<ChildProcess> running;
        size_t next = 0;
        std::string failure;
        while (next < jobs.size() || !running.empty()) {
            while (failure.empty() && running.size() < size_t(cfg.workers) &&
                   next < jobs.size()) {
                const Job& job = jobs[next++];
                running.push_back(spawn_process(job.argv, job.log_out, job.log_err));
            }
            if (running.empty()) break;
            const ChildProcess child = running.front();
            running.erase(running.begin());
            const int code = wait_process(child);
            if (code != 0 && failure.empty())
                failure = "predict command exited with code " + std::to_string(code) +
                          " (stderr: " + child.stderr_path.string() + ")";
        }
        if (!failure.empty()) throw StepHalt{failure};

        try {
            const Manifest m = load_manifest(split_manifest);
            fuse_prediction_tree(m, pred_root, specs, fused_root, cfg.threshold);
        } catch (const Error& e) {
            throw StepHalt{std::string("fusing predictions failed: ") + e.what()};
        }

        artifacts["pred" + suffix] = rel(pred_root);
        artifacts["fused" + suffix] = rel(fused_root);
        return fused_root;
    }
};

fs::path artifact_path(const PipelineState& state, const fs::path& work, const std::string& step,
                       const std::string& name) {
    const auto step_it = state.artifacts.find(step);
    if (step_it == state.artifacts.end() || !step_it->second.count(name))
        throw Error("pipeline: step " + step + " did not record artifact '" + name + "'");
    const fs::path path = work / step_it->second.at(name);
    if (!fs::exists(path))
        throw Error("pipeline: missing artifact " + path.string() + " from step " + step);
    return path;
}

// The last val_pseudo manifest produced by S4 (or S2 if S4 recorded none,
// which cannot happen in a completed run but keeps the lookup total).
fs::path latest_val_pseudo(const PipelineState& state, const fs::path& work) {
    const auto s4 = state.artifacts.find("S4");
    if (s4 != state.artifacts.end()) {
        std::string best;
        for (const auto& [name, path] : s4->second)
            if (name.rfind("val_pseudo", 0) == 0 && name > best) best = name;
        if (!best.empty()) return artifact_path(state, work, "S4", best);
    }
    return artifact_path(state, work, "S2", "val_pseudo");
}

}  // namespace

PipelineState run_step(const PipelineState& state, const PipelineConfig& config) {
    if (state.status != PipelineState::Status::running)
        throw Error("run_step: pipeline is not running");
    const auto next = state.next_step();
    if (!next) throw Error("run_step: all steps already complete");
    const StepId step = *next;

    const fs::path work = fs::absolute(config.work_dir).lexically_normal();
    const int step_index = int(step) + 1;
    StepRun run{config,
                work,
                work / ("s" + std::to_string(step_index)),
                work / ("s" + std::to_string(step_index)) / "log",
                state.current_round,
                {}};
    fs::create_directories(run.log_dir);

    const std::vector<int> epochs = effective_epochs(config);
    const int n_refinetunes = int(epochs.size()) - 3;  // rounds between S3 and S5

    PipelineState out = state;
    try {
        switch (step) {
            case StepId::S1: {
                // Initial finetune with CLR on the training split.
                run.train_event(config.train_manifest, epochs[0], run.round + 1, "");
                out.current_round = run.round + 1;
                break;
            }
            case StepId::S2: {
                // Predict the validation split, fuse, and inject round-1
                // pseudo labels.
                const fs::path fused = run.predict_event(config.val_manifest, "");
                const Manifest val = load_manifest(config.val_manifest);
                Manifest pseudo = inject_pseudo(val, fused, 1);
                pseudo.split_name = val.split_name + "-pseudo1";
                const fs::path out_path = run.sdir / "val_pseudo.json";
                save_manifest(pseudo, out_path);
                run.artifacts["val_pseudo"] = run.rel(out_path);
                break;
            }
            case StepId::S3: {
                // Re-finetune on train + round-1 val pseudo labels.
                const Manifest train = load_manifest(config.train_manifest);
                const Manifest pseudo =
                    load_manifest(artifact_path(state, work, "S2", "val_pseudo"));
                const Manifest joint = merge_manifests({train, pseudo}, "joint-s3");
                const fs::path joint_path = run.sdir / "manifest.json";
                save_manifest(joint, joint_path);
                run.artifacts["manifest"] = run.rel(joint_path);
                run.train_event(joint_path, epochs[1], run.round + 1, "");
                out.current_round = run.round + 1;
                break;
            }
            case StepId::S4: {
                // One or more rounds of re-predict, re-inject, re-finetune.
                fs::path prev_pseudo = artifact_path(state, work, "S2", "val_pseudo");
                int round = run.round;
                for (int i = 0; i < n_refinetunes; ++i) {
                    const std::string suffix = i == 0 ? "" : "_" + std::to_string(i + 1);
                    run.round = round;
                    const fs::path fused = run.predict_event(config.val_manifest, suffix);

                    const Manifest prev = load_manifest(prev_pseudo);
                    Manifest pseudo = inject_pseudo(prev, fused, i + 2);
                    pseudo.split_name =
                        load_manifest(config.val_manifest).split_name + "-pseudo" +
                        std::to_string(i + 2);
                    const fs::path pseudo_path = run.sdir / ("val_pseudo" + suffix + ".json");
                    save_manifest(pseudo, pseudo_path);
                    run.artifacts["val_pseudo" + suffix] = run.rel(pseudo_path);

                    const Manifest train = load_manifest(config.train_manifest);
                    const Manifest joint = merge_manifests({train, pseudo}, "joint-s4");
                    const fs::path joint_path = run.sdir / ("manifest" + suffix + ".json");
                    save_manifest(joint, joint_path);
                    run.artifacts["manifest" + suffix] = run.rel(joint_path);

                    run.train_event(joint_path, epochs[2 + i], round + 1, suffix);
                    round += 1;
                    prev_pseudo = pseudo_path;
                }
                out.current_round = round;
                break;
            }
            case StepId::S5: {
                // Predict the test split, inject test pseudo labels, and
                // jointly re-finetune on train + val pseudo + test pseudo.
                const fs::path fused = run.predict_event(config.test_manifest, "");
                const Manifest test = load_manifest(config.test_manifest);
                Manifest test_pseudo = inject_pseudo(test, fused, 1);
                test_pseudo.split_name = test.split_name + "-pseudo1";
                const fs::path test_pseudo_path = run.sdir / "test_pseudo.json";
                save_manifest(test_pseudo, test_pseudo_path);
                run.artifacts["test_pseudo"] = run.rel(test_pseudo_path);

                const Manifest train = load_manifest(config.train_manifest);
                const Manifest val_pseudo = load_manifest(latest_val_pseudo(state, work));
                const Manifest joint =
                    merge_manifests({train, val_pseudo, test_pseudo}, "joint-s5");
                const fs::path joint_path = run.sdir / "manifest.json";
                save_manifest(joint, joint_path);
                run.artifacts["manifest"] = run.rel(joint_path);
                run.train_event(joint_path, epochs.back(), run.round + 1, "");
                out.current_round = run.round + 1;
                break;
            }
            case StepId::S6: {
                // Final prediction pass over the test split.
                run.predict_event(config.test_manifest, "");
                break;
            }
        }
    } catch (const StepHalt& halt) {
        out.status = PipelineState::Status::halted;
        out.error = std::string(step_name(step)) + ": " + halt.message;
        save_state(out, work);
        return out;
    }

    out.completed_steps.push_back(step);
    out.artifacts[step_name(step)] = run.artifacts;
    if (!out.next_step()) out.status = PipelineState::Status::done;
    save_state(out, work);
    return out;
}

PipelineState run_all(const PipelineConfig& config, bool resume, int max_steps) {
    PipelineConfig cfg = config;
    if (cfg.hash.empty()) cfg.hash = compute_config_hash(cfg);

    PipelineState state;
    if (resume) {
        state = load_state(cfg.work_dir);
        if (state.config_hash != cfg.hash)
            throw Error("run_all: config hash mismatch (state " + state.config_hash +
                        ", config " + cfg.hash + "); the config changed under this work_dir");
        if (state.status == PipelineState::Status::done) return state;
        state.status = PipelineState::Status::running;
        state.error.clear();
    } else {
        state = plan(cfg);
    }

    int executed = 0;
    while (state.status == PipelineState::Status::running && state.next_step() &&
           (max_steps < 0 || executed < max_steps)) {
        state = run_step(state, cfg);
        ++executed;
    }
    return state;
}

}  // namespace vtk
