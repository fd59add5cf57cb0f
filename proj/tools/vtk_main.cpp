// vtk: evaluation, TTA fusion, CLR schedules, and the self-training
// pipeline driver. Data goes to files (or stdout when no --out is given),
// logs go to stderr. Exit codes: 0 success, 1 domain error, 2 usage error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vtk/clr.hpp"
#include "vtk/manifest.hpp"
#include "vtk/metrics.hpp"
#include "vtk/selftrain.hpp"
#include "vtk/stub.hpp"
#include "vtk/tta.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& text, const std::optional<std::string>& out_path) {
    if (!out_path) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(*out_path, std::ios::binary);
    out << text;
    if (!out) throw vtk::Error("cannot write " + *out_path);
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void cmd_evaluate(const std::string& pred_root, const std::string& gt_root,
                  const std::string& manifest_path, const std::optional<std::string>& out_path,
                  double bound_frac) {
    const vtk::Manifest m = vtk::load_manifest(manifest_path);
    std::map<vtk::SequenceKey, vtk::FrameScore> per_sequence;
    for (const auto& entry : m.entries) {
        std::vector<std::pair<vtk::BinaryMask, vtk::BinaryMask>> frames;
        frames.reserve(entry.frame_ids.size());
        for (const auto& frame : entry.frame_ids) {
            const fs::path rel = fs::path(entry.video_id) / entry.expression_id / (frame + ".png");
            frames.emplace_back(vtk::read_mask(fs::path(pred_root) / rel),
                                vtk::read_mask(fs::path(gt_root) / rel));
        }
        per_sequence[{entry.video_id, entry.expression_id}] =
            vtk::eval_sequence(frames, bound_frac);
    }
    const vtk::MetricReport report = vtk::aggregate(per_sequence);
    write_text(vtk::report_to_json(report), out_path);
    std::fprintf(stderr, "evaluated %zu sequences: J&F %.6f\n", per_sequence.size(), report.jf);
}

void cmd_fuse(const std::string& pred_root, const std::vector<int>& scales, bool flip,
              std::optional<int> long_cap, const std::string& manifest_path, double threshold,
              const std::string& out_root) {
    const auto specs = vtk::enumerate_augs(scales, flip, long_cap);
    const vtk::Manifest m = vtk::load_manifest(manifest_path);
    const long n = vtk::fuse_prediction_tree(m, pred_root, specs, out_root, threshold);
    std::fprintf(stderr, "fused %zu augmentations into %ld masks under %s\n", specs.size(), n,
                 out_root.c_str());
}

void cmd_schedule(double lr_min, double lr_max, int iters_per_epoch, int epochs,
                  const std::optional<std::string>& out_path) {
    const vtk::ScheduleSpec spec{lr_min, lr_max, iters_per_epoch, epochs};
    write_text(vtk::schedule_csv(spec), out_path);
}

// Input: CSV `name,J,F`. Output: CSV `rank,name,J,F,JF` sorted by the
// ranking rules. Values pass through unscaled; the percent/fraction mode
// only sets the validation range.
void cmd_report_rank(const std::string& in_path, const std::optional<std::string>& out_path,
                     bool fraction) {
    std::ifstream in(in_path);
    if (!in) throw vtk::Error("cannot open " + in_path);
    std::string line;
    if (!std::getline(in, line) || line != "name,J,F")
        throw vtk::Error(in_path + ": expected header 'name,J,F'");
    const double hi = fraction ? 1.0 : 100.0;
    std::vector<std::tuple<std::string, double, double>> rows;
    for (int lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        const auto where = in_path + ":" + std::to_string(lineno);
        const size_t c1 = line.find(',');
        const size_t c2 = line.rfind(',');
        if (c1 == std::string::npos || c2 == c1)
            throw vtk::Error(where + ": expected 'name,J,F'");
        const std::string name = line.substr(0, c1);
        if (name.empty() || name.find(',') != std::string::npos)
            throw vtk::Error(where + ": bad name field");
        double j = 0.0, f = 0.0;
        try {
            size_t used = 0;
            const std::string js = line.substr(c1 + 1, c2 - c1 - 1);
            const std::string fs_ = line.substr(c2 + 1);
            j = std::stod(js, &used);
            if (used != js.size()) throw std::invalid_argument(js);
            f = std::stod(fs_, &used);
            if (used != fs_.size()) throw std::invalid_argument(fs_);
        } catch (const std::exception&) {
            throw vtk::Error(where + ": J and F must be numbers");
        }
        if (j < 0 || j > hi || f < 0 || f > hi)
            throw vtk::Error(where + ": J and F must lie in [0, " + format_value(hi) +
                             "]; pass --fraction for [0,1] inputs");
        rows.emplace_back(name, j, f);
    }
    const auto ranked = vtk::rank_table(rows);
    std::ostringstream out;
    out << "rank,name,J,F,JF\n";
    for (size_t i = 0; i < ranked.size(); ++i)
        out << (i + 1) << ',' << ranked[i].name << ',' << format_value(ranked[i].j) << ','
            << format_value(ranked[i].f) << ',' << format_value(ranked[i].jf) << '\n';
    write_text(out.str(), out_path);
}

int cmd_pipeline_run(const std::string& config_path, bool resume, std::optional<int> workers,
                     int max_steps) {
    vtk::PipelineConfig cfg = vtk::load_pipeline_config(config_path);
    if (workers) {
        cfg.workers = *workers;
        vtk::validate(cfg);
    }
    std::fprintf(stderr, "pipeline: config %s (hash %s), work dir %s\n", config_path.c_str(),
                 cfg.hash.c_str(), cfg.work_dir.c_str());
    const vtk::PipelineState state = vtk::run_all(cfg, resume, max_steps);
    for (vtk::StepId id : state.completed_steps)
        std::fprintf(stderr, "pipeline: %s complete\n", vtk::step_name(id));
    switch (state.status) {
        case vtk::PipelineState::Status::done:
            std::fprintf(stderr, "pipeline: done after round %d\n", state.current_round);
            return 0;
        case vtk::PipelineState::Status::running:
            std::fprintf(stderr, "pipeline: stopped after --max-steps %d with %s pending\n",
                         max_steps, vtk::step_name(*state.next_step()));
            return 0;
        case vtk::PipelineState::Status::halted:
            std::fprintf(stderr, "pipeline: halted: %s\n", state.error.c_str());
            std::fprintf(stderr, "pipeline: fix the cause and rerun with --resume\n");
            return 1;
    }
    return 1;
}

void cmd_stub_predict(const vtk::StubPredictOptions& opts) {
    const long n = vtk::stub_predict(opts);
    std::fprintf(stderr, "stub-predict: wrote %ld maps under %s\n", n, opts.out_root.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"video segmentation pipeline toolkit"};
    app.require_subcommand(1);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score predicted masks against ground truth");
    std::string ev_pred, ev_gt, ev_manifest;
    std::optional<std::string> ev_out;
    double ev_bound_frac = 0.008;
    evaluate->add_option("--pred", ev_pred, "Prediction tree <pred>/<video>/<expr>/<frame>.png")
        ->required();
    evaluate->add_option("--gt", ev_gt, "Ground-truth tree with the same layout")->required();
    evaluate->add_option("--manifest", ev_manifest, "Manifest naming sequences and frames")
        ->required();
    evaluate->add_option("--out", ev_out, "Report JSON path (default: stdout)");
    evaluate->add_option("--bound-frac", ev_bound_frac,
                         "Boundary tolerance as a fraction of the image diagonal");
    evaluate->callback([&] { cmd_evaluate(ev_pred, ev_gt, ev_manifest, ev_out, ev_bound_frac); });

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Fuse per-augmentation predictions into masks");
    std::string fu_pred_root, fu_manifest, fu_out;
    std::vector<int> fu_scales;
    bool fu_flip = false;
    std::optional<int> fu_long_cap;
    double fu_threshold = 0.5;
    fuse->add_option("--pred-root", fu_pred_root,
                     "Tree <pred-root>/<tag>/<video>/<expr>/<frame>.pfm")
        ->required();
    fuse->add_option("--scales", fu_scales, "Short-side sizes (comma separated)")
        ->required()
        ->delimiter(',');
    fuse->add_flag("--flip", fu_flip, "Include horizontally flipped variants");
    fuse->add_option("--long-cap", fu_long_cap, "Long-side cap used when predicting");
    fuse->add_option("--manifest", fu_manifest, "Manifest naming sequences and frames")
        ->required();
    fuse->add_option("--threshold", fu_threshold, "Foreground threshold on the mean probability");
    fuse->add_option("--out", fu_out, "Output mask tree root")->required();
    fuse->callback([&] {
        cmd_fuse(fu_pred_root, fu_scales, fu_flip, fu_long_cap, fu_manifest, fu_threshold,
                 fu_out);
    });

    // schedule
    auto* schedule = app.add_subcommand("schedule", "Emit a triangular CLR schedule as CSV");
    double sc_lr_min = 1e-7, sc_lr_max = 1e-5;
    int sc_iters = 0, sc_epochs = 0;
    std::optional<std::string> sc_out;
    schedule->add_option("--lr-min", sc_lr_min, "Lower learning-rate bound");
    schedule->add_option("--lr-max", sc_lr_max, "Upper learning-rate bound");
    schedule->add_option("--iters-per-epoch", sc_iters, "Iterations per epoch (= per cycle)")
        ->required();
    schedule->add_option("--epochs", sc_epochs, "Number of epochs")->required();
    schedule->add_option("--out", sc_out, "CSV path (default: stdout)");
    schedule->callback([&] { cmd_schedule(sc_lr_min, sc_lr_max, sc_iters, sc_epochs, sc_out); });

    // pipeline run
    auto* pipeline = app.add_subcommand("pipeline", "Self-training pipeline driver");
    pipeline->require_subcommand(1);
    auto* pipeline_run = pipeline->add_subcommand("run", "Run pipeline steps from a config");
    std::string pl_config;
    bool pl_resume = false;
    std::optional<int> pl_workers;
    int pl_max_steps = -1;
    pipeline_run->add_option("--config", pl_config, "Pipeline config JSON")->required();
    pipeline_run->add_flag("--resume", pl_resume, "Continue from an existing state file");
    pipeline_run->add_option("--workers", pl_workers,
                             "Cap on concurrent external predict commands");
    pipeline_run->add_option("--max-steps", pl_max_steps,
                             "Stop after this many steps (default: run to completion)");
    int pipeline_exit = 0;
    pipeline_run->callback(
        [&] { pipeline_exit = cmd_pipeline_run(pl_config, pl_resume, pl_workers, pl_max_steps); });

    // report rank
    auto* report = app.add_subcommand("report", "Leaderboard utilities");
    report->require_subcommand(1);
    auto* report_rank = report->add_subcommand("rank", "Rank a name,J,F table by J&F");
    std::string rp_in;
    std::optional<std::string> rp_out;
    bool rp_fraction = false;
    report_rank->add_option("--in", rp_in, "Input CSV with header name,J,F")->required();
    report_rank->add_option("--out", rp_out, "Output CSV path (default: stdout)");
    report_rank->add_flag("--fraction", rp_fraction,
                          "Values are fractions in [0,1] instead of percents");
    report_rank->callback([&] { cmd_report_rank(rp_in, rp_out, rp_fraction); });

    // stub-predict
    auto* stub = app.add_subcommand(
        "stub-predict", "Deterministic fixture predictor for exercising the pipeline");
    vtk::StubPredictOptions st;
    std::string st_manifest, st_out;
    std::optional<std::string> st_truth, st_model;
    int st_flip = 0;
    bool st_fail = false;
    stub->add_option("--manifest", st_manifest, "Manifest naming sequences and frames")
        ->required();
    stub->add_option("--out", st_out, "Output tree root for .pfm maps")->required();
    stub->add_option("--seed", st.seed, "Noise seed");
    stub->add_option("--noise", st.noise, "Base perturbation magnitude in [0,1]");
    stub->add_option("--decay", st.decay_frames,
                     "Labeled-frame count that halves the effective noise");
    stub->add_option("--truth", st_truth,
                     "Ground-truth mask tree (default: each entry's own labels)");
    stub->add_option("--model", st_model, "Stub model JSON from a previous training run");
    stub->add_option("--scale", st.scale, "Emit maps at this short side");
    stub->add_option("--long-cap", st.long_cap, "Long-side cap for --scale");
    stub->add_option("--flip", st_flip, "Emit horizontally flipped maps (0 or 1)");
    stub->add_flag("--fail", st_fail, "Exit 1 without writing anything (failure-path testing)");
    int stub_exit = 0;
    stub->callback([&] {
        if (st_fail) {
            std::fprintf(stderr, "stub-predict: failing as requested\n");
            stub_exit = 1;
            return;
        }
        st.manifest_path = st_manifest;
        st.out_root = st_out;
        if (st_truth) st.truth_root = *st_truth;
        if (st_model) st.model_path = *st_model;
        st.flip = st_flip != 0;
        cmd_stub_predict(st);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const vtk::Error& e) {
        std::fprintf(stderr, "vtk: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vtk: %s\n", e.what());
        return 1;
    }
    return pipeline_exit ? pipeline_exit : stub_exit;
}
