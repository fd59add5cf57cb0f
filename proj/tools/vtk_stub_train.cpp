// Fixture trainer for exercising the pipeline driver: consumes the exact
// file surfaces a real trainer would (manifest + CLR schedule CSV) and
// records how many labeled frames it saw. Exit codes match vtk's.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "vtk/stub.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stub trainer: counts labeled frames and validates the schedule"};
    std::string manifest_path, schedule_path, model_path;
    int round = 0;
    bool fail = false;
    app.add_option("--manifest", manifest_path, "Training manifest")->required();
    app.add_option("--schedule", schedule_path, "CLR schedule CSV")->required();
    app.add_option("--model", model_path, "Model JSON to write")->required();
    app.add_option("--round", round, "Training round (logged only)");
    app.add_flag("--fail", fail, "Exit 1 without writing anything (failure-path testing)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    if (fail) {
        std::fprintf(stderr, "stub-train: failing as requested\n");
        return 1;
    }
    try {
        const vtk::StubModel model = vtk::stub_train(manifest_path, schedule_path, model_path);
        std::fprintf(stderr, "stub-train: round %d, %ld labeled frames, %ld schedule rows\n",
                     round, model.labeled_frames, model.schedule_rows);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "stub-train: %s\n", e.what());
        return 1;
    }
    return 0;
}
