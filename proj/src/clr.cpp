#include "vtk/clr.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace vtk {

void validate(const ScheduleSpec& spec) {
    if (!(spec.lr_min > 0)) throw Error("ScheduleSpec: lr_min must be > 0");
    if (spec.lr_max < spec.lr_min) throw Error("ScheduleSpec: lr_max must be >= lr_min");
    if (spec.iters_per_epoch < 1) throw Error("ScheduleSpec: iters_per_epoch must be >= 1");
    if (spec.epochs < 1) throw Error("ScheduleSpec: epochs must be >= 1");
}

double lr_at(const ScheduleSpec& spec, long iter) {
    validate(spec);
    const long total = long(spec.epochs) * spec.iters_per_epoch;
    if (iter < 0 || iter >= total)
        throw Error("lr_at: iter " + std::to_string(iter) + " outside [0, " +
                    std::to_string(total) + ")");
    const double x = double(iter % spec.iters_per_epoch) / spec.iters_per_epoch;
    return spec.lr_min + (spec.lr_max - spec.lr_min) * (1.0 - std::fabs(2.0 * x - 1.0));
}

std::string schedule_csv(const ScheduleSpec& spec) {
    validate(spec);
    std::string csv = "iter,lr\n";
    char row[64];
    const long total = long(spec.epochs) * spec.iters_per_epoch;
    for (long i = 0; i < total; ++i) {
        snprintf(row, sizeof row, "%ld,%.11e\n", i, lr_at(spec, i));
        csv += row;
    }
    return csv;
}

void emit_schedule(const ScheduleSpec& spec, const std::filesystem::path& path) {
    const std::string csv = schedule_csv(spec);
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw Error("emit_schedule: cannot open " + path.string() + " for writing");
    bool ok = fwrite(csv.data(), 1, csv.size(), f) == csv.size();
    ok = (fclose(f) == 0) && ok;
    if (!ok) throw Error("emit_schedule: I/O failure writing " + path.string());
}

}  // namespace vtk
