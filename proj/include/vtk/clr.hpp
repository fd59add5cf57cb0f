#pragma once

#include <filesystem>
#include <string>

#include "vtk/error.hpp"

namespace vtk {

/// Triangular cyclical learning-rate schedule. One cycle per epoch: the
/// rate climbs linearly from lr_min to lr_max over the first half of the
/// epoch and falls back to lr_min over the second half.
struct ScheduleSpec {
    double lr_min = 1e-7;
    double lr_max = 1e-5;
    int iters_per_epoch = 1;
    int epochs = 1;
};

/// Throws Error on lr_min <= 0, lr_max < lr_min, or non-positive counts.
void validate(const ScheduleSpec& spec);

/// Learning rate at a given iteration. With N = iters_per_epoch and
/// x = (iter mod N)/N: lr = lr_min + (lr_max - lr_min) * (1 - |2x - 1|).
/// iter must be in [0, epochs * N).
double lr_at(const ScheduleSpec& spec, long iter);

/// CSV `iter,lr` with one row per iteration over all epochs, lr in
/// scientific notation with 12 significant digits. Deterministic bytes.
std::string schedule_csv(const ScheduleSpec& spec);
void emit_schedule(const ScheduleSpec& spec, const std::filesystem::path& path);

}  // namespace vtk
