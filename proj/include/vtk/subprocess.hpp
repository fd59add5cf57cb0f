#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vtk/error.hpp"

namespace vtk {

/// A child process spawned with its stdout/stderr redirected to files.
/// argv is executed directly (PATH lookup, no shell interpretation).
struct ChildProcess {
    int pid = -1;
    std::vector<std::string> argv;
    std::filesystem::path stdout_path;
    std::filesystem::path stderr_path;
};

/// Starts the command without waiting. Throws if the executable cannot be
/// spawned or the log files cannot be created.
ChildProcess spawn_process(const std::vector<std::string>& argv,
                           const std::filesystem::path& stdout_path,
                           const std::filesystem::path& stderr_path);

/// Blocks until the child exits. Returns the exit code; a child killed by
/// signal N is reported as 128 + N.
int wait_process(const ChildProcess& child);

/// spawn + wait.
int run_command(const std::vector<std::string>& argv, const std::filesystem::path& stdout_path,
                const std::filesystem::path& stderr_path);

}  // namespace vtk
