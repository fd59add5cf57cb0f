#pragma once

#include <stdexcept>
#include <string>

namespace vtk {

/// Domain error. Everything the toolkit can reject at runtime (bad files,
/// violated preconditions, failed external commands) throws this; the CLI
/// maps it to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vtk
