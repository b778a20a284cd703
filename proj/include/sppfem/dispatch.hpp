#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sppfem {

struct Command {
    std::string name; // run | converge | conserve | k0-table | check
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

enum ExitCode : int { Success = 0, NumericalFailure = 1, UsageError = 2 };

/// Executes a command. Failures print one "error kind=... step=... t=... message=..." line on `err`.
int dispatch(const Command& command, std::ostream& out, std::ostream& err);

} // namespace sppfem
