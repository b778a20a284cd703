#pragma once

#include "sppfem/harness.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sppfem {

/// INI config with sections [shape], [model], [stabilizer], [time], [output], [converge], [run].
/// Overrides are "section.key=value" strings applied after the file.
ExperimentConfig parse_config(std::istream& is, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Effective config in the same format; parse_config(write_config(c)) == c.
void write_config(std::ostream& os, const ExperimentConfig& config);

} // namespace sppfem
