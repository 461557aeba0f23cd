#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cnhp {

/// Raised for malformed options or unknown subcommands; the CLI maps it to
/// exit code 2 while other exceptions become exit code 1.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Executes one subcommand. `options` carries the parsed flags (paths,
/// overrides, study sizes); artifacts are written under options["out"] and a
/// manifest is emitted for every run. Returns a machine-readable summary.
nlohmann::json run_command(const std::string& subcommand, const nlohmann::json& options);

const std::vector<std::string>& subcommand_registry();

/// Every score-stream and paired-delta label the artifact can emit. Label
/// seeds are injective over this set.
std::vector<std::string> label_registry();

}  // namespace cnhp
