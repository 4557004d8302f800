#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "randmeas/analysis.hpp"
#include "randmeas/config.hpp"
#include "randmeas/scheme1.hpp"

namespace randmeas {

enum class ExitCode : int { Ok = 0, ConfigError = 2, Inconclusive = 3, NumericalFailure = 4 };

/// Command-line overrides applied on top of the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::string> out;
};

struct CommandResult {
  ExitCode code = ExitCode::Ok;
  std::string summary;
  std::vector<std::string> files;  // written outputs, relative to the output directory
};

/// q(tau) for a model; the walk version precomputes its per-mode constants.
ReturnFn make_return_function(const Model& model);

/// Natural quadrature panel for the model's return probability.
ExpectOptions expect_options(const Model& model);

/// The commands write into the output directory, finishing with
/// manifest.json. They throw ConfigError, DomainError, NumericalError; an
/// inconclusive analysis is reported through CommandResult::code.
CommandResult cmd_propagate(const RunConfig& cfg, const RunOverrides& ov, std::ostream& log);
CommandResult cmd_survival(const RunConfig& cfg, const RunOverrides& ov, std::ostream& log);
CommandResult cmd_scan(const RunConfig& cfg, const RunOverrides& ov, std::ostream& log);
CommandResult cmd_rate_function(const RunConfig& cfg, const RunOverrides& ov, std::ostream& log);
CommandResult cmd_synthetic(const RunConfig& cfg, const RunOverrides& ov, std::ostream& log);

/// Loads the config, dispatches by subcommand name and maps exceptions to
/// exit codes. Diagnostics go to `log`.
int run_command(const std::string& command, const std::string& config_path, const RunOverrides& ov,
                std::ostream& log);

std::string tool_version();

}  // namespace randmeas
