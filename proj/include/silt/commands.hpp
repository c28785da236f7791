#pragma once

#include <iosfwd>
#include <string>

#include "io.hpp"

namespace silt {

// Command implementations behind the silt CLI. Each writes its files under
// cfg.out_dir, prints a short summary to `log` and returns a process exit code.
int cmd_constants(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_estimate(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
// Summarizes an existing report.json in cfg.out_dir.
int cmd_report(const RunConfig& cfg, std::ostream& log);

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& log);

// Metadata header for emitted tables: the config without location and
// thread settings, so reruns produce identical bytes.
json output_metadata(const RunConfig& cfg);

// Experiment selected by cfg.experiment ("auto" follows the regime).
ExperimentResult run_experiment(const RunConfig& cfg);

} // namespace silt
