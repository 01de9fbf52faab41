#pragma once

#include <string>

#include "mwlab/config.hpp"

namespace mwlab {

// exit codes: 0 pass, 1 science failure, 2 config error (thrown before
// this layer), 3 inconclusive certificates only
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInconclusive = 3;

// Runs the configured experiment, writing report.json, summary.csv,
// trace.jsonl and plotdata/*.csv under out_dir. Byte-deterministic for a
// fixed (config, seeds) pair: no timestamps or machine info in outputs.
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace mwlab
