#pragma once

#include <map>
#include <string>
#include <vector>

#include "mwlab/verify.hpp"

namespace mwlab {

// Experiment configuration, parsed from a single JSON file. Statically
// checkable theorem preconditions (q < p, p > r, ...) are rejected at
// parse time with ConfigError.
struct ExperimentConfig {
    int d = 1;
    int L = 5;
    int n = 2;

    std::string weight_kind = "scalar-embedded";
    std::map<std::string, double> weight_params;
    std::uint64_t weight_seed = 1;
    std::string weight_file;  // optional .mwt path; overrides generation

    TSpec op;
    double p = 2.0;
    double q_aux = 0.0;  // the A_q class for kind "aq"

    std::vector<std::string> theorems;  // rough-ap horm-ap a1 aq cf-* endpoint-*
    bool run_sparse = false;
    bool run_lemmas = false;
    bool refinement_study = false;

    int trials = 6;
    std::uint64_t seed = 1;
    double pass_multiplier = 10.0;
    std::string out_dir = "out";

    std::vector<std::uint64_t> sparse_seeds{1};
    double sparse_r = 1.0;  // exponents of the domination bodies
    double sparse_s = 2.0;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// precondition check for a single theorem id against a parsed config
void validate_theorem(const ExperimentConfig& cfg, const std::string& id);

MatrixWeight load_or_generate_weight(const ExperimentConfig& cfg);

}  // namespace mwlab
