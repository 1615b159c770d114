#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "spotforward/model.hpp"

namespace spotforward {

//! Everything a command-line run needs, after defaults and overrides.
struct RunConfig {
    ModelParams params;
    CostProcess cost; // the offshore venue (regime switch by default)
    SupplySpec supply;
    double c_onshore = 0.05; // onshore venue constant cost level
    int n_steps = 4096;
    std::vector<double> calibration_targets;
    double picard_sigma_bar = 1.0;
    double picard_R = 1.0;
    int picard_max_iter = 200;
    double picard_tol = 1e-10;
};

//! Built-in defaults used when no config file is given.
RunConfig default_run_config();

/**
 * Parse "key = value" lines ('#' starts a comment) and overlay them on
 * the defaults. Unknown keys and malformed values throw
 * std::invalid_argument naming the offending line.
 */
RunConfig parse_run_config(std::istream& in);

RunConfig load_run_config(const std::string& path);

} // namespace spotforward
