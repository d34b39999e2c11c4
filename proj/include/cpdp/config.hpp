#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpdp/ensemble.hpp"
#include "cpdp/mots.hpp"

namespace cpdp::cli {

/// Flat key/value run configuration (see README for the schema).
struct RunConfig {
    std::vector<std::string> data_paths;  // explicit CSV list
    std::string data_dir;                 // or: every *.csv in a directory
    std::string target;
    double train_fraction = 0.9;
    std::uint64_t seed = 1;
    int repeats = 1;
    std::string out = "results";
    mots::RunBudgets budgets;
    std::string objective_map = "default";
    std::string q_mode = "max_q";
    bool parallel_repeats = false;

    ens::QMode q_mode_enum() const;
    void validate() const;  // throws ConfigError
};

RunConfig parse_run_config(const std::filesystem::path& path);

/// Parser core; `context` names the source in error messages.
RunConfig parse_run_config_text(const std::string& text, const std::string& context);

}  // namespace cpdp::cli
