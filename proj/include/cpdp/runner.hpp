#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpdp/config.hpp"

namespace cpdp::cli {

struct RunOutput {
    nlohmann::ordered_json document;
    std::string csv;
    double wall_seconds = 0.0;  // goes to the sidecar log, not the result file
};

/// One full experiment (phase 1 -> pool -> phase 2) at the given seed.
RunOutput run_single(const RunConfig& config, std::uint64_t seed);

/// Executes `repeats` runs (seed, seed+1, ...) and writes, per repeat,
/// <target>_seed<k>.json / .csv plus a .log sidecar with the wall time.
/// Returns the written JSON paths.
std::vector<std::filesystem::path> run_experiment(const RunConfig& config,
                                                  const std::string& out_override);

/// Statistical comparison across result directories (one method per
/// directory, the first is the reference). Self-contained: only reads the
/// result documents.
std::string compare_report(const std::vector<std::filesystem::path>& dirs,
                           const std::string& metric, double alpha);

/// Generates the synthetic benchmark CSVs (src1..srcK.csv, target.csv).
std::vector<std::filesystem::path> write_synth_dataset(std::size_t projects, std::size_t rows,
                                                       std::size_t features, double shift,
                                                       std::uint64_t seed,
                                                       const std::filesystem::path& out_dir);

}  // namespace cpdp::cli
