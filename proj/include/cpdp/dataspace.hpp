#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpdp/matrix.hpp"

namespace cpdp::data {

/// One software project: numeric metric matrix plus binary defect labels.
struct ProjectData {
    std::string name;
    Matrix features;          // rows = instances, cols = metrics
    std::vector<int> labels;  // values in {0,1}, 1 = defective
};

/// Source projects plus a train/test split of the target project. Immutable
/// after construction; safe to share across concurrent evaluators.
struct DatasetBundle {
    std::vector<ProjectData> source;
    ProjectData target_train;
    ProjectData target_test;
    std::size_t feature_count = 0;

    std::size_t source_row_count() const {
        std::size_t n = 0;
        for (const auto& p : source) n += p.features.rows();
        return n;
    }

    /// All source rows stacked in project order.
    Matrix stacked_source_features() const;
    std::vector<int> stacked_source_labels() const;
};

/// Parses a UTF-8 comma-separated file with a header row whose final column
/// is "label" (values 0/1); all other columns must be finite numerics.
ProjectData load_project_csv(const std::filesystem::path& path);

/// Writes the generic header f0..f{d-1},label and all rows with 17
/// significant digits so a reload reproduces the numeric content.
void write_project_csv(const ProjectData& project, const std::filesystem::path& path);

/// Splits off `target` (seeded shuffle, ceil(fraction*n) train rows) and uses
/// the remaining projects as sources. If the train part misses a class, one
/// row of the missing class is swapped in from the test part.
DatasetBundle make_bundle(const std::vector<ProjectData>& projects, const std::string& target,
                          double train_fraction, std::uint64_t seed);

/// Z-scores every partition with per-column statistics fitted on source plus
/// target_train rows (never target_test). Zero-variance columns pass through.
DatasetBundle zscore_fit_apply(const DatasetBundle& bundle);

/// Synthetic CPDP benchmark: returns `n_source_projects` source projects plus
/// one project named "target", each with two Gaussian class clouds and a
/// per-project mean drift of magnitude `shift`. About 30% positives.
std::vector<ProjectData> synth_cpdp(std::size_t n_source_projects, std::size_t n_rows,
                                    std::size_t n_features, double shift, std::uint64_t seed);

}  // namespace cpdp::data
