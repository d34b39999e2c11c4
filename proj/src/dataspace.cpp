#include "cpdp/dataspace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cpdp/rng.hpp"

namespace cpdp::data {

Matrix DatasetBundle::stacked_source_features() const {
    Matrix out(0, feature_count);
    for (const auto& p : source) out.append_rows(p.features);
    return out;
}

std::vector<int> DatasetBundle::stacked_source_labels() const {
    std::vector<int> out;
    for (const auto& p : source) out.insert(out.end(), p.labels.begin(), p.labels.end());
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_numeric(const std::string& raw, std::size_t row, std::size_t col) {
    const std::string s = trim(raw);
    if (s.empty())
        throw NonNumericCellError(row, col, "empty cell at row " + std::to_string(row) +
                                                ", column " + std::to_string(col));
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw NonNumericCellError(row, col, "non-numeric cell '" + s + "' at row " +
                                                std::to_string(row) + ", column " +
                                                std::to_string(col));
    return value;
}

}  // namespace

ProjectData load_project_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw MalformedHeaderError("empty file: " + path.string());
    const auto header = split_csv_line(line);
    if (header.size() < 2 || trim(header.back()) != "label")
        throw MalformedHeaderError("header of " + path.string() +
                                   " must end with a 'label' column");
    const std::size_t n_features = header.size() - 1;

    ProjectData project;
    project.name = path.stem().string();
    project.features = Matrix(0, n_features);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw MalformedHeaderError("row " + std::to_string(row) + " of " + path.string() +
                                       " has " + std::to_string(cells.size()) +
                                       " cells, expected " + std::to_string(header.size()));
        std::vector<double> values(n_features);
        for (std::size_t c = 0; c < n_features; ++c) values[c] = parse_numeric(cells[c], row, c + 1);
        const double label = parse_numeric(cells.back(), row, header.size());
        if (label != 0.0 && label != 1.0)
            throw BadLabelError(row, "label at row " + std::to_string(row) + " of " +
                                         path.string() + " must be 0 or 1");
        project.features.append_row(values);
        project.labels.push_back(static_cast<int>(label));
    }
    if (project.features.rows() < 2)
        throw TooFewRowsError(path.string() + " must contain at least 2 data rows");
    return project;
}

void write_project_csv(const ProjectData& project, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw MissingFileError("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < project.features.cols(); ++c) out << 'f' << c << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t r = 0; r < project.features.rows(); ++r) {
        for (std::size_t c = 0; c < project.features.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", project.features(r, c));
            out << buf << ',';
        }
        out << project.labels[r] << '\n';
    }
}

DatasetBundle make_bundle(const std::vector<ProjectData>& projects, const std::string& target,
                          double train_fraction, std::uint64_t seed) {
    const ProjectData* target_project = nullptr;
    for (const auto& p : projects)
        if (p.name == target) {
            if (target_project) throw UnknownTargetError("target name '" + target + "' is ambiguous");
            target_project = &p;
        }
    if (!target_project) throw UnknownTargetError("no project named '" + target + "'");

    const std::size_t n = target_project->features.rows();
    if (n < 10) throw TargetTooSmallError("target '" + target + "' has only " +
                                          std::to_string(n) + " rows, need >= 10");
    const bool has_pos = std::find(target_project->labels.begin(), target_project->labels.end(), 1) !=
                         target_project->labels.end();
    const bool has_neg = std::find(target_project->labels.begin(), target_project->labels.end(), 0) !=
                         target_project->labels.end();
    if (!has_pos || !has_neg)
        throw SingleClassTargetError("target '" + target + "' contains a single label class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng::Stream stream(rng::derive(seed, std::string_view{"bundle_split"}));
    stream.shuffle(order);

    // Small epsilon guards ceil against 0.9*10 -> 9.0000000000000018.
    auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());

    // Class-absence repair: swap one row of the missing class in from test.
    for (int cls : {0, 1}) {
        const bool present = std::any_of(train_idx.begin(), train_idx.end(), [&](std::size_t i) {
            return target_project->labels[i] == cls;
        });
        if (present) continue;
        const auto donor = std::find_if(test_idx.begin(), test_idx.end(), [&](std::size_t i) {
            return target_project->labels[i] == cls;
        });
        if (donor != test_idx.end()) std::swap(train_idx.back(), *donor);
    }

    DatasetBundle bundle;
    bundle.feature_count = target_project->features.cols();
    for (const auto& p : projects) {
        if (&p == target_project) continue;
        if (p.features.cols() != bundle.feature_count)
            throw ShapeMismatchError("project '" + p.name + "' has " +
                                     std::to_string(p.features.cols()) + " features, expected " +
                                     std::to_string(bundle.feature_count));
        bundle.source.push_back(p);
    }

    auto take = [&](const std::vector<std::size_t>& idx, const std::string& suffix) {
        ProjectData part;
        part.name = target + suffix;
        part.features = target_project->features.select_rows(idx);
        for (std::size_t i : idx) part.labels.push_back(target_project->labels[i]);
        return part;
    };
    bundle.target_train = take(train_idx, "#train");
    bundle.target_test = take(test_idx, "#test");
    return bundle;
}

DatasetBundle zscore_fit_apply(const DatasetBundle& bundle) {
    Matrix fit_rows = bundle.stacked_source_features();
    fit_rows.append_rows(bundle.target_train.features);

    const auto mu = column_means(fit_rows);
    auto var = column_variances(fit_rows);
    std::vector<double> sigma(var.size());
    for (std::size_t c = 0; c < var.size(); ++c) sigma[c] = std::sqrt(var[c]);

    auto apply = [&](Matrix m) {
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c)
                if (sigma[c] > 1e-12) m(r, c) = (m(r, c) - mu[c]) / sigma[c];
        return m;
    };

    DatasetBundle out = bundle;
    for (auto& p : out.source) p.features = apply(p.features);
    out.target_train.features = apply(out.target_train.features);
    out.target_test.features = apply(out.target_test.features);
    return out;
}

std::vector<ProjectData> synth_cpdp(std::size_t n_source_projects, std::size_t n_rows,
                                    std::size_t n_features, double shift, std::uint64_t seed) {
    // Class clouds are unit Gaussians whose centers sit `kSeparation` apart
    // along a random direction shared by all projects; each project is then
    // displaced by `shift` along its own random direction.
    constexpr double kSeparation = 3.0;

    rng::Stream dir_stream(rng::derive(seed, std::string_view{"synth"}, std::string_view{"dir"}));
    std::vector<double> sep_dir(n_features);
    double norm = 0.0;
    for (auto& v : sep_dir) {
        v = dir_stream.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : sep_dir) v /= norm;

    std::vector<ProjectData> projects;
    for (std::size_t p = 0; p <= n_source_projects; ++p) {
        const bool is_target = (p == n_source_projects);
        ProjectData proj;
        proj.name = is_target ? "target" : "src" + std::to_string(p + 1);

        rng::Stream stream(rng::derive(seed, std::string_view{"synth"}, std::string_view{"proj"}, p));

        // Class means drift independently so the class geometry itself moves
        // across projects; a shared translation would cancel out of any
        // between-class statistic.
        std::array<std::vector<double>, 2> offset{std::vector<double>(n_features, 0.0),
                                                  std::vector<double>(n_features, 0.0)};
        if (shift > 0.0) {
            for (auto& vec : offset) {
                double onorm = 0.0;
                for (auto& v : vec) {
                    v = stream.normal();
                    onorm += v * v;
                }
                onorm = std::sqrt(onorm);
                for (auto& v : vec) v = shift * v / onorm;
            }
        }

        const auto n_pos = static_cast<std::size_t>(
            std::llround(0.3 * static_cast<double>(n_rows)));
        std::vector<int> labels(n_rows, 0);
        std::fill(labels.begin(), labels.begin() + n_pos, 1);
        stream.shuffle(labels);

        proj.features = Matrix(n_rows, n_features);
        for (std::size_t r = 0; r < n_rows; ++r) {
            const int cls = labels[r];
            for (std::size_t c = 0; c < n_features; ++c) {
                const double center =
                    offset[cls][c] + (cls == 1 ? kSeparation * sep_dir[c] : 0.0);
                proj.features(r, c) = center + stream.normal();
            }
        }
        proj.labels = std::move(labels);
        projects.push_back(std::move(proj));
    }
    return projects;
}

}  // namespace cpdp::data
