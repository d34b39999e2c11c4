#pragma once

// Independent test oracles. These deliberately re-derive results through the
// most literal formulation available (pair counting, peeling, enumeration) so
// they share no code with the implementations they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cpdp/dataspace.hpp"
#include "cpdp/ensemble.hpp"
#include "cpdp/matrix.hpp"
#include "cpdp/metrics.hpp"
#include "cpdp/rng.hpp"
#include "cpdp/tpe.hpp"

namespace oracles {

/// AUC by explicit O(n^2) pair counting with 0.5 tie credit.
inline double pair_count_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// Non-dominated sorting by repeated peeling with literal pairwise dominance.
inline std::vector<std::vector<std::size_t>> peel_nds(
    const std::vector<std::vector<double>>& points) {
    auto dom = [](const std::vector<double>& a, const std::vector<double>& b) {
        bool le = true, lt = false;
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k] > b[k]) le = false;
            if (a[k] < b[k]) lt = true;
        }
        return le && lt;
    };
    std::vector<std::size_t> alive(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) alive[i] = i;
    std::vector<std::vector<std::size_t>> fronts;
    while (!alive.empty()) {
        std::vector<std::size_t> front, rest;
        for (std::size_t i : alive) {
            bool dominated = false;
            for (std::size_t j : alive)
                if (j != i && dom(points[j], points[i])) {
                    dominated = true;
                    break;
                }
            (dominated ? rest : front).push_back(i);
        }
        fronts.push_back(front);
        alive = rest;
    }
    return fronts;
}

/// Nearest-centroid classifier fitted on pooled source rows; monotone score.
inline std::vector<double> nearest_centroid_scores(const cpdp::Matrix& train_x,
                                                   const std::vector<int>& train_y,
                                                   const cpdp::Matrix& test_x) {
    const std::size_t d = train_x.cols();
    std::vector<double> c0(d, 0.0), c1(d, 0.0);
    double n0 = 0, n1 = 0;
    for (std::size_t r = 0; r < train_x.rows(); ++r) {
        auto& c = train_y[r] == 1 ? c1 : c0;
        (train_y[r] == 1 ? n1 : n0) += 1.0;
        for (std::size_t j = 0; j < d; ++j) c[j] += train_x(r, j);
    }
    for (std::size_t j = 0; j < d; ++j) {
        c0[j] /= n0;
        c1[j] /= n1;
    }
    std::vector<double> scores(test_x.rows());
    for (std::size_t r = 0; r < test_x.rows(); ++r) {
        double d0 = 0, d1 = 0;
        for (std::size_t j = 0; j < d; ++j) {
            d0 += (test_x(r, j) - c0[j]) * (test_x(r, j) - c0[j]);
            d1 += (test_x(r, j) - c1[j]) * (test_x(r, j) - c1[j]);
        }
        scores[r] = d0 - d1;  // larger => closer to class 1
    }
    return scores;
}

/// Pure random search over the same space/budget, for the TPE comparison.
inline double random_search_best(const cpdp::learners::ParamSpace& space,
                                 const cpdp::tpe::Objective& objective, int budget,
                                 std::uint64_t seed) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < budget; ++i) {
        const auto config = cpdp::tpe::sample_uniform(
            space, cpdp::rng::derive(seed, std::string_view{"random_search"}, i));
        best = std::min(best, objective(config));
    }
    return best;
}

/// Synthetic CPDP bundle used across search tests.
inline cpdp::data::DatasetBundle synth_bundle(std::size_t sources, std::size_t rows,
                                              std::size_t features, double shift,
                                              std::uint64_t seed) {
    const auto projects = cpdp::data::synth_cpdp(sources, rows, features, shift, seed);
    auto bundle = cpdp::data::make_bundle(projects, "target", 0.9, seed);
    return cpdp::data::zscore_fit_apply(bundle);
}

/// Fixture where the sign rule on f0 flips with the cluster feature f1:
/// locality-aware learners (KNN, DT) can solve it, linear/centroid ones
/// cannot. Labels ~30% positive overall is not needed here; balance is 50%.
inline cpdp::data::DatasetBundle complementary_bundle(std::size_t rows_per_project,
                                                      std::uint64_t seed) {
    using cpdp::Matrix;
    cpdp::rng::Stream stream(cpdp::rng::derive(seed, std::string_view{"complementary"}));
    auto make_project = [&](const std::string& name) {
        cpdp::data::ProjectData project;
        project.name = name;
        project.features = Matrix(rows_per_project, 3);
        for (std::size_t r = 0; r < rows_per_project; ++r) {
            const bool cluster_b = r % 2 == 1;
            const int label = static_cast<int>(r % 4 < 2);
            const double f1 = cluster_b ? 3.0 : -3.0;
            const double sign = cluster_b ? -1.0 : 1.0;  // rule flips per cluster
            const double f0 = sign * (label == 1 ? 1.5 : -1.5) + 0.4 * stream.normal();
            project.features(r, 0) = f0;
            project.features(r, 1) = f1 + 0.4 * stream.normal();
            project.features(r, 2) = stream.normal();  // noise column
            project.labels.push_back(label);
        }
        return project;
    };
    std::vector<cpdp::data::ProjectData> projects{make_project("src1"), make_project("target")};
    auto bundle = cpdp::data::make_bundle(projects, "target", 0.8, seed);
    return cpdp::data::zscore_fit_apply(bundle);
}

/// Best AUC of n random (pipeline, uniform configuration) draws.
inline double random_pipeline_baseline(const cpdp::data::DatasetBundle& bundle, int n,
                                       std::uint64_t seed) {
    const auto& reg = cpdp::learners::portfolio();
    const auto sizes = reg.stage_sizes();
    const auto dims = cpdp::learners::bundle_dims(bundle);
    const auto loss = cpdp::ens::make_bundle_loss(bundle, seed);
    cpdp::rng::Stream stream(cpdp::rng::derive(seed, std::string_view{"baseline"}));
    double best_auc = 0.0;
    for (int i = 0; i < n; ++i) {
        cpdp::learners::PipelineSpec spec{static_cast<int>(stream.index(sizes[0])),
                                          static_cast<int>(stream.index(sizes[1])),
                                          {static_cast<int>(stream.index(sizes[2]))}};
        const auto space = cpdp::learners::pipeline_space(spec).resolve(dims);
        const auto config = cpdp::tpe::sample_uniform(space, stream.next());
        best_auc = std::max(best_auc, 1.0 - loss(spec, config));
    }
    return best_auc;
}

}  // namespace oracles
