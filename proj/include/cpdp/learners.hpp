#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cpdp/dataspace.hpp"
#include "cpdp/matrix.hpp"
#include "cpdp/param_space.hpp"

namespace cpdp::learners {

// ---------------------------------------------------------------------------
// Pipeline identity

/// Upper-level decision variable: stage indices into the portfolio
/// registries. `clfs` holds one id for a plain pipeline and several for a
/// stacking ensemble.
struct PipelineSpec {
    int fs = 0;
    int tl = 0;
    std::vector<int> clfs{0};

    bool is_ensemble() const { return clfs.size() > 1; }
    int clf() const { return clfs.front(); }

    bool operator==(const PipelineSpec&) const = default;
    auto operator<=>(const PipelineSpec&) const = default;
};

/// Canonical text form, e.g. "PCAmining|NNfilter|NB+KNN".
std::string pipeline_key(const PipelineSpec& spec);

// ---------------------------------------------------------------------------
// Portfolio registry

struct LearnerInfo {
    std::string id;
    ParamSpace space;
};

struct Portfolio {
    std::vector<LearnerInfo> feature_selectors;
    std::vector<LearnerInfo> transfer_learners;
    std::vector<LearnerInfo> classifiers;

    std::array<std::size_t, 3> stage_sizes() const {
        return {feature_selectors.size(), transfer_learners.size(), classifiers.size()};
    }

    /// Finds a learner in any stage. Throws UnknownLearnerError.
    const LearnerInfo& lookup(const std::string& id) const;
};

/// The implemented subset: fs {HF_var, PCAmining, None}, tl {NNfilter, None},
/// clf {NB, KNN, LR, DT, NCC}.
const Portfolio& portfolio();

/// Union of the pipeline's stage spaces with "<learner>." name prefixes.
/// Unresolved; call .resolve() against the bundle dimensions before sampling.
ParamSpace pipeline_space(const PipelineSpec& spec);

DataDims bundle_dims(const data::DatasetBundle& bundle);

// ---------------------------------------------------------------------------
// Fitted state

enum class Metric { Euclidean, Manhattan, Chebyshev, Minkowski3, MahalanobisDiag };

Metric metric_from_name(const std::string& name);

/// Distance between rows; `weights` only used by the diagonal-Mahalanobis
/// metric (inverse variances).
double metric_distance(std::span<const double> a, std::span<const double> b, Metric metric,
                       const std::vector<double>* weights);

struct FsState {
    enum class Kind { PassThrough, VarianceFilter, Pca } kind = Kind::PassThrough;
    std::vector<std::size_t> kept_columns;  // VarianceFilter
    std::vector<double> pca_mean;           // Pca
    Matrix pca_components;                  // Pca: d x k, columns are axes
};

Matrix apply_feature_transform(const FsState& fs, const Matrix& rows);

struct NbModel {
    enum class Type { Gauss, Multi, Comp } type = Type::Gauss;
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> mean;  // gauss
    std::array<std::vector<double>, 2> var;   // gauss
    std::vector<double> shift;                // multi/comp: per-column train minimum
    std::array<std::vector<double>, 2> weight;  // multi: log theta; comp: -log theta~
};

struct KnnModel {
    Matrix train_x;
    std::vector<int> train_y;
    long long n_neigh = 1;
    double p = 2.0;
};

struct LrModel {
    std::vector<double> w;
    double bias = 0.0;
    bool has_bias = false;
    std::vector<double> mu;  // internal standardization
    std::vector<double> sd;
};

struct DtNode {
    bool leaf = true;
    double score = 0.5;
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct DtModel {
    std::vector<DtNode> nodes;
};

struct NccModel {
    std::array<std::vector<double>, 2> centroid;
    Metric metric = Metric::Euclidean;
    std::vector<double> mah_weights;
};

using ClassifierModel = std::variant<NbModel, KnnModel, LrModel, DtModel, NccModel>;

/// Fit a single classifier; config keys are prefixed with "<id>.".
/// Throws DegenerateTrainingError when labels hold a single class.
ClassifierModel fit_classifier(int clf_index, const Configuration& config, const Matrix& x,
                               const std::vector<int>& y);

std::vector<double> classifier_scores(const ClassifierModel& model, const Matrix& x);

/// Feature selection fitted on source + target_train rows followed by the
/// transfer learner's source-row selection; yields the classifier training
/// set (selected sources first, then target_train).
struct FrontEnd {
    FsState fs;
    Matrix train_x;
    std::vector<int> train_y;
};

FrontEnd fit_front_end(int fs_index, int tl_index, const Configuration& config,
                       const data::DatasetBundle& bundle);

struct FittedPipeline {
    std::size_t input_features = 0;
    FsState fs;
    ClassifierModel clf;
    std::size_t training_rows = 0;
};

/// Full stage order fs -> tl -> clf. `seed` is part of the purity contract;
/// the implemented learners are all deterministic and do not consume it.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const Configuration& config,
                            const data::DatasetBundle& bundle, std::uint64_t seed);

/// P(label = 1) per row of raw (untransformed) features.
std::vector<double> predict_scores(const FittedPipeline& fitted, const Matrix& rows);

}  // namespace cpdp::learners
