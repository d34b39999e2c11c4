#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpdp/dataspace.hpp"
#include "cpdp/learners.hpp"
#include "cpdp/mots.hpp"

namespace cpdp::ens {

using learners::Configuration;
using learners::PipelineSpec;

// ---------------------------------------------------------------------------
// Pairwise diversity

/// Yule Q over correctness vectors: (N11*N00 - N01*N10)/(N11*N00 + N01*N10).
/// A zero denominator yields 0 (flagged through the checked variant).
double q_statistic(const std::vector<int>& correct_a, const std::vector<int>& correct_b);

struct QStat {
    double value = 0.0;
    bool degenerate = false;
};
QStat q_statistic_checked(const std::vector<int>& correct_a, const std::vector<int>& correct_b);

/// Verbatim algorithm reading (most-similar pair) or the conventional
/// diversity reading (|Q| closest to zero).
enum class QMode { MaxQ, MinAbsQ };

// ---------------------------------------------------------------------------
// Stacked models

/// Spec-level ensemble: shared front-end, ordered base classifiers, one
/// merged configuration (stage-prefixed parameter names).
struct EnsembleModel {
    int fs = 0;
    int tl = 0;
    std::vector<int> base_ids;
    Configuration config;

    PipelineSpec spec() const { return {fs, tl, base_ids}; }
};

struct FittedEnsemble {
    std::size_t input_features = 0;
    learners::FsState fs;
    std::vector<learners::ClassifierModel> bases;  // refit on the full training set
    learners::ClassifierModel meta;                // LR over base score columns
    bool bypass = false;                           // single base: meta unused
    std::size_t training_rows = 0;
};

/// Meta-feature matrix for stacking: column b holds base b's out-of-fold
/// scores over the training rows (stratified folds; no model scores its own
/// training fold). Degenerate fold fits contribute the neutral 0.5.
Matrix stacked_oof_features(const std::vector<int>& clf_ids, const Configuration& config,
                            const Matrix& train_x, const std::vector<int>& train_y, int n_folds);

/// Stacking fit: base meta-features are out-of-fold scores from a 5-fold
/// split of the classifier training set; bases are then refit on all rows.
FittedEnsemble fit_ensemble_pipeline(const PipelineSpec& spec, const Configuration& config,
                                     const data::DatasetBundle& bundle, std::uint64_t seed);

std::vector<double> ensemble_scores(const FittedEnsemble& model, const Matrix& rows);

/// Uniform handle over plain and stacked pipelines.
struct FittedModel {
    std::variant<learners::FittedPipeline, FittedEnsemble> model;
    std::vector<double> predict(const Matrix& rows) const;
};

FittedModel fit_any(const PipelineSpec& spec, const Configuration& config,
                    const data::DatasetBundle& bundle, std::uint64_t seed);

/// Lower-level loss 1 - AUC on target_test; degenerate trainings are 1.0 and
/// a single-class test set scores as AUC 0.5. The bundle must outlive the
/// returned function.
mots::LossFn make_bundle_loss(const data::DatasetBundle& bundle, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Validation scheme (target_train, pipeline-level 5-fold)

/// Deterministic stratified fold ids (label-sorted round-robin).
std::vector<int> stratified_folds(const std::vector<int>& labels, int n_folds);

/// Out-of-fold scores on target_train rows: each fold is scored by a model
/// fitted with that fold removed from target_train. Degenerate folds score
/// 0.5. target_test is never touched.
std::vector<double> oof_validation_scores(const PipelineSpec& spec, const Configuration& config,
                                          const data::DatasetBundle& bundle, int n_folds,
                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Candidate pool (greedy ensemble selection with replacement)

struct PoolCandidate {
    mots::EvaluatedSolution solution;
    std::vector<double> val_scores;  // on target_train, out-of-fold
    int picks = 0;
};

/// Pure greedy core: repeatedly add (with replacement) the candidate whose
/// inclusion maximizes the mean-score ensemble AUC; returns the distinct
/// picked candidates ranked by pick count, then solution AUC.
std::vector<PoolCandidate> greedy_pool_select_scored(std::vector<PoolCandidate> candidates,
                                                     const std::vector<int>& labels,
                                                     std::size_t capacity);

/// Computes validation scores for each solution, then delegates to the core.
std::vector<PoolCandidate> greedy_pool_select(const std::vector<mots::EvaluatedSolution>& evaluated,
                                              std::size_t capacity,
                                              const data::DatasetBundle& bundle,
                                              std::uint64_t seed);

mots::CandidatePool to_candidate_pool(const std::vector<PoolCandidate>& members,
                                      std::size_t capacity);

// ---------------------------------------------------------------------------
// Ensemble construction (phase 2)

/// Admission-order member selection: all candidates when count <= size,
/// otherwise top floor(size/2) by loss seeded, then repeated best-Q pairs
/// admitting the better performer.
std::vector<std::size_t> select_ensemble_members(const std::vector<double>& losses,
                                                 const std::vector<std::vector<int>>& correctness,
                                                 std::size_t ensemble_size, QMode mode);

struct EnsembleBuild {
    EnsembleModel model;
    std::vector<int> candidate_ids;       // distinct classifiers considered
    std::vector<double> candidate_losses;  // tuned loss per candidate (f^e)
};

/// Re-tunes every distinct candidate classifier under the shared front-end
/// (each run charged to the tracker), then selects and assembles the stack.
/// Returns nothing when the budget dies before any candidate evaluation.
std::optional<EnsembleBuild> construct_ensemble(
    const std::vector<int>& candidate_clf_ids, int fs, int tl, std::size_t ensemble_size,
    QMode mode, const data::DatasetBundle& bundle, const mots::RunBudgets& budgets,
    mots::BudgetTracker& tracker, const mots::LossFn& loss, std::uint64_t seed,
    long long& reval_counter);

/// Index of the column whose removal least reduces the meta-learner's
/// validation AUC (ties: worse standalone loss, then lowest index).
std::size_t least_contributing_index(const Matrix& val_features, const std::vector<int>& labels,
                                     const std::vector<double>& standalone_loss);

/// Removes the member whose leave-one-out validation-AUC drop is smallest
/// (ties: worse standalone loss, then lowest index). Throws
/// SingletonEnsembleError for |base| < 2.
EnsembleModel prune_least_contributing(const EnsembleModel& model,
                                       const data::DatasetBundle& bundle, std::uint64_t seed);

/// Phase 2: per pool member, cycle construct -> re-tune -> evaluate -> prune
/// until the candidate set is a singleton or B2 is exhausted.
void phase2_loop(mots::UpperSearch& search, const std::vector<PoolCandidate>& pool,
                 const data::DatasetBundle& bundle, QMode mode);

}  // namespace cpdp::ens
