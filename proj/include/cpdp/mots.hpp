#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cpdp/dataspace.hpp"
#include "cpdp/learners.hpp"
#include "cpdp/rng.hpp"
#include "cpdp/tpe.hpp"

namespace cpdp::mots {

using learners::Configuration;
using learners::PipelineSpec;

// ---------------------------------------------------------------------------
// Objectives

/// Minimized pair (1 - AUC, 1 - sqrt(AUC)) computed from the lower-level
/// loss. Throws OutOfRangeError when loss leaves [0, 1].
std::vector<double> objectives_from_loss(double lower_loss);

using ObjectiveMap = std::function<std::vector<double>(double)>;

/// Registry of objective maps; "default" is the pair above. The map is a run
/// parameter so genuinely conflicting objectives can replace it.
ObjectiveMap objective_map_by_id(const std::string& id);

/// Componentwise <= with at least one strict improvement.
bool dominates(const std::vector<double>& a, const std::vector<double>& b);

/// Fronts partition the indices; front k holds points non-dominated once
/// fronts < k are removed. Throws DimensionMismatchError on ragged input.
std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<std::vector<double>>& points);

/// NSGA-II crowding distance within one front; boundary points get +inf per
/// objective, zero-range objectives contribute nothing.
std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front);

// ---------------------------------------------------------------------------
// Search state

struct EvaluatedSolution {
    PipelineSpec pipeline;
    Configuration best_config;
    double lower_loss = 1.0;
    std::vector<double> objectives;
    tpe::TrialHistory history;

    std::size_t history_len() const { return history.trials.size(); }
};

struct CandidatePool {
    std::vector<EvaluatedSolution> members;
    std::size_t capacity = 6;
};

struct RunBudgets {
    int population = 10;      // N^u
    int pool_capacity = 6;    // N^c = N^e = 2 N^s
    int ensemble_size = 3;    // N^s
    long long phase1_evals = 200;  // B1, in lower-level evaluations
    long long phase2_evals = 25;   // B2
    tpe::LowerBudget lower{5, 0.0};  // B^L per pipeline evaluation
    double pc = 1.0;
    double eta_c = 30.0;
    double pm = -1.0;  // < 0 resolves to 1/n over the n_u = 3 genes
    double eta_m = 20.0;
    double phase1_seconds = 0.0;  // optional wall-clock overlays
    double phase2_seconds = 0.0;

    double mutation_probability() const { return pm < 0.0 ? 1.0 / 3.0 : pm; }
    void validate() const;
};

/// Lower-level evaluation budget for one phase; counts evaluations and
/// optionally enforces a wall clock.
class BudgetTracker {
public:
    BudgetTracker(long long max_evaluations, double max_seconds)
        : limit_(max_evaluations),
          seconds_(max_seconds),
          start_(std::chrono::steady_clock::now()) {}

    bool exhausted() const {
        if (spent_ >= limit_) return true;
        if (seconds_ > 0.0) {
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - start_;
            if (elapsed.count() >= seconds_) return true;
        }
        return false;
    }
    long long remaining() const { return limit_ - spent_; }
    long long spent() const { return spent_; }
    void charge(long long evals) { spent_ += evals; }

private:
    long long limit_;
    long long spent_ = 0;
    double seconds_;
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Variation operators (gene level exposed for property tests)

double sbx_combine(double xi, double xj, double eta_c, rng::Stream& stream);
double pm_perturb(double x, double lo, double hi, double eta_m, rng::Stream& stream);
long long uniform_gene(rng::Stream& stream, std::size_t stage_size);

/// SBX/PM offspring with the per-gene uniform-resample branch of the
/// variation formula; genes are stage indices, rounded and clamped.
std::vector<PipelineSpec> vary(const std::vector<EvaluatedSolution>& archive,
                               const RunBudgets& budgets, rng::Stream& stream);

/// All pipelines at Hamming distance one over the three stage registries.
std::vector<PipelineSpec> neighbors(const PipelineSpec& p);

// ---------------------------------------------------------------------------
// Upper-level search driver

/// Total lower-level loss of (pipeline, configuration); implementations must
/// map degenerate trainings to 1.0 rather than throw.
using LossFn = std::function<double(const PipelineSpec&, const Configuration&)>;

/// Tabu bookkeeping trace: evaluations and prunings in order, replayable by
/// tests to assert that no pipeline was evaluated while tabu-listed.
struct TabuEvent {
    enum class Kind { Evaluated, Pruned } kind;
    std::string key;
};

struct SearchState {
    std::vector<EvaluatedSolution> archive;  // P, trimmed to N^u at selections
    CandidatePool pool;                      // P^c
    std::set<PipelineSpec> tabu;             // l^t
    std::vector<EvaluatedSolution> log;      // every evaluation, in order
    std::map<std::string, int> occurrences;  // pipeline key -> evaluation count
    std::vector<TabuEvent> tabu_events;
};

class UpperSearch {
public:
    UpperSearch(learners::DataDims dims, RunBudgets budgets, std::uint64_t seed,
                ObjectiveMap objective_map, LossFn loss);

    /// Runs the lower-level search for `p` unless it is tabu-listed or the
    /// tracker is spent. Returns true when an evaluation actually happened.
    bool offer(const PipelineSpec& p, BudgetTracker& tracker);

    /// NDS + crowding selection of N^u archive members, then prunes the tabu
    /// list to pipelines still present in the archive.
    void environmental_selection();

    /// Algorithm: evaluate N^u random pipelines, then loop offspring
    /// generation and non-tabu neighbourhood expansion until B1 is spent.
    void phase1();

    SearchState& state() { return state_; }
    const SearchState& state() const { return state_; }
    const RunBudgets& budgets() const { return budgets_; }
    std::uint64_t seed() const { return seed_; }

    BudgetTracker make_phase1_tracker() const {
        return {budgets_.phase1_evals, budgets_.phase1_seconds};
    }
    BudgetTracker make_phase2_tracker() const {
        return {budgets_.phase2_evals, budgets_.phase2_seconds};
    }

private:
    learners::DataDims dims_;
    RunBudgets budgets_;
    std::uint64_t seed_;
    ObjectiveMap objective_map_;
    LossFn loss_;
    SearchState state_;
};

/// Convenience wrapper: construct, run phase 1, return the search object.
UpperSearch phase1_search(const data::DatasetBundle& bundle, const RunBudgets& budgets,
                          std::uint64_t seed, const ObjectiveMap& objective_map,
                          const LossFn& loss);

/// Stable (front, -crowding, insertion order) selection of `n` solutions.
std::vector<EvaluatedSolution> environmental_select(std::vector<EvaluatedSolution> solutions,
                                                    std::size_t n);

}  // namespace cpdp::mots
