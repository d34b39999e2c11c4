#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cpdp/param_space.hpp"

namespace cpdp::tpe {

struct Trial {
    learners::Configuration config;
    double loss = 1.0;
};

struct TrialHistory {
    std::vector<Trial> trials;
    int budget_used = 0;

    const Trial& best() const;
};

/// Evaluation-count budget with an optional wall-clock overlay (seconds <= 0
/// disables the clock).
struct LowerBudget {
    int max_evaluations = 1;
    double max_seconds = 0.0;
};

using Objective = std::function<double(const learners::Configuration&)>;

/// Uniform draw over a resolved space: integers inclusive, reals uniform,
/// categoricals uniform over choices.
learners::Configuration sample_uniform(const learners::ParamSpace& space, std::uint64_t seed);

/// Budgeted Tree-structured Parzen Estimator. Space-filling init of
/// max(5, ceil(budget/5)) points, then density-ratio acquisition over 24
/// candidates per iteration with a 0.25 good/bad quantile split.
TrialHistory tpe_optimize(const learners::ParamSpace& space, const Objective& objective,
                          const LowerBudget& budget, std::uint64_t seed);

}  // namespace cpdp::tpe
