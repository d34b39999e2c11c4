#pragma once

#include <string>
#include <vector>

#include "cpdp/errors.hpp"

namespace cpdp::stats {

struct RunSample {
    std::string method;
    std::vector<double> values;
};

/// Two-sided rank-sum test. Exact null enumeration of the statistic when the
/// combined size is <= 12, otherwise a normal approximation with tie and
/// continuity corrections. Throws TooFewSamplesError below 2 samples a side.
double wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b);

/// Vargha-Delaney effect size with tie credit; a12(a,b) + a12(b,a) == 1
/// exactly by construction.
double a12(const std::vector<double>& a, const std::vector<double>& b);

/// Paper-style buckets at 0.56 / 0.64 / 0.71: "equal", "small", "medium",
/// "large" (magnitude of the deviation from 0.5).
std::string a12_bucket(double value);

/// Scott-Knott clustering of group means: recursive maximal between-group
/// split accepted by the lambda/chi-square criterion at `alpha`. Returns one
/// rank per group (input order); rank 1 holds the best (highest) means.
std::vector<int> scott_knott(const std::vector<RunSample>& groups, double alpha);

/// Regularized lower incomplete gamma P(a, x); exposed for the test oracle.
double gamma_p(double a, double x);

/// Survival function of the chi-square distribution with (real) df.
double chi_square_sf(double x, double df);

}  // namespace cpdp::stats
