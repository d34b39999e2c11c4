#pragma once

#include <cstddef>
#include <vector>

#include "cpdp/errors.hpp"

namespace cpdp::metrics {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

/// Thresholded confusion counts; predicted positive iff score >= threshold.
ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold = 0.5);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties credited 0.5. Throws SingleClassError when a class is absent.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

/// AUC with the single-class convention applied: 0.5 and flagged=true.
struct FlaggedAuc {
    double value;
    bool single_class;
};
FlaggedAuc auc_or_flag(const std::vector<int>& labels, const std::vector<double>& scores);

// Scalar metrics; any zero denominator yields 0 by convention.
double accuracy(const ConfusionCounts& cm);
double recall(const ConfusionCounts& cm);
double precision(const ConfusionCounts& cm);
double f1(const ConfusionCounts& cm);
double mcc(const ConfusionCounts& cm);

}  // namespace cpdp::metrics
