#include "cpdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cpdp::metrics {

ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold) {
    if (labels.size() != scores.size() || labels.empty())
        throw LengthMismatchError("confusion: labels/scores size mismatch or empty");
    ConfusionCounts cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1) {
            pred ? ++cm.tp : ++cm.fn;
        } else {
            pred ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size() || labels.empty())
        throw LengthMismatchError("auc: labels/scores size mismatch or empty");
    const std::size_t n = labels.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClassError("auc: both classes required");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied score groups; rank sums of half-integers are exact
    // in double up to 2^52.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>((i + 1) + (j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    const double total = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    // Complement-symmetric rounding: auc(s) + auc(-s) == 1 exactly.
    if (2.0 * u <= total) return u / total;
    return 1.0 - (total - u) / total;
}

FlaggedAuc auc_or_flag(const std::vector<int>& labels, const std::vector<double>& scores) {
    try {
        return {auc(labels, scores), false};
    } catch (const SingleClassError&) {
        return {0.5, true};
    }
}

namespace {
double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

double accuracy(const ConfusionCounts& cm) {
    const double n = static_cast<double>(cm.tp + cm.fp + cm.fn + cm.tn);
    return ratio(static_cast<double>(cm.tp + cm.tn), n);
}

double recall(const ConfusionCounts& cm) {
    return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
}

double precision(const ConfusionCounts& cm) {
    return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
}

double f1(const ConfusionCounts& cm) {
    return ratio(2.0 * static_cast<double>(cm.tp),
                 static_cast<double>(2 * cm.tp + cm.fp + cm.fn));
}

double mcc(const ConfusionCounts& cm) {
    const double tp = static_cast<double>(cm.tp);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    const double tn = static_cast<double>(cm.tn);
    const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return ratio(tp * tn - fp * fn, den);
}

}  // namespace cpdp::metrics
