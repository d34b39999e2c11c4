#include "cpdp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpdp::stats {

namespace {

std::vector<double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>((i + 1) + (j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    return rank;
}

// Enumerates every na-subset of the pooled ranks and counts rank sums at
// least as extreme as the observed one.
void enumerate_subsets(const std::vector<double>& ranks, std::size_t start, std::size_t left,
                       double sum, double mu, double observed_dev, long long& extreme,
                       long long& total) {
    if (left == 0) {
        ++total;
        if (std::fabs(sum - mu) >= observed_dev - 1e-12) ++extreme;
        return;
    }
    if (ranks.size() - start < left) return;
    enumerate_subsets(ranks, start + 1, left - 1, sum + ranks[start], mu, observed_dev, extreme,
                      total);
    enumerate_subsets(ranks, start + 1, left, sum, mu, observed_dev, extreme, total);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw TooFewSamplesError("wilcoxon_rank_sum needs >= 2 samples per side");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto rank = midranks(pooled);

    double w = 0.0;
    for (std::size_t i = 0; i < na; ++i) w += rank[i];
    const double mu = static_cast<double>(na) * static_cast<double>(n + 1) / 2.0;

    if (n <= 12) {
        std::vector<double> sorted_ranks(rank);
        long long extreme = 0, total = 0;
        enumerate_subsets(sorted_ranks, 0, na, 0.0, mu, std::fabs(w - mu), extreme, total);
        return static_cast<double>(extreme) / static_cast<double>(total);
    }

    // Normal approximation with tie correction.
    double tie_term = 0.0;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                       ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) return 1.0;
    const double z = (std::fabs(w - mu) - 0.5) / std::sqrt(var);
    return std::min(1.0, 2.0 * (1.0 - std_normal_cdf(std::max(z, 0.0))));
}

double a12(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw TooFewSamplesError("a12 needs non-empty samples");
    long long twice_numerator = 0;  // 2*#{a>b} + #{a=b}
    for (double x : a)
        for (double y : b) {
            if (x > y) twice_numerator += 2;
            else if (x == y) twice_numerator += 1;
        }
    const long long denom = 2LL * static_cast<long long>(a.size()) *
                            static_cast<long long>(b.size());
    // Round the smaller tail and mirror it so a12(a,b) + a12(b,a) == 1.
    const long long smaller = std::min(twice_numerator, denom - twice_numerator);
    const double tail = static_cast<double>(smaller) / static_cast<double>(denom);
    return twice_numerator <= denom - twice_numerator ? tail : 1.0 - tail;
}

std::string a12_bucket(double value) {
    const double dev = value >= 0.5 ? value : 1.0 - value;
    if (dev >= 0.71) return "large";
    if (dev >= 0.64) return "medium";
    if (dev >= 0.56) return "small";
    return "equal";
}

// ---------------------------------------------------------------------------
// Incomplete gamma (series + continued fraction), for the chi-square tail.

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 0.0;
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        // series representation
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // continued fraction for Q, then P = 1 - Q
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    return 1.0 - q;
}

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return 1.0 - gamma_p(df / 2.0, x / 2.0);
}

// ---------------------------------------------------------------------------
// Scott-Knott

namespace {

struct SkGroup {
    std::size_t index;  // original position
    double mean;
    double count;      // observations in the group
    double within_ss;  // sum of squared deviations from the group mean
};

// Splits [begin, end) of mean-sorted groups when the likelihood-ratio
// statistic clears the chi-square critical region; assigns ranks in order.
// sigma0^2 follows the classic estimator: treatment-mean scatter plus the
// pooled within-group mean square scaled by the replicate count.
void sk_recurse(std::vector<SkGroup>& groups, std::size_t begin, std::size_t end, double alpha,
                std::vector<int>& ranks, int& next_rank) {
    const std::size_t g = end - begin;
    if (g == 1) {
        ranks[groups[begin].index] = next_rank++;
        return;
    }

    double total = 0.0;
    double observations = 0.0;
    double within_ss = 0.0;
    double within_df = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        total += groups[i].mean;
        observations += groups[i].count;
        within_ss += groups[i].within_ss;
        within_df += groups[i].count - 1.0;
    }
    const double overall = total / static_cast<double>(g);
    const double replicates = observations / static_cast<double>(g);

    double mean_ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = groups[i].mean - overall;
        mean_ss += d * d;
    }

    double best_bss = -1.0;
    std::size_t best_cut = begin + 1;
    double prefix = 0.0;
    for (std::size_t cut = begin + 1; cut < end; ++cut) {
        prefix += groups[cut - 1].mean;
        const auto n1 = static_cast<double>(cut - begin);
        const auto n2 = static_cast<double>(end - cut);
        const double m1 = prefix / n1;
        const double m2 = (total - prefix) / n2;
        const double bss = n1 * (m1 - overall) * (m1 - overall) +
                           n2 * (m2 - overall) * (m2 - overall);
        if (bss > best_bss) {
            best_bss = bss;
            best_cut = cut;
        }
    }

    const double s2y = within_df > 0.0 ? within_ss / within_df : 0.0;
    const double sigma02 =
        (mean_ss + within_df * s2y / std::max(replicates, 1.0)) /
        (static_cast<double>(g) + within_df);
    bool split = false;
    if (sigma02 > 1e-300 && best_bss > 0.0) {
        const double pi_term = M_PI / (2.0 * (M_PI - 2.0));
        const double lambda = pi_term * best_bss / sigma02;
        const double df = static_cast<double>(g) / (M_PI - 2.0);
        split = chi_square_sf(lambda, df) < alpha;
    }

    if (!split) {
        const int rank = next_rank++;
        for (std::size_t i = begin; i < end; ++i) ranks[groups[i].index] = rank;
        return;
    }
    sk_recurse(groups, begin, best_cut, alpha, ranks, next_rank);
    sk_recurse(groups, best_cut, end, alpha, ranks, next_rank);
}

}  // namespace

std::vector<int> scott_knott(const std::vector<RunSample>& groups, double alpha) {
    if (groups.size() < 2) throw TooFewGroupsError("scott_knott needs >= 2 groups");
    std::vector<SkGroup> sorted;
    sorted.reserve(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].values.size() < 2)
            throw TooFewSamplesError("group '" + groups[i].method + "' needs >= 2 values");
        const double mean = std::accumulate(groups[i].values.begin(), groups[i].values.end(), 0.0) /
                            static_cast<double>(groups[i].values.size());
        double within_ss = 0.0;
        for (double v : groups[i].values) within_ss += (v - mean) * (v - mean);
        sorted.push_back({i, mean, static_cast<double>(groups[i].values.size()), within_ss});
    }
    // Rank 1 = best mean.
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SkGroup& a, const SkGroup& b) { return a.mean > b.mean; });

    std::vector<int> ranks(groups.size(), 0);
    int next_rank = 1;
    sk_recurse(sorted, 0, sorted.size(), alpha, ranks, next_rank);
    return ranks;
}

}  // namespace cpdp::stats
