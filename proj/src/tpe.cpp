#include "cpdp/tpe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "cpdp/rng.hpp"

namespace cpdp::tpe {

using learners::Configuration;
using learners::ParamKind;
using learners::ParamSpace;
using learners::ParamSpec;

namespace {

constexpr double kGamma = 0.25;
constexpr int kCandidates = 24;

double clamp_round_int(double v, const ParamSpec& spec) {
    const double lo = spec.lo.value, hi = spec.hi.value;
    return std::clamp(std::round(v), lo, hi);
}

void require_resolved(const ParamSpace& space) {
    if (!space.resolved) throw BadConfigurationError("parameter space is not resolved");
}

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mixture of truncated Gaussians centered on the set's values.
double parzen_density(double x, const std::vector<double>& centers, double bw, double lo,
                      double hi) {
    double acc = 0.0;
    for (double mu : centers) {
        const double mass = std_normal_cdf((hi - mu) / bw) - std_normal_cdf((lo - mu) / bw);
        if (mass <= 1e-300) continue;
        acc += std_normal_pdf((x - mu) / bw) / (bw * mass);
    }
    return std::max(acc / static_cast<double>(centers.size()), 1e-300);
}

double truncated_normal_draw(rng::Stream& stream, double mu, double bw, double lo, double hi) {
    for (int tries = 0; tries < 100; ++tries) {
        const double v = mu + bw * stream.normal();
        if (v >= lo && v <= hi) return v;
    }
    return std::clamp(mu, lo, hi);
}

}  // namespace

const Trial& TrialHistory::best() const {
    const auto it = std::min_element(trials.begin(), trials.end(),
                                     [](const Trial& a, const Trial& b) { return a.loss < b.loss; });
    return *it;
}

Configuration sample_uniform(const ParamSpace& space, std::uint64_t seed) {
    require_resolved(space);
    rng::Stream stream(seed);
    Configuration config;
    for (const auto& spec : space.specs) {
        switch (spec.kind) {
            case ParamKind::Integer: {
                const auto lo = static_cast<long long>(std::llround(spec.lo.value));
                const auto hi = static_cast<long long>(std::llround(spec.hi.value));
                config.values[spec.name] = stream.uniform_int(lo, hi);
                break;
            }
            case ParamKind::Real:
                config.values[spec.name] = stream.uniform(spec.lo.value, spec.hi.value);
                break;
            case ParamKind::Categorical:
                config.values[spec.name] = spec.choices[stream.index(spec.choices.size())];
                break;
        }
    }
    return config;
}

TrialHistory tpe_optimize(const ParamSpace& space, const Objective& objective,
                          const LowerBudget& budget, std::uint64_t seed) {
    require_resolved(space);
    if (budget.max_evaluations < 1) throw BudgetZeroError("lower-level budget must be >= 1");

    const auto start = std::chrono::steady_clock::now();
    const auto clock_ok = [&] {
        if (budget.max_seconds <= 0.0) return true;
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        return elapsed.count() < budget.max_seconds;
    };

    rng::Stream stream(rng::derive(seed, std::string_view{"tpe"}));
    const std::size_t n_dims = space.specs.size();
    TrialHistory history;

    auto evaluate = [&](Configuration config) {
        const double loss = objective(config);
        history.trials.push_back({std::move(config), loss});
        ++history.budget_used;
    };

    // Phase A: stratified uniform per dimension with random pairing
    // (latin-hypercube style); only the first `budget` points are evaluated.
    const int n_init = std::max(5, (budget.max_evaluations + 4) / 5);
    std::vector<std::vector<std::size_t>> strata(n_dims, std::vector<std::size_t>(n_init));
    for (std::size_t d = 0; d < n_dims; ++d) {
        std::iota(strata[d].begin(), strata[d].end(), 0);
        stream.shuffle(strata[d]);
    }
    for (int i = 0; i < std::min(n_init, budget.max_evaluations) && clock_ok(); ++i) {
        Configuration config;
        for (std::size_t d = 0; d < n_dims; ++d) {
            const auto& spec = space.specs[d];
            const double unit =
                (static_cast<double>(strata[d][i]) + stream.uniform()) / static_cast<double>(n_init);
            switch (spec.kind) {
                case ParamKind::Real:
                    config.values[spec.name] = spec.lo.value + unit * (spec.hi.value - spec.lo.value);
                    break;
                case ParamKind::Integer:
                    config.values[spec.name] = static_cast<long long>(clamp_round_int(
                        spec.lo.value + unit * (spec.hi.value - spec.lo.value), spec));
                    break;
                case ParamKind::Categorical: {
                    auto idx = static_cast<std::size_t>(unit * static_cast<double>(spec.choices.size()));
                    idx = std::min(idx, spec.choices.size() - 1);
                    config.values[spec.name] = spec.choices[idx];
                    break;
                }
            }
        }
        evaluate(std::move(config));
    }

    // Phase B: density-ratio acquisition.
    while (history.budget_used < budget.max_evaluations && clock_ok()) {
        const std::size_t n = history.trials.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return history.trials[a].loss < history.trials[b].loss;
        });
        const std::size_t n_good = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::ceil(kGamma * static_cast<double>(n))));
        std::vector<std::size_t> good(order.begin(), order.begin() + std::min(n_good, n));
        std::vector<std::size_t> bad(order.begin() + std::min(n_good, n), order.end());
        if (bad.empty()) bad = good;

        // Per-dimension density descriptions.
        struct DimDensity {
            std::vector<double> good_vals, bad_vals;  // numeric
            double bw = 1.0;
            std::vector<double> good_prob, bad_prob;  // categorical
        };
        std::vector<DimDensity> dims(n_dims);
        for (std::size_t d = 0; d < n_dims; ++d) {
            const auto& spec = space.specs[d];
            auto& dim = dims[d];
            if (spec.kind == ParamKind::Categorical) {
                const std::size_t c = spec.choices.size();
                dim.good_prob.assign(c, 1.0);
                dim.bad_prob.assign(c, 1.0);
                auto accumulate = [&](const std::vector<std::size_t>& set, std::vector<double>& prob) {
                    for (std::size_t t : set) {
                        const auto& v = history.trials[t].config.get_choice(spec.name);
                        const auto it = std::find(spec.choices.begin(), spec.choices.end(), v);
                        prob[static_cast<std::size_t>(it - spec.choices.begin())] += 1.0;
                    }
                    const double total = std::accumulate(prob.begin(), prob.end(), 0.0);
                    for (auto& p : prob) p /= total;
                };
                accumulate(good, dim.good_prob);
                accumulate(bad, dim.bad_prob);
            } else {
                for (std::size_t t : good)
                    dim.good_vals.push_back(history.trials[t].config.get_real(spec.name));
                for (std::size_t t : bad)
                    dim.bad_vals.push_back(history.trials[t].config.get_real(spec.name));
                const double range = spec.hi.value - spec.lo.value;
                dim.bw = std::max(range / static_cast<double>(good.size()), range / 50.0);
                if (dim.bw <= 0.0) dim.bw = 1.0;  // degenerate single-point dimension
            }
        }

        // Draw candidates from l(.), keep the best l/g ratio.
        Configuration best_candidate;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int cand = 0; cand < kCandidates; ++cand) {
            Configuration config;
            double score = 0.0;
            for (std::size_t d = 0; d < n_dims; ++d) {
                const auto& spec = space.specs[d];
                const auto& dim = dims[d];
                if (spec.kind == ParamKind::Categorical) {
                    const double u = stream.uniform();
                    double cum = 0.0;
                    std::size_t idx = dim.good_prob.size() - 1;
                    for (std::size_t c = 0; c < dim.good_prob.size(); ++c) {
                        cum += dim.good_prob[c];
                        if (u < cum) {
                            idx = c;
                            break;
                        }
                    }
                    config.values[spec.name] = spec.choices[idx];
                    score += std::log(dim.good_prob[idx]) - std::log(dim.bad_prob[idx]);
                } else {
                    const double lo = spec.lo.value, hi = spec.hi.value;
                    double v;
                    if (hi <= lo) {
                        v = lo;
                    } else {
                        const double mu = dim.good_vals[stream.index(dim.good_vals.size())];
                        v = truncated_normal_draw(stream, mu, dim.bw, lo, hi);
                        if (spec.kind == ParamKind::Integer) v = clamp_round_int(v, spec);
                        score += std::log(parzen_density(v, dim.good_vals, dim.bw, lo, hi)) -
                                 std::log(parzen_density(v, dim.bad_vals, dim.bw, lo, hi));
                    }
                    if (spec.kind == ParamKind::Integer)
                        config.values[spec.name] = static_cast<long long>(v);
                    else
                        config.values[spec.name] = v;
                }
            }
            if (score > best_score) {
                best_score = score;
                best_candidate = std::move(config);
            }
        }
        evaluate(std::move(best_candidate));
    }
    return history;
}

}  // namespace cpdp::tpe
