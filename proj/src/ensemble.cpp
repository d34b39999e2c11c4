#include "cpdp/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cpdp/metrics.hpp"

namespace cpdp::ens {

using data::DatasetBundle;
using cpdp::Matrix;
using learners::ClassifierModel;

double q_statistic(const std::vector<int>& correct_a, const std::vector<int>& correct_b) {
    return q_statistic_checked(correct_a, correct_b).value;
}

QStat q_statistic_checked(const std::vector<int>& correct_a, const std::vector<int>& correct_b) {
    if (correct_a.size() != correct_b.size() || correct_a.empty())
        throw LengthMismatchError("q_statistic: correctness vectors differ in length");
    double n11 = 0, n00 = 0, n01 = 0, n10 = 0;
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        const bool a = correct_a[i] != 0, b = correct_b[i] != 0;
        if (a && b) ++n11;
        else if (!a && !b) ++n00;
        else if (!a && b) ++n01;
        else ++n10;
    }
    const double den = n11 * n00 + n01 * n10;
    if (den == 0.0) return {0.0, true};
    return {(n11 * n00 - n01 * n10) / den, false};
}

// ---------------------------------------------------------------------------
// Stacking

namespace {

Configuration meta_lr_config() {
    Configuration cfg;
    cfg.values["LR.penalty"] = std::string("L2");
    cfg.values["LR.fit_int"] = std::string("true");
    cfg.values["LR.tol"] = 1e-6;
    return cfg;
}

int classifier_index(const std::string& id) {
    const auto& reg = learners::portfolio().classifiers;
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (reg[i].id == id) return static_cast<int>(i);
    throw UnknownLearnerError("no classifier named '" + id + "'");
}

int lr_index() {
    static const int idx = classifier_index("LR");
    return idx;
}

}  // namespace

std::vector<int> stratified_folds(const std::vector<int>& labels, int n_folds) {
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    std::vector<int> fold(labels.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(n_folds));
    return fold;
}

Matrix stacked_oof_features(const std::vector<int>& clf_ids, const Configuration& config,
                            const Matrix& train_x, const std::vector<int>& train_y, int n_folds) {
    const std::size_t n = train_x.rows();
    const std::size_t k = clf_ids.size();
    const auto folds = stratified_folds(train_y, n_folds);
    Matrix meta_features(n, k, 0.5);
    for (int f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> fit_rows, holdout;
        for (std::size_t r = 0; r < n; ++r)
            (folds[r] == f ? holdout : fit_rows).push_back(r);
        if (holdout.empty() || fit_rows.empty()) continue;
        const Matrix fit_x = train_x.select_rows(fit_rows);
        const Matrix hold_x = train_x.select_rows(holdout);
        std::vector<int> fit_y(fit_rows.size());
        for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_y[i] = train_y[fit_rows[i]];
        for (std::size_t b = 0; b < k; ++b) {
            std::vector<double> scores;
            try {
                const auto base = learners::fit_classifier(clf_ids[b], config, fit_x, fit_y);
                scores = learners::classifier_scores(base, hold_x);
            } catch (const Error&) {
                scores.assign(holdout.size(), 0.5);
            }
            for (std::size_t i = 0; i < holdout.size(); ++i)
                meta_features(holdout[i], b) = scores[i];
        }
    }
    return meta_features;
}

FittedEnsemble fit_ensemble_pipeline(const PipelineSpec& spec, const Configuration& config,
                                     const DatasetBundle& bundle, std::uint64_t /*seed*/) {
    constexpr int kFolds = 5;
    learners::FrontEnd fe = learners::fit_front_end(spec.fs, spec.tl, config, bundle);

    FittedEnsemble model;
    model.input_features = bundle.feature_count;
    model.fs = fe.fs;
    model.training_rows = fe.train_x.rows();
    model.bypass = spec.clfs.size() == 1;

    if (!model.bypass) {
        const Matrix meta_features =
            stacked_oof_features(spec.clfs, config, fe.train_x, fe.train_y, kFolds);
        model.meta = learners::fit_classifier(lr_index(), meta_lr_config(), meta_features,
                                              fe.train_y);
    }

    for (int clf : spec.clfs)
        model.bases.push_back(learners::fit_classifier(clf, config, fe.train_x, fe.train_y));
    return model;
}

std::vector<double> ensemble_scores(const FittedEnsemble& model, const Matrix& rows) {
    if (rows.cols() != model.input_features)
        throw ShapeMismatchError("ensemble_scores: feature count mismatch");
    const Matrix x = learners::apply_feature_transform(model.fs, rows);
    if (model.bypass) return learners::classifier_scores(model.bases.front(), x);

    Matrix base_scores(rows.rows(), model.bases.size());
    for (std::size_t b = 0; b < model.bases.size(); ++b) {
        const auto scores = learners::classifier_scores(model.bases[b], x);
        for (std::size_t r = 0; r < rows.rows(); ++r) base_scores(r, b) = scores[r];
    }
    return learners::classifier_scores(model.meta, base_scores);
}

std::vector<double> FittedModel::predict(const Matrix& rows) const {
    if (const auto* single = std::get_if<learners::FittedPipeline>(&model))
        return learners::predict_scores(*single, rows);
    return ensemble_scores(std::get<FittedEnsemble>(model), rows);
}

FittedModel fit_any(const PipelineSpec& spec, const Configuration& config,
                    const DatasetBundle& bundle, std::uint64_t seed) {
    if (spec.is_ensemble()) return {fit_ensemble_pipeline(spec, config, bundle, seed)};
    return {learners::fit_pipeline(spec, config, bundle, seed)};
}

mots::LossFn make_bundle_loss(const DatasetBundle& bundle, std::uint64_t seed) {
    return [&bundle, seed](const PipelineSpec& spec, const Configuration& config) -> double {
        try {
            const auto model = fit_any(spec, config, bundle, seed);
            const auto scores = model.predict(bundle.target_test.features);
            return 1.0 - metrics::auc_or_flag(bundle.target_test.labels, scores).value;
        } catch (const Error&) {
            return 1.0;
        }
    };
}

// ---------------------------------------------------------------------------
// Validation scores

std::vector<double> oof_validation_scores(const PipelineSpec& spec, const Configuration& config,
                                          const DatasetBundle& bundle, int n_folds,
                                          std::uint64_t seed) {
    const auto& train = bundle.target_train;
    const std::size_t n = train.features.rows();
    const auto folds = stratified_folds(train.labels, n_folds);

    std::vector<double> scores(n, 0.5);
    for (int f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> fit_rows, holdout;
        for (std::size_t r = 0; r < n; ++r)
            (folds[r] == f ? holdout : fit_rows).push_back(r);
        if (holdout.empty()) continue;

        DatasetBundle fold_bundle;
        fold_bundle.feature_count = bundle.feature_count;
        fold_bundle.source = bundle.source;
        fold_bundle.target_train.name = train.name;
        fold_bundle.target_train.features = train.features.select_rows(fit_rows);
        for (std::size_t r : fit_rows) fold_bundle.target_train.labels.push_back(train.labels[r]);
        fold_bundle.target_test = fold_bundle.target_train;  // unused by fitting

        try {
            const auto model = fit_any(spec, config, fold_bundle, seed);
            const auto fold_scores = model.predict(train.features.select_rows(holdout));
            for (std::size_t i = 0; i < holdout.size(); ++i) scores[holdout[i]] = fold_scores[i];
        } catch (const Error&) {
            // degenerate fold: keep the neutral 0.5
        }
    }
    return scores;
}

// ---------------------------------------------------------------------------
// Candidate pool

std::vector<PoolCandidate> greedy_pool_select_scored(std::vector<PoolCandidate> candidates,
                                                     const std::vector<int>& labels,
                                                     std::size_t capacity) {
    if (candidates.empty()) return {};
    const std::size_t n = labels.size();
    std::vector<double> running(n, 0.0);
    std::size_t picked = 0;

    for (std::size_t round = 0; round < capacity; ++round) {
        std::size_t best = 0;
        double best_auc = -1.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::vector<double> mean(n);
            for (std::size_t i = 0; i < n; ++i)
                mean[i] = (running[i] + candidates[c].val_scores[i]) /
                          static_cast<double>(picked + 1);
            const double auc = metrics::auc_or_flag(labels, mean).value;
            if (auc > best_auc) {
                best_auc = auc;
                best = c;
            }
        }
        ++candidates[best].picks;
        ++picked;
        for (std::size_t i = 0; i < n; ++i) running[i] += candidates[best].val_scores[i];
    }

    std::vector<PoolCandidate> pool;
    for (auto& c : candidates)
        if (c.picks > 0) pool.push_back(std::move(c));
    std::stable_sort(pool.begin(), pool.end(), [](const PoolCandidate& a, const PoolCandidate& b) {
        if (a.picks != b.picks) return a.picks > b.picks;
        return a.solution.lower_loss < b.solution.lower_loss;
    });
    return pool;
}

std::vector<PoolCandidate> greedy_pool_select(const std::vector<mots::EvaluatedSolution>& evaluated,
                                              std::size_t capacity, const DatasetBundle& bundle,
                                              std::uint64_t seed) {
    std::vector<PoolCandidate> candidates;
    std::set<std::string> seen;
    for (const auto& sol : evaluated) {
        const std::string identity =
            learners::pipeline_key(sol.pipeline) + "@" +
            learners::to_string(sol.best_config,
                                learners::pipeline_space(sol.pipeline)
                                    .resolve(learners::bundle_dims(bundle)));
        if (!seen.insert(identity).second) continue;
        PoolCandidate c;
        c.val_scores = oof_validation_scores(sol.pipeline, sol.best_config, bundle, 5, seed);
        c.solution = sol;
        candidates.push_back(std::move(c));
    }
    return greedy_pool_select_scored(std::move(candidates), bundle.target_train.labels, capacity);
}

mots::CandidatePool to_candidate_pool(const std::vector<PoolCandidate>& members,
                                      std::size_t capacity) {
    mots::CandidatePool pool;
    pool.capacity = capacity;
    for (const auto& m : members) pool.members.push_back(m.solution);
    return pool;
}

// ---------------------------------------------------------------------------
// Construction

std::vector<std::size_t> select_ensemble_members(const std::vector<double>& losses,
                                                 const std::vector<std::vector<int>>& correctness,
                                                 std::size_t ensemble_size, QMode mode) {
    const std::size_t k = losses.size();
    std::vector<std::size_t> admitted;
    if (k <= ensemble_size) {
        admitted.resize(k);
        std::iota(admitted.begin(), admitted.end(), 0);
        return admitted;
    }

    std::vector<std::size_t> by_loss(k);
    std::iota(by_loss.begin(), by_loss.end(), 0);
    std::stable_sort(by_loss.begin(), by_loss.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });

    const std::size_t n_seed = ensemble_size / 2;
    std::vector<bool> in(k, false);
    for (std::size_t i = 0; i < n_seed; ++i) {
        admitted.push_back(by_loss[i]);
        in[by_loss[i]] = true;
    }

    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < k; ++i)
        if (!in[i]) remaining.push_back(i);

    while (admitted.size() < ensemble_size && !remaining.empty()) {
        if (remaining.size() == 1) {
            admitted.push_back(remaining.front());
            remaining.clear();
            break;
        }
        double best_q = mode == QMode::MaxQ ? -std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::infinity();
        std::pair<std::size_t, std::size_t> best_pair{remaining[0], remaining[1]};
        for (std::size_t i = 0; i < remaining.size(); ++i)
            for (std::size_t j = i + 1; j < remaining.size(); ++j) {
                const double q = q_statistic(correctness[remaining[i]], correctness[remaining[j]]);
                const bool better = mode == QMode::MaxQ ? q > best_q : std::fabs(q) < std::fabs(best_q);
                if (better) {
                    best_q = q;
                    best_pair = {remaining[i], remaining[j]};
                }
            }
        const auto [a, b] = best_pair;
        // Admit the better performer of the chosen pair.
        std::size_t winner = losses[a] < losses[b]   ? a
                             : losses[b] < losses[a] ? b
                                                     : std::min(a, b);
        admitted.push_back(winner);
        remaining.erase(std::find(remaining.begin(), remaining.end(), winner));
    }
    return admitted;
}

std::optional<EnsembleBuild> construct_ensemble(
    const std::vector<int>& candidate_clf_ids, int fs, int tl, std::size_t ensemble_size,
    QMode mode, const DatasetBundle& bundle, const mots::RunBudgets& budgets,
    mots::BudgetTracker& tracker, const mots::LossFn& loss, std::uint64_t seed,
    long long& reval_counter) {
    // Distinct classifiers in first-seen order.
    std::vector<int> distinct;
    for (int id : candidate_clf_ids)
        if (std::find(distinct.begin(), distinct.end(), id) == distinct.end())
            distinct.push_back(id);
    if (distinct.empty()) return std::nullopt;

    const auto dims = learners::bundle_dims(bundle);
    std::vector<double> losses;
    std::vector<Configuration> configs;
    std::vector<std::vector<int>> correctness;
    std::vector<int> evaluated_ids;

    for (int clf : distinct) {
        if (tracker.exhausted()) break;
        const PipelineSpec member{fs, tl, {clf}};
        tpe::LowerBudget lower = budgets.lower;
        lower.max_evaluations = static_cast<int>(
            std::min<long long>(lower.max_evaluations, tracker.remaining()));
        const auto objective = [&](const Configuration& config) -> double {
            try {
                return loss(member, config);
            } catch (const Error&) {
                return 1.0;
            }
        };
        const std::uint64_t run_seed =
            rng::derive(seed, std::string_view{"phase2-reval"}, reval_counter++);
        const auto history = tpe::tpe_optimize(learners::pipeline_space(member).resolve(dims),
                                               objective, lower, run_seed);
        tracker.charge(history.budget_used);

        losses.push_back(history.best().loss);
        configs.push_back(history.best().config);
        evaluated_ids.push_back(clf);

        const auto val = oof_validation_scores(member, history.best().config, bundle, 5, seed);
        std::vector<int> correct(val.size());
        for (std::size_t i = 0; i < val.size(); ++i)
            correct[i] = (val[i] >= 0.5 ? 1 : 0) == bundle.target_train.labels[i] ? 1 : 0;
        correctness.push_back(std::move(correct));
    }
    if (evaluated_ids.empty()) return std::nullopt;

    const auto admitted = select_ensemble_members(losses, correctness, ensemble_size, mode);

    EnsembleBuild build;
    build.candidate_ids = evaluated_ids;
    build.candidate_losses = losses;
    build.model.fs = fs;
    build.model.tl = tl;

    // Front-end parameters follow the best performing candidate; each base
    // keeps its own tuned parameters. Phase 2 re-tunes the union space anyway.
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(losses.begin(), losses.end()) - losses.begin());
    const auto& reg = learners::portfolio();
    const std::string fs_prefix = reg.feature_selectors.at(fs).id + ".";
    const std::string tl_prefix = reg.transfer_learners.at(tl).id + ".";
    for (const auto& [name, value] : configs[best].values)
        if (name.starts_with(fs_prefix) || name.starts_with(tl_prefix))
            build.model.config.values[name] = value;
    for (std::size_t pos : admitted) {
        build.model.base_ids.push_back(evaluated_ids[pos]);
        const std::string prefix = reg.classifiers.at(evaluated_ids[pos]).id + ".";
        for (const auto& [name, value] : configs[pos].values)
            if (name.starts_with(prefix)) build.model.config.values[name] = value;
    }
    return build;
}

namespace {

double in_sample_meta_auc(const Matrix& features, const std::vector<int>& labels) {
    try {
        const auto meta = learners::fit_classifier(lr_index(), meta_lr_config(), features, labels);
        return metrics::auc_or_flag(labels, learners::classifier_scores(meta, features)).value;
    } catch (const Error&) {
        return 0.5;
    }
}

}  // namespace

std::size_t least_contributing_index(const Matrix& val_features, const std::vector<int>& labels,
                                     const std::vector<double>& standalone_loss) {
    const std::size_t k = val_features.cols();
    const double full_auc = in_sample_meta_auc(val_features, labels);
    std::size_t worst = 0;
    double worst_contribution = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < k; ++b) {
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < k; ++j)
            if (j != b) keep.push_back(j);
        const double without = in_sample_meta_auc(val_features.select_cols(keep), labels);
        const double contribution = full_auc - without;
        const bool tie = std::fabs(contribution - worst_contribution) <= 1e-12;
        if ((!tie && contribution < worst_contribution) ||
            (tie && standalone_loss[b] > standalone_loss[worst] + 1e-15)) {
            worst_contribution = std::min(contribution, worst_contribution);
            worst = b;
        }
    }
    return worst;
}

EnsembleModel prune_least_contributing(const EnsembleModel& model, const DatasetBundle& bundle,
                                       std::uint64_t seed) {
    const std::size_t k = model.base_ids.size();
    if (k < 2) throw SingletonEnsembleError("cannot prune an ensemble with fewer than 2 members");

    const auto& labels = bundle.target_train.labels;
    const std::size_t n = labels.size();

    Matrix features(n, k);
    std::vector<double> standalone_loss(k);
    for (std::size_t b = 0; b < k; ++b) {
        const PipelineSpec member{model.fs, model.tl, {model.base_ids[b]}};
        const auto val = oof_validation_scores(member, model.config, bundle, 5, seed);
        for (std::size_t r = 0; r < n; ++r) features(r, b) = val[r];
        standalone_loss[b] = 1.0 - metrics::auc_or_flag(labels, val).value;
    }

    const std::size_t worst = least_contributing_index(features, labels, standalone_loss);
    EnsembleModel pruned = model;
    pruned.base_ids.erase(pruned.base_ids.begin() + static_cast<std::ptrdiff_t>(worst));
    return pruned;
}

void phase2_loop(mots::UpperSearch& search, const std::vector<PoolCandidate>& pool,
                 const DatasetBundle& bundle, QMode mode) {
    const auto& budgets = search.budgets();
    if (budgets.phase2_evals <= 0 || pool.empty()) return;
    mots::BudgetTracker tracker = search.make_phase2_tracker();
    const mots::LossFn loss = make_bundle_loss(bundle, search.seed());
    long long reval_counter = 0;

    for (const auto& member : pool) {
        if (tracker.exhausted()) break;
        const int fs = member.solution.pipeline.fs;
        const int tl = member.solution.pipeline.tl;

        // P^e starts as the whole pool's classifier multiset and shrinks by
        // one classifier id per cycle.
        std::vector<int> candidate_ids;
        for (const auto& pc : pool)
            for (int id : pc.solution.pipeline.clfs) candidate_ids.push_back(id);

        while (!tracker.exhausted()) {
            auto build = construct_ensemble(candidate_ids, fs, tl,
                                            static_cast<std::size_t>(budgets.ensemble_size), mode,
                                            bundle, budgets, tracker, loss, search.seed(),
                                            reval_counter);
            if (!build) break;

            search.offer(build->model.spec(), tracker);
            search.environmental_selection();

            std::vector<int> distinct;
            for (int id : candidate_ids)
                if (std::find(distinct.begin(), distinct.end(), id) == distinct.end())
                    distinct.push_back(id);
            if (distinct.size() <= 1) break;

            // Drop one classifier: an unselected candidate with the worst
            // re-tuned loss when one exists, otherwise the least-contributing
            // stack member.
            int remove_id = -1;
            double worst_loss = -1.0;
            for (std::size_t i = 0; i < build->candidate_ids.size(); ++i) {
                const int id = build->candidate_ids[i];
                const bool selected =
                    std::find(build->model.base_ids.begin(), build->model.base_ids.end(), id) !=
                    build->model.base_ids.end();
                if (!selected && build->candidate_losses[i] > worst_loss) {
                    worst_loss = build->candidate_losses[i];
                    remove_id = id;
                }
            }
            if (remove_id < 0) {
                if (build->model.base_ids.size() < 2) break;
                const auto pruned = prune_least_contributing(build->model, bundle, search.seed());
                for (int id : build->model.base_ids)
                    if (std::find(pruned.base_ids.begin(), pruned.base_ids.end(), id) ==
                        pruned.base_ids.end())
                        remove_id = id;
            }
            std::erase(candidate_ids, remove_id);
        }
    }
}

}  // namespace cpdp::ens
