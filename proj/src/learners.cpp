#include "cpdp/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpdp::learners {

std::string pipeline_key(const PipelineSpec& spec) {
    const auto& reg = portfolio();
    std::string key = reg.feature_selectors.at(spec.fs).id + "|" +
                      reg.transfer_learners.at(spec.tl).id + "|";
    for (std::size_t i = 0; i < spec.clfs.size(); ++i) {
        if (i) key += '+';
        key += reg.classifiers.at(spec.clfs[i]).id;
    }
    return key;
}

const LearnerInfo& Portfolio::lookup(const std::string& id) const {
    for (const auto* stage : {&feature_selectors, &transfer_learners, &classifiers})
        for (const auto& info : *stage)
            if (info.id == id) return info;
    throw UnknownLearnerError("no learner named '" + id + "' in the portfolio");
}

const Portfolio& portfolio() {
    static const Portfolio registry = [] {
        Portfolio p;
        const std::vector<std::string> metric_names{"Euc", "Man", "Che", "Min", "Mah"};

        p.feature_selectors.push_back(
            {"HF_var", ParamSpace{{ParamSpec::real("threshold", 0.6, 0.9)}}});
        p.feature_selectors.push_back(
            {"PCAmining",
             ParamSpace{{ParamSpec::integer("dim", Bound::literal(5), Bound::max_ns_nt())}}});
        p.feature_selectors.push_back({"None", ParamSpace{}});

        p.transfer_learners.push_back(
            {"NNfilter",
             ParamSpace{{ParamSpec::integer("k", Bound::literal(1), Bound::literal(100)),
                         ParamSpec::categorical("metric", metric_names)}}});
        p.transfer_learners.push_back({"None", ParamSpace{}});

        p.classifiers.push_back(
            {"NB", ParamSpace{{ParamSpec::categorical("NBType", {"gauss", "multi", "comp"}),
                               ParamSpec::real("alpha", 0.0, 10.0),
                               ParamSpec::categorical("norm", {"true", "false"})}}});
        p.classifiers.push_back(
            {"KNN", ParamSpace{{ParamSpec::integer("n_neigh", Bound::literal(1), Bound::literal(50)),
                                ParamSpec::integer("p", Bound::literal(1), Bound::literal(5))}}});
        p.classifiers.push_back(
            {"LR", ParamSpace{{ParamSpec::categorical("penalty", {"L1", "L2"}),
                               ParamSpec::categorical("fit_int", {"true", "false"}),
                               ParamSpec::real("tol", 1e-6, 0.1)}}});
        p.classifiers.push_back(
            {"DT", ParamSpace{{ParamSpec::categorical("criterion", {"gini", "entropy"}),
                               ParamSpec::integer("min_s_l", Bound::literal(1), Bound::literal(20)),
                               ParamSpec::integer("max_depth", Bound::literal(2), Bound::literal(30))}}});
        p.classifiers.push_back(
            {"NCC", ParamSpace{{ParamSpec::categorical("metric", metric_names),
                                ParamSpec::real("shrink_t", 0.0, 10.0)}}});
        return p;
    }();
    return registry;
}

namespace {
void append_prefixed(ParamSpace& space, const LearnerInfo& info) {
    for (auto spec : info.space.specs) {
        spec.name = info.id + "." + spec.name;
        space.specs.push_back(std::move(spec));
    }
}
}  // namespace

ParamSpace pipeline_space(const PipelineSpec& spec) {
    const auto& reg = portfolio();
    ParamSpace space;
    append_prefixed(space, reg.feature_selectors.at(spec.fs));
    append_prefixed(space, reg.transfer_learners.at(spec.tl));
    for (int c : spec.clfs) append_prefixed(space, reg.classifiers.at(c));
    return space;
}

DataDims bundle_dims(const data::DatasetBundle& bundle) {
    return {bundle.source_row_count(), bundle.target_train.features.rows()};
}

// ---------------------------------------------------------------------------
// Distances

Metric metric_from_name(const std::string& name) {
    if (name == "Euc") return Metric::Euclidean;
    if (name == "Man") return Metric::Manhattan;
    if (name == "Che") return Metric::Chebyshev;
    if (name == "Min") return Metric::Minkowski3;
    if (name == "Mah") return Metric::MahalanobisDiag;
    throw BadConfigurationError("unknown distance metric '" + name + "'");
}

double metric_distance(std::span<const double> a, std::span<const double> b, Metric metric,
                       const std::vector<double>* weights) {
    double acc = 0.0;
    switch (metric) {
        case Metric::Euclidean:
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                acc += d * d;
            }
            return std::sqrt(acc);
        case Metric::Manhattan:
            for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
            return acc;
        case Metric::Chebyshev:
            for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::fabs(a[i] - b[i]));
            return acc;
        case Metric::Minkowski3:
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = std::fabs(a[i] - b[i]);
                acc += d * d * d;
            }
            return std::cbrt(acc);
        case Metric::MahalanobisDiag:
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                acc += (*weights)[i] * d * d;
            }
            return std::sqrt(acc);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Feature selection

Matrix apply_feature_transform(const FsState& fs, const Matrix& rows) {
    switch (fs.kind) {
        case FsState::Kind::PassThrough:
            return rows;
        case FsState::Kind::VarianceFilter:
            return rows.select_cols(fs.kept_columns);
        case FsState::Kind::Pca: {
            const std::size_t k = fs.pca_components.cols();
            Matrix out(rows.rows(), k);
            for (std::size_t r = 0; r < rows.rows(); ++r)
                for (std::size_t j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < rows.cols(); ++c)
                        acc += (rows(r, c) - fs.pca_mean[c]) * fs.pca_components(c, j);
                    out(r, j) = acc;
                }
            return out;
        }
    }
    return rows;
}

namespace {

// Cyclic Jacobi rotations; adequate for the small symmetric covariance
// matrices this code sees and fully deterministic.
void jacobi_eigen(Matrix a, std::vector<double>& eigvals, Matrix& eigvecs) {
    const std::size_t n = a.rows();
    eigvecs = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) eigvecs(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-18) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = eigvecs(i, p), viq = eigvecs(i, q);
                    eigvecs(i, p) = c * vip - s * viq;
                    eigvecs(i, q) = s * vip + c * viq;
                }
            }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a(i, i);
}

FsState fit_variance_filter(const Matrix& fit_rows, double threshold) {
    const auto variances = column_variances(fit_rows);
    std::vector<double> sorted = variances;
    std::sort(sorted.begin(), sorted.end());
    const double pos = threshold * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double cutoff = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);

    FsState fs;
    fs.kind = FsState::Kind::VarianceFilter;
    for (std::size_t c = 0; c < variances.size(); ++c)
        if (variances[c] >= cutoff) fs.kept_columns.push_back(c);
    if (fs.kept_columns.empty()) {
        const auto best = std::max_element(variances.begin(), variances.end());
        fs.kept_columns.push_back(static_cast<std::size_t>(best - variances.begin()));
    }
    return fs;
}

FsState fit_pca(const Matrix& fit_rows, long long dim) {
    const std::size_t d = fit_rows.cols();
    const std::size_t k = std::min<std::size_t>(
        {static_cast<std::size_t>(std::max<long long>(dim, 1)), d, fit_rows.rows()});

    FsState fs;
    fs.kind = FsState::Kind::Pca;
    fs.pca_mean = column_means(fit_rows);

    Matrix cov(d, d);
    for (std::size_t r = 0; r < fit_rows.rows(); ++r)
        for (std::size_t i = 0; i < d; ++i) {
            const double di = fit_rows(r, i) - fs.pca_mean[i];
            for (std::size_t j = i; j < d; ++j)
                cov(i, j) += di * (fit_rows(r, j) - fs.pca_mean[j]);
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(fit_rows.rows());
            cov(j, i) = cov(i, j);
        }

    std::vector<double> eigvals;
    Matrix eigvecs;
    jacobi_eigen(cov, eigvals, eigvecs);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

    fs.pca_components = Matrix(d, k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t col = order[j];
        // Sign convention: largest-magnitude entry is positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::fabs(eigvecs(i, col)) > std::fabs(eigvecs(arg, col))) arg = i;
        const double sign = eigvecs(arg, col) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < d; ++i) fs.pca_components(i, j) = sign * eigvecs(i, col);
    }
    return fs;
}

}  // namespace

FrontEnd fit_front_end(int fs_index, int tl_index, const Configuration& config,
                       const data::DatasetBundle& bundle) {
    const auto& reg = portfolio();
    const std::string& fs_id = reg.feature_selectors.at(fs_index).id;
    const std::string& tl_id = reg.transfer_learners.at(tl_index).id;

    Matrix fit_rows = bundle.stacked_source_features();
    fit_rows.append_rows(bundle.target_train.features);

    FrontEnd fe;
    if (fs_id == "HF_var") {
        fe.fs = fit_variance_filter(fit_rows, config.get_real("HF_var.threshold"));
    } else if (fs_id == "PCAmining") {
        fe.fs = fit_pca(fit_rows, config.get_int("PCAmining.dim"));
    } else {
        fe.fs.kind = FsState::Kind::PassThrough;
    }

    const Matrix source_x = apply_feature_transform(fe.fs, bundle.stacked_source_features());
    const std::vector<int> source_y = bundle.stacked_source_labels();
    const Matrix train_x = apply_feature_transform(fe.fs, bundle.target_train.features);

    if (tl_id == "NNfilter" && source_x.rows() > 0) {
        const auto k = static_cast<std::size_t>(config.get_int("NNfilter.k"));
        const Metric metric = metric_from_name(config.get_choice("NNfilter.metric"));
        std::vector<double> mah;
        if (metric == Metric::MahalanobisDiag) {
            mah = column_variances(source_x);
            for (auto& v : mah) v = 1.0 / std::max(v, 1e-12);
        }

        std::vector<char> selected(source_x.rows(), 0);
        std::vector<std::pair<double, std::size_t>> dist(source_x.rows());
        for (std::size_t t = 0; t < train_x.rows(); ++t) {
            for (std::size_t s = 0; s < source_x.rows(); ++s)
                dist[s] = {metric_distance(train_x.row(t), source_x.row(s), metric, &mah), s};
            const std::size_t take = std::min(k, dist.size());
            std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
            for (std::size_t i = 0; i < take; ++i) selected[dist[i].second] = 1;
        }
        fe.train_x = Matrix(0, train_x.cols());
        for (std::size_t s = 0; s < source_x.rows(); ++s)
            if (selected[s]) {
                fe.train_x.append_row(source_x.row(s));
                fe.train_y.push_back(source_y[s]);
            }
    } else {
        fe.train_x = source_x;
        fe.train_y = source_y;
    }

    fe.train_x.append_rows(train_x);
    fe.train_y.insert(fe.train_y.end(), bundle.target_train.labels.begin(),
                      bundle.target_train.labels.end());
    return fe;
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const Configuration& config,
                            const data::DatasetBundle& bundle, std::uint64_t /*seed*/) {
    if (spec.is_ensemble())
        throw BadConfigurationError("fit_pipeline handles single-classifier pipelines only");
    FrontEnd fe = fit_front_end(spec.fs, spec.tl, config, bundle);

    FittedPipeline fitted;
    fitted.input_features = bundle.feature_count;
    fitted.fs = std::move(fe.fs);
    fitted.training_rows = fe.train_x.rows();
    fitted.clf = fit_classifier(spec.clf(), config, fe.train_x, fe.train_y);
    return fitted;
}

std::vector<double> predict_scores(const FittedPipeline& fitted, const Matrix& rows) {
    if (rows.cols() != fitted.input_features)
        throw ShapeMismatchError("predict_scores: expected " +
                                 std::to_string(fitted.input_features) + " columns, got " +
                                 std::to_string(rows.cols()));
    return classifier_scores(fitted.clf, apply_feature_transform(fitted.fs, rows));
}

}  // namespace cpdp::learners
