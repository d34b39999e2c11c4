#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpdp/learners.hpp"

namespace cpdp::learners {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-std::min(z, 500.0));
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(std::max(z, -500.0));
    return e / (1.0 + e);
}

std::array<std::size_t, 2> class_counts(const std::vector<int>& y) {
    std::array<std::size_t, 2> n{0, 0};
    for (int v : y) ++n[v == 1 ? 1 : 0];
    return n;
}

// ---------------------------------------------------------------------------
// Naive Bayes

NbModel fit_nb(const Configuration& config, const Matrix& x, const std::vector<int>& y) {
    NbModel m;
    const std::string& type = config.get_choice("NB.NBType");
    m.type = type == "gauss" ? NbModel::Type::Gauss
             : type == "multi" ? NbModel::Type::Multi
                               : NbModel::Type::Comp;
    const auto n = class_counts(y);
    const auto total = static_cast<double>(y.size());
    for (int c : {0, 1}) m.log_prior[c] = std::log(static_cast<double>(n[c]) / total);

    const std::size_t d = x.cols();
    if (m.type == NbModel::Type::Gauss) {
        for (int c : {0, 1}) {
            m.mean[c].assign(d, 0.0);
            m.var[c].assign(d, 0.0);
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const int c = y[r] == 1 ? 1 : 0;
            for (std::size_t j = 0; j < d; ++j) m.mean[c][j] += x(r, j);
        }
        for (int c : {0, 1})
            for (std::size_t j = 0; j < d; ++j) m.mean[c][j] /= static_cast<double>(n[c]);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const int c = y[r] == 1 ? 1 : 0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dev = x(r, j) - m.mean[c][j];
                m.var[c][j] += dev * dev;
            }
        }
        for (int c : {0, 1})
            for (std::size_t j = 0; j < d; ++j)
                m.var[c][j] = std::max(m.var[c][j] / static_cast<double>(n[c]), 1e-9);
        return m;
    }

    // Count-style variants on real-valued metrics: shift every column by its
    // training minimum so values are non-negative.
    const double alpha = config.get_real("NB.alpha") + 1e-10;
    m.shift.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double lo = x(0, j);
        for (std::size_t r = 1; r < x.rows(); ++r) lo = std::min(lo, x(r, j));
        m.shift[j] = lo;
    }
    std::array<std::vector<double>, 2> sums{std::vector<double>(d, 0.0),
                                            std::vector<double>(d, 0.0)};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const int c = y[r] == 1 ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) sums[c][j] += x(r, j) - m.shift[j];
    }

    if (m.type == NbModel::Type::Multi) {
        for (int c : {0, 1}) {
            double denom = alpha * static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) denom += sums[c][j];
            m.weight[c].assign(d, 0.0);
            for (std::size_t j = 0; j < d; ++j)
                m.weight[c][j] = std::log((sums[c][j] + alpha) / denom);
        }
        return m;
    }

    // Complement NB: weights from the other class's feature mass.
    const bool norm = config.get_flag("NB.norm");
    for (int c : {0, 1}) {
        const auto& other = sums[1 - c];
        double denom = alpha * static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) denom += other[j];
        m.weight[c].assign(d, 0.0);
        double abs_sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m.weight[c][j] = -std::log((other[j] + alpha) / denom);
            abs_sum += std::fabs(m.weight[c][j]);
        }
        if (norm && abs_sum > 0.0)
            for (auto& w : m.weight[c]) w /= abs_sum;
    }
    return m;
}

std::vector<double> nb_scores(const NbModel& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    const std::size_t d = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::array<double, 2> ll = m.log_prior;
        if (m.type == NbModel::Type::Gauss) {
            for (int c : {0, 1})
                for (std::size_t j = 0; j < d; ++j) {
                    const double dev = x(r, j) - m.mean[c][j];
                    ll[c] += -0.5 * std::log(2.0 * M_PI * m.var[c][j]) -
                             dev * dev / (2.0 * m.var[c][j]);
                }
        } else {
            for (int c : {0, 1})
                for (std::size_t j = 0; j < d; ++j) {
                    const double v = std::max(x(r, j) - m.shift[j], 0.0);
                    ll[c] += v * m.weight[c][j];
                }
        }
        out[r] = stable_sigmoid(ll[1] - ll[0]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// K-nearest neighbours

std::vector<double> knn_scores(const KnnModel& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    const auto k = static_cast<std::size_t>(
        std::min<long long>(m.n_neigh, static_cast<long long>(m.train_x.rows())));
    std::vector<std::pair<double, std::size_t>> dist(m.train_x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t t = 0; t < m.train_x.rows(); ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j)
                acc += std::pow(std::fabs(x(r, j) - m.train_x(t, j)), m.p);
            dist[t] = {acc, t};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < k; ++i) pos += (m.train_y[dist[i].second] == 1);
        out[r] = static_cast<double>(pos) / static_cast<double>(k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

LrModel fit_lr(const Configuration& config, const Matrix& x, const std::vector<int>& y) {
    constexpr double kStep = 0.1;
    constexpr int kMaxIter = 500;
    constexpr double kPenalty = 1e-4;

    LrModel m;
    m.has_bias = config.get_flag("LR.fit_int");
    const bool l1 = config.get_choice("LR.penalty") == "L1";
    const double tol = config.get_real("LR.tol");
    const std::size_t d = x.cols();
    const std::size_t n = x.rows();

    // Internal standardization keeps the fixed step stable on raw metrics.
    m.mu = column_means(x);
    m.sd = column_variances(x);
    for (auto& v : m.sd) {
        v = std::sqrt(v);
        if (v <= 1e-12) v = 1.0;
    }

    m.w.assign(d, 0.0);
    m.bias = 0.0;
    std::vector<double> grad(d);
    for (int iter = 0; iter < kMaxIter; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double z = m.bias;
            for (std::size_t j = 0; j < d; ++j) z += m.w[j] * (x(r, j) - m.mu[j]) / m.sd[j];
            const double err = stable_sigmoid(z) - static_cast<double>(y[r]);
            for (std::size_t j = 0; j < d; ++j) grad[j] += err * (x(r, j) - m.mu[j]) / m.sd[j];
            grad_bias += err;
        }
        double gmax = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] /= static_cast<double>(n);
            grad[j] += kPenalty * (l1 ? (m.w[j] > 0.0 ? 1.0 : (m.w[j] < 0.0 ? -1.0 : 0.0))
                                      : m.w[j]);
            gmax = std::max(gmax, std::fabs(grad[j]));
        }
        grad_bias /= static_cast<double>(n);
        if (m.has_bias) gmax = std::max(gmax, std::fabs(grad_bias));
        if (gmax <= tol) break;
        for (std::size_t j = 0; j < d; ++j) m.w[j] -= kStep * grad[j];
        if (m.has_bias) m.bias -= kStep * grad_bias;
    }
    return m;
}

std::vector<double> lr_scores(const LrModel& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double z = m.bias;
        for (std::size_t j = 0; j < x.cols(); ++j)
            z += m.w[j] * (x(r, j) - m.mu[j]) / m.sd[j];
        out[r] = stable_sigmoid(z);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decision tree (CART, binary splits on midpoints)

struct DtBuilder {
    const Matrix& x;
    const std::vector<int>& y;
    bool entropy;
    long long min_leaf;
    long long max_depth;
    std::vector<DtNode> nodes;

    static double impurity_of(double p, bool entropy) {
        if (entropy) {
            if (p <= 0.0 || p >= 1.0) return 0.0;
            return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
        }
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<std::size_t> rows, long long depth) {
        const std::size_t n = rows.size();
        std::size_t pos = 0;
        for (std::size_t r : rows) pos += (y[r] == 1);
        const double frac = static_cast<double>(pos) / static_cast<double>(n);

        DtNode node;
        node.score = frac;
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(node);

        const bool pure = (pos == 0 || pos == n);
        if (depth >= max_depth || pure ||
            n < 2 * static_cast<std::size_t>(min_leaf))
            return id;

        double best_impurity = std::numeric_limits<double>::infinity();
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::pair<double, int>> values(n);
        for (std::size_t f = 0; f < x.cols(); ++f) {
            for (std::size_t i = 0; i < n; ++i) values[i] = {x(rows[i], f), y[rows[i]]};
            std::sort(values.begin(), values.end());
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_pos += (values[i].second == 1);
                if (values[i].first == values[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < static_cast<std::size_t>(min_leaf) ||
                    nr < static_cast<std::size_t>(min_leaf))
                    continue;
                const double pl = static_cast<double>(left_pos) / static_cast<double>(nl);
                const double pr =
                    static_cast<double>(pos - left_pos) / static_cast<double>(nr);
                const double weighted =
                    (static_cast<double>(nl) * impurity_of(pl, entropy) +
                     static_cast<double>(nr) * impurity_of(pr, entropy)) /
                    static_cast<double>(n);
                if (weighted < best_impurity - 1e-15) {
                    best_impurity = weighted;
                    best_feature = f;
                    best_threshold = 0.5 * (values[i].first + values[i + 1].first);
                    found = true;
                }
            }
        }
        if (!found) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (x(r, best_feature) < best_threshold ? left : right).push_back(r);
        nodes[id].leaf = false;
        nodes[id].feature = best_feature;
        nodes[id].threshold = best_threshold;
        nodes[id].left = build(std::move(left), depth + 1);
        nodes[id].right = build(std::move(right), depth + 1);
        return id;
    }
};

DtModel fit_dt(const Configuration& config, const Matrix& x, const std::vector<int>& y) {
    DtBuilder builder{x, y, config.get_choice("DT.criterion") == "entropy",
                      config.get_int("DT.min_s_l"), config.get_int("DT.max_depth"),
                      {}};
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), 0);
    builder.build(std::move(rows), 0);
    return DtModel{std::move(builder.nodes)};
}

std::vector<double> dt_scores(const DtModel& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        int id = 0;
        while (!m.nodes[id].leaf)
            id = x(r, m.nodes[id].feature) < m.nodes[id].threshold ? m.nodes[id].left
                                                                   : m.nodes[id].right;
        out[r] = m.nodes[id].score;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Nearest shrunken centroid

NccModel fit_ncc(const Configuration& config, const Matrix& x, const std::vector<int>& y) {
    NccModel m;
    m.metric = metric_from_name(config.get_choice("NCC.metric"));
    const double shrink = config.get_real("NCC.shrink_t");
    const auto n = class_counts(y);
    const std::size_t d = x.cols();
    const auto total = static_cast<double>(x.rows());

    std::vector<double> global = column_means(x);
    for (int c : {0, 1}) m.centroid[c].assign(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const int c = y[r] == 1 ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) m.centroid[c][j] += x(r, j);
    }
    for (int c : {0, 1})
        for (std::size_t j = 0; j < d; ++j) m.centroid[c][j] /= static_cast<double>(n[c]);

    // Pooled within-class std per feature drives the shrink amount.
    std::vector<double> pooled(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const int c = y[r] == 1 ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = x(r, j) - m.centroid[c][j];
            pooled[j] += dev * dev;
        }
    }
    const double dof = std::max(total - 2.0, 1.0);
    for (auto& v : pooled) v = std::sqrt(v / dof);

    for (int c : {0, 1}) {
        const double scale = std::sqrt(1.0 / static_cast<double>(n[c]) + 1.0 / total);
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = m.centroid[c][j] - global[j];
            const double delta = shrink * pooled[j] * scale;
            const double shrunk = std::fabs(dev) <= delta
                                      ? 0.0
                                      : (dev > 0 ? dev - delta : dev + delta);
            m.centroid[c][j] = global[j] + shrunk;
        }
    }

    if (m.metric == Metric::MahalanobisDiag) {
        m.mah_weights = column_variances(x);
        for (auto& v : m.mah_weights) v = 1.0 / std::max(v, 1e-12);
    }
    return m;
}

std::vector<double> ncc_scores(const NccModel& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double d0 = metric_distance(x.row(r), m.centroid[0], m.metric, &m.mah_weights);
        const double d1 = metric_distance(x.row(r), m.centroid[1], m.metric, &m.mah_weights);
        out[r] = stable_sigmoid(d0 - d1);  // two-class softmax over -distance
    }
    return out;
}

}  // namespace

ClassifierModel fit_classifier(int clf_index, const Configuration& config, const Matrix& x,
                               const std::vector<int>& y) {
    if (x.rows() == 0 || x.rows() != y.size())
        throw ShapeMismatchError("fit_classifier: bad training shape");
    const auto counts = class_counts(y);
    if (counts[0] == 0 || counts[1] == 0)
        throw DegenerateTrainingError("training set holds a single class");

    const std::string& id = portfolio().classifiers.at(clf_index).id;
    if (id == "NB") return fit_nb(config, x, y);
    if (id == "KNN")
        return KnnModel{x, y, config.get_int("KNN.n_neigh"),
                        static_cast<double>(config.get_int("KNN.p"))};
    if (id == "LR") return fit_lr(config, x, y);
    if (id == "DT") return fit_dt(config, x, y);
    if (id == "NCC") return fit_ncc(config, x, y);
    throw UnknownLearnerError("no classifier named '" + id + "'");
}

std::vector<double> classifier_scores(const ClassifierModel& model, const Matrix& x) {
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NbModel>) return nb_scores(m, x);
            else if constexpr (std::is_same_v<T, KnnModel>) return knn_scores(m, x);
            else if constexpr (std::is_same_v<T, LrModel>) return lr_scores(m, x);
            else if constexpr (std::is_same_v<T, DtModel>) return dt_scores(m, x);
            else return ncc_scores(m, x);
        },
        model);
}

}  // namespace cpdp::learners
