#include <doctest.h>

#include <cmath>

#include "cpdp/learners.hpp"
#include "cpdp/metrics.hpp"
#include "cpdp/tpe.hpp"
#include "support/oracles.hpp"

using namespace cpdp;
using learners::Configuration;
using learners::PipelineSpec;

namespace {

int fs_index(const std::string& id) {
    const auto& reg = learners::portfolio().feature_selectors;
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (reg[i].id == id) return static_cast<int>(i);
    FAIL("unknown fs");
    return -1;
}
int tl_index(const std::string& id) {
    const auto& reg = learners::portfolio().transfer_learners;
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (reg[i].id == id) return static_cast<int>(i);
    FAIL("unknown tl");
    return -1;
}
int clf_index(const std::string& id) {
    const auto& reg = learners::portfolio().classifiers;
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (reg[i].id == id) return static_cast<int>(i);
    FAIL("unknown clf");
    return -1;
}

Configuration base_config() {
    Configuration c;
    c.values["HF_var.threshold"] = 0.7;
    c.values["PCAmining.dim"] = 5LL;
    c.values["NNfilter.k"] = 10LL;
    c.values["NNfilter.metric"] = std::string("Euc");
    c.values["NB.NBType"] = std::string("gauss");
    c.values["NB.alpha"] = 1.0;
    c.values["NB.norm"] = std::string("false");
    c.values["KNN.n_neigh"] = 5LL;
    c.values["KNN.p"] = 2LL;
    c.values["LR.penalty"] = std::string("L2");
    c.values["LR.fit_int"] = std::string("true");
    c.values["LR.tol"] = 1e-6;
    c.values["DT.criterion"] = std::string("gini");
    c.values["DT.min_s_l"] = 1LL;
    c.values["DT.max_depth"] = 8LL;
    c.values["NCC.metric"] = std::string("Euc");
    c.values["NCC.shrink_t"] = 0.0;
    return c;
}

}  // namespace

TEST_CASE("portfolio registry") {
    const auto& reg = learners::portfolio();
    const auto sizes = reg.stage_sizes();
    CHECK(sizes[0] * sizes[1] * sizes[2] == 30);  // 3 x 2 x 5 base pipelines

    const auto& knn = reg.lookup("KNN");
    const auto* spec = knn.space.find("n_neigh");
    REQUIRE(spec != nullptr);
    CHECK(spec->lo.value == 1.0);
    CHECK(spec->hi.value == 50.0);

    CHECK_THROWS_AS(reg.lookup("Bagging"), UnknownLearnerError);
}

TEST_CASE("data-dependent PCA bound resolves against the bundle") {
    const auto bundle = oracles::synth_bundle(2, 60, 4, 0.5, 7);
    const PipelineSpec spec{fs_index("PCAmining"), tl_index("None"), {clf_index("NB")}};
    const auto space = learners::pipeline_space(spec).resolve(learners::bundle_dims(bundle));
    const auto* dim = space.find("PCAmining.dim");
    REQUIRE(dim != nullptr);
    CHECK(dim->lo.value == 5.0);
    CHECK(dim->hi.value == double(bundle.source_row_count()));  // max(N_s, N_t)
}

TEST_CASE("plain NCC pipeline solves the shift-0 fixture") {
    const auto bundle = oracles::synth_bundle(3, 200, 4, 0.0, 42);
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("NCC")}};
    const auto fitted = learners::fit_pipeline(spec, base_config(), bundle, 1);
    const auto scores = learners::predict_scores(fitted, bundle.target_test.features);
    CHECK(metrics::auc(bundle.target_test.labels, scores) >= 0.9);
}

TEST_CASE("NNfilter with k=1 over duplicated sources selects duplicates") {
    // Source equals target_train exactly; nearest neighbour of each train row
    // among copies is a copy, so the selected set adds no new points.
    const auto projects = data::synth_cpdp(1, 40, 3, 0.0, 9);
    data::DatasetBundle bundle;
    bundle.feature_count = 3;
    bundle.target_train = projects[0];
    bundle.target_test = projects[0];
    data::ProjectData source = projects[0];
    source.name = "copy";
    bundle.source = {source};

    auto config = base_config();
    config.values["NNfilter.k"] = 1LL;
    const auto fe = learners::fit_front_end(fs_index("None"), tl_index("NNfilter"), config, bundle);
    // selected sources + target_train, selected subset of exact duplicates
    CHECK(fe.train_x.rows() <= 2 * bundle.target_train.features.rows());
    std::multiset<std::vector<double>> train_rows;
    for (std::size_t r = 0; r < bundle.target_train.features.rows(); ++r) {
        auto row = bundle.target_train.features.row(r);
        train_rows.insert({row.begin(), row.end()});
    }
    for (std::size_t r = 0; r < fe.train_x.rows(); ++r) {
        auto row = fe.train_x.row(r);
        CHECK(train_rows.contains(std::vector<double>{row.begin(), row.end()}));
    }
}

TEST_CASE("NNfilter training-set size bounds") {
    const auto bundle = oracles::synth_bundle(3, 80, 4, 1.0, 13);
    for (long long k : {1LL, 3LL, 25LL}) {
        auto config = base_config();
        config.values["NNfilter.k"] = k;
        const auto fe =
            learners::fit_front_end(fs_index("None"), tl_index("NNfilter"), config, bundle);
        const std::size_t tt = bundle.target_train.features.rows();
        CHECK(fe.train_x.rows() >= tt);
        CHECK(fe.train_x.rows() <= tt + static_cast<std::size_t>(k) * tt);
    }
}

TEST_CASE("KNN with one neighbour scores its own training rows perfectly") {
    const auto bundle = oracles::synth_bundle(2, 50, 3, 0.5, 3);
    auto config = base_config();
    config.values["KNN.n_neigh"] = 1LL;
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("KNN")}};
    const auto fitted = learners::fit_pipeline(spec, config, bundle, 1);
    const auto scores = learners::predict_scores(fitted, bundle.target_train.features);
    for (std::size_t r = 0; r < scores.size(); ++r)
        CHECK(scores[r] == double(bundle.target_train.labels[r]));
}

TEST_CASE("LR at the zero-gradient start returns 0.5 everywhere") {
    // Symmetric data: gradient at w = 0 vanishes, so training stops there.
    data::DatasetBundle bundle;
    bundle.feature_count = 1;
    bundle.target_train.features = Matrix(4, 1);
    bundle.target_train.features(0, 0) = 1.0;
    bundle.target_train.features(1, 0) = -1.0;
    bundle.target_train.features(2, 0) = 1.0;
    bundle.target_train.features(3, 0) = -1.0;
    bundle.target_train.labels = {1, 0, 0, 1};
    bundle.target_test = bundle.target_train;

    auto config = base_config();
    config.values["LR.fit_int"] = std::string("false");
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("LR")}};
    const auto fitted = learners::fit_pipeline(spec, config, bundle, 1);
    for (double s : learners::predict_scores(fitted, bundle.target_test.features))
        CHECK(s == 0.5);
}

TEST_CASE("gaussian NB separates the closed-form 1-D case") {
    data::DatasetBundle bundle;
    bundle.feature_count = 1;
    bundle.target_train.features = Matrix(2, 1);
    bundle.target_train.features(0, 0) = 0.0;
    bundle.target_train.features(1, 0) = 10.0;
    bundle.target_train.labels = {0, 1};
    bundle.target_test.features = Matrix(1, 1);
    bundle.target_test.features(0, 0) = 10.0;
    bundle.target_test.labels = {1};

    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("NB")}};
    const auto fitted = learners::fit_pipeline(spec, base_config(), bundle, 1);
    const auto scores = learners::predict_scores(fitted, bundle.target_test.features);
    CHECK(scores[0] > 0.99);
}

TEST_CASE("DT reaches the brute-force optimum on linearly split data") {
    // One informative feature; the best threshold is recoverable by scanning
    // all midpoints (the oracle below does exactly that).
    data::DatasetBundle bundle;
    bundle.feature_count = 2;
    const std::size_t n = 40;
    bundle.target_train.features = Matrix(n, 2);
    rng::Stream stream(rng::derive(5, std::string_view{"dt"}));
    for (std::size_t r = 0; r < n; ++r) {
        const int label = r < n / 2 ? 0 : 1;
        bundle.target_train.features(r, 0) = label == 1 ? 4.0 + stream.uniform() : stream.uniform();
        bundle.target_train.features(r, 1) = stream.normal();
        bundle.target_train.labels.push_back(label);
    }
    bundle.target_test = bundle.target_train;

    // brute-force best single split on feature 0: verify zero training error
    double best_err = 1e9;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double thr = 0.5 * (bundle.target_train.features(i, 0) +
                                      bundle.target_train.features(j, 0));
            double err = 0;
            for (std::size_t r = 0; r < n; ++r) {
                const int pred = bundle.target_train.features(r, 0) >= thr ? 1 : 0;
                err += pred != bundle.target_train.labels[r];
            }
            best_err = std::min(best_err, err);
        }
    REQUIRE(best_err == 0.0);

    auto config = base_config();
    config.values["DT.max_depth"] = 2LL;
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("DT")}};
    const auto fitted = learners::fit_pipeline(spec, config, bundle, 1);
    const auto scores = learners::predict_scores(fitted, bundle.target_train.features);
    for (std::size_t r = 0; r < n; ++r)
        CHECK((scores[r] >= 0.5 ? 1 : 0) == bundle.target_train.labels[r]);
}

TEST_CASE("fs=None and tl=None are exact pass-throughs") {
    const auto bundle = oracles::synth_bundle(2, 40, 4, 1.0, 77);
    const auto fe = learners::fit_front_end(fs_index("None"), tl_index("None"), base_config(),
                                            bundle);
    // transform is bit-identical
    const auto transformed = learners::apply_feature_transform(fe.fs, bundle.target_test.features);
    CHECK(transformed == bundle.target_test.features);
    // training set = all sources then target_train, unfiltered
    Matrix expected = bundle.stacked_source_features();
    expected.append_rows(bundle.target_train.features);
    CHECK(fe.train_x == expected);
}

TEST_CASE("PCA with dim = feature_count preserves pairwise distances") {
    const auto bundle = oracles::synth_bundle(2, 60, 5, 1.0, 31);
    auto config = base_config();
    config.values["PCAmining.dim"] = 5LL;
    const auto fe = learners::fit_front_end(fs_index("PCAmining"), tl_index("None"), config,
                                            bundle);
    const auto& x = bundle.target_test.features;
    const auto z = learners::apply_feature_transform(fe.fs, x);
    REQUIRE(z.cols() == x.cols());
    for (std::size_t a = 0; a < std::min<std::size_t>(x.rows(), 10); ++a)
        for (std::size_t b = a + 1; b < std::min<std::size_t>(x.rows(), 10); ++b) {
            double dx = 0, dz = 0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                dx += (x(a, c) - x(b, c)) * (x(a, c) - x(b, c));
                dz += (z(a, c) - z(b, c)) * (z(a, c) - z(b, c));
            }
            CHECK(std::sqrt(dz) == doctest::Approx(std::sqrt(dx)).epsilon(1e-6));
        }
}

TEST_CASE("HF_var drops low-variance columns but never all of them") {
    auto bundle = oracles::synth_bundle(2, 60, 4, 1.0, 57);
    // make column 3 constant: its variance is minimal
    for (auto* part : {&bundle.source[0], &bundle.source[1], &bundle.target_train,
                       &bundle.target_test})
        for (std::size_t r = 0; r < part->features.rows(); ++r) part->features(r, 3) = 0.0;
    auto config = base_config();
    config.values["HF_var.threshold"] = 0.6;
    const auto fe = learners::fit_front_end(fs_index("HF_var"), tl_index("None"), config, bundle);
    REQUIRE(fe.fs.kept_columns.size() >= 1);
    CHECK(fe.fs.kept_columns.size() < 4);
    for (std::size_t kept : fe.fs.kept_columns) CHECK(kept != 3);
}

TEST_CASE("degenerate training raises") {
    auto bundle = oracles::synth_bundle(1, 30, 3, 0.0, 2);
    bundle.target_train.labels.assign(bundle.target_train.labels.size(), 1);
    bundle.source[0].labels.assign(bundle.source[0].labels.size(), 1);
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("NB")}};
    CHECK_THROWS_AS(learners::fit_pipeline(spec, base_config(), bundle, 1),
                    DegenerateTrainingError);
}

TEST_CASE("score range and purity across 1000 sampled configurations") {
    const auto bundle = oracles::synth_bundle(2, 60, 4, 2.0, 19);
    const auto dims = learners::bundle_dims(bundle);
    const auto sizes = learners::portfolio().stage_sizes();
    rng::Stream stream(rng::derive(23, std::string_view{"fuzz"}));

    int checked = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const PipelineSpec spec{static_cast<int>(stream.index(sizes[0])),
                                static_cast<int>(stream.index(sizes[1])),
                                {static_cast<int>(stream.index(sizes[2]))}};
        const auto space = learners::pipeline_space(spec).resolve(dims);
        const auto config = tpe::sample_uniform(space, stream.next());
        learners::validate_configuration(config, space);
        const auto fitted = learners::fit_pipeline(spec, config, bundle, 7);
        const auto scores = learners::predict_scores(fitted, bundle.target_test.features);
        for (double s : scores) {
            CHECK(std::isfinite(s));
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
        if (rep % 100 == 0) {  // purity: identical inputs give identical bits
            const auto refit = learners::fit_pipeline(spec, config, bundle, 7);
            CHECK(learners::predict_scores(refit, bundle.target_test.features) == scores);
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("predict_scores rejects mismatched shapes") {
    const auto bundle = oracles::synth_bundle(1, 30, 3, 0.0, 4);
    const PipelineSpec spec{fs_index("None"), tl_index("None"), {clf_index("NCC")}};
    const auto fitted = learners::fit_pipeline(spec, base_config(), bundle, 1);
    CHECK_THROWS_AS(learners::predict_scores(fitted, Matrix(2, 5)), ShapeMismatchError);
}
