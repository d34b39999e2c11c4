#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "cpdp/ensemble.hpp"
#include "cpdp/mots.hpp"
#include "support/oracles.hpp"

using namespace cpdp;
using learners::PipelineSpec;

namespace {

// Synthetic lower-level loss: smooth in the pipeline genes and in one knob
// per learner, so search behaviour is observable without fitting models.
double toy_loss(const PipelineSpec& p, const learners::Configuration&) {
    return 0.05 * p.fs + 0.10 * p.tl + 0.03 * static_cast<double>(p.clf());
}

mots::RunBudgets small_budgets() {
    mots::RunBudgets b;
    b.population = 4;
    b.pool_capacity = 3;
    b.phase1_evals = 40;
    b.phase2_evals = 10;
    b.lower = {2, 0.0};
    return b;
}

mots::UpperSearch make_search(const mots::RunBudgets& budgets, std::uint64_t seed) {
    return {learners::DataDims{100, 50}, budgets, seed, mots::objective_map_by_id("default"),
            toy_loss};
}

}  // namespace

TEST_CASE("objectives_from_loss") {
    CHECK(mots::objectives_from_loss(0.0) == std::vector<double>{0.0, 0.0});
    const auto quarter = mots::objectives_from_loss(0.75);  // AUC 0.25
    CHECK(quarter[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(quarter[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(mots::objectives_from_loss(1.5), OutOfRangeError);
    CHECK_THROWS_AS(mots::objectives_from_loss(-0.5), OutOfRangeError);

    // monotone link: better AUC dominates under the default map
    rng::Stream stream(rng::derive(3, std::string_view{"obj"}));
    for (int i = 0; i < 1000; ++i) {
        double a = stream.uniform(), b = stream.uniform();
        if (a == b) continue;
        if (a > b) std::swap(a, b);  // a = smaller loss = better AUC
        CHECK(mots::dominates(mots::objectives_from_loss(a), mots::objectives_from_loss(b)));
    }
}

TEST_CASE("non_dominated_sort examples and oracle agreement") {
    using Fronts = std::vector<std::vector<std::size_t>>;
    CHECK(mots::non_dominated_sort({{1.0, 2.0}}) == Fronts{{0}});
    CHECK(mots::non_dominated_sort({{1, 2}, {2, 1}, {2, 2}}) == Fronts{{0, 1}, {2}});
    CHECK(mots::non_dominated_sort({{1, 1}, {2, 2}, {3, 3}}) == Fronts{{0}, {1}, {2}});
    CHECK_THROWS_AS(mots::non_dominated_sort({{1, 2}, {1, 2, 3}}), DimensionMismatchError);

    rng::Stream stream(rng::derive(17, std::string_view{"nds"}));
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + stream.index(50);
        const std::size_t m = std::vector<std::size_t>{2, 3, 5}[stream.index(3)];
        std::vector<std::vector<double>> points(n, std::vector<double>(m));
        for (auto& p : points)
            for (auto& v : p) v = static_cast<double>(stream.index(6));  // ties likely
        CHECK(mots::non_dominated_sort(points) == oracles::peel_nds(points));
    }
}

TEST_CASE("crowding distance") {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const auto two = mots::crowding_distance({{0.0, 1.0}, {1.0, 0.0}});
    CHECK(two == std::vector<double>{kInf, kInf});

    const auto three = mots::crowding_distance({{0.0, 2.0}, {1.0, 1.0}, {2.0, 0.0}});
    CHECK(three[0] == kInf);
    CHECK(three[2] == kInf);
    CHECK(three[1] == doctest::Approx(2.0).epsilon(1e-12));

    const auto identical = mots::crowding_distance({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
    CHECK(identical[1] == 0.0);
}

TEST_CASE("gene-level variation operators") {
    SUBCASE("sbx with identical parents returns the parent for any draw") {
        rng::Stream stream(rng::derive(5, std::string_view{"sbx"}));
        for (int i = 0; i < 100; ++i)
            CHECK(mots::sbx_combine(2.0, 2.0, 30.0, stream) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("uniform gene resample is chi-square uniform over each registry") {
        // critical values at p = 0.01: df=2 -> 9.210, df=1 -> 6.635, df=4 -> 13.277
        const std::map<std::size_t, double> critical{{3, 9.210}, {2, 6.635}, {5, 13.277}};
        for (const auto [size, crit] : critical) {
            rng::Stream stream(rng::derive(7, std::string_view{"uni"}, size));
            std::vector<double> counts(size, 0.0);
            const int n = 5000;
            for (int i = 0; i < n; ++i)
                counts[static_cast<std::size_t>(mots::uniform_gene(stream, size))] += 1.0;
            const double expected = double(n) / double(size);
            double chi2 = 0.0;
            for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
            CHECK(chi2 < crit);  // p > 0.01
        }
    }
    SUBCASE("offspring genes stay in bounds over 10,000 fuzzed calls") {
        mots::RunBudgets budgets = small_budgets();
        const auto sizes = learners::portfolio().stage_sizes();
        std::vector<mots::EvaluatedSolution> archive(3);
        archive[0].pipeline = {0, 0, {0}};
        archive[1].pipeline = {2, 1, {4}};
        archive[2].pipeline = {1, 0, {2}};
        for (auto& s : archive) s.objectives = {0.1, 0.1};
        rng::Stream stream(rng::derive(9, std::string_view{"fuzz"}));
        int genes_checked = 0;
        while (genes_checked < 10000) {
            for (const auto& child : mots::vary(archive, budgets, stream)) {
                CHECK(child.fs >= 0);
                CHECK(child.fs < static_cast<int>(sizes[0]));
                CHECK(child.tl >= 0);
                CHECK(child.tl < static_cast<int>(sizes[1]));
                CHECK(child.clf() >= 0);
                CHECK(child.clf() < static_cast<int>(sizes[2]));
                genes_checked += 3;
            }
        }
    }
}

TEST_CASE("neighbors: Hamming-1 count, irreflexive, symmetric") {
    const auto sizes = learners::portfolio().stage_sizes();
    const PipelineSpec p{1, 0, {3}};
    const auto nbrs = mots::neighbors(p);
    CHECK(nbrs.size() == (sizes[0] - 1) + (sizes[1] - 1) + (sizes[2] - 1));  // = 7
    for (const auto& q : nbrs) CHECK(!(q == p));

    for (int fs = 0; fs < 3; ++fs)
        for (int tl = 0; tl < 2; ++tl)
            for (int clf = 0; clf < 5; ++clf) {
                const PipelineSpec a{fs, tl, {clf}};
                for (const auto& b : mots::neighbors(a)) {
                    const auto back = mots::neighbors(b);
                    CHECK(std::find(back.begin(), back.end(), a) != back.end());
                }
            }
}

TEST_CASE("upper_evaluate bookkeeping") {
    auto search = make_search(small_budgets(), 1);
    auto tracker = search.make_phase1_tracker();

    SUBCASE("first evaluation fills archive, pool and tabu") {
        CHECK(search.offer({0, 0, {0}}, tracker));
        CHECK(search.state().archive.size() == 1);
        CHECK(search.state().pool.members.size() == 1);
        CHECK(search.state().tabu.size() == 1);
        CHECK(tracker.spent() == 2);  // B^L = 2
    }
    SUBCASE("pool trims to capacity via NDS + crowding") {
        int offered = 0;
        for (int fs = 0; fs < 3 && offered < 5; ++fs)
            for (int clf = 0; clf < 5 && offered < 5; ++clf)
                offered += search.offer({fs, 0, {clf}}, tracker) ? 1 : 0;
        CHECK(offered == 5);
        CHECK(search.state().pool.members.size() == 3);  // N^c = 3
    }
    SUBCASE("re-offering a tabu pipeline consumes nothing") {
        CHECK(search.offer({0, 0, {0}}, tracker));
        const auto spent = tracker.spent();
        CHECK(!search.offer({0, 0, {0}}, tracker));
        CHECK(tracker.spent() == spent);
        CHECK(search.state().log.size() == 1);
    }
}

TEST_CASE("phase1 with B1 = N^u and B^L = 1 stops at the initial population") {
    mots::RunBudgets budgets = small_budgets();
    budgets.population = 6;
    budgets.phase1_evals = 6;
    budgets.lower = {1, 0.0};
    auto search = make_search(budgets, 13);
    search.phase1();
    CHECK(search.state().archive.size() == 6);
    CHECK(search.state().log.size() == 6);  // exactly the initial population
}

TEST_CASE("phase1 invariants on the toy loss") {
    mots::RunBudgets budgets = small_budgets();
    budgets.phase1_evals = 60;
    auto search = make_search(budgets, 21);
    search.phase1();
    const auto& state = search.state();

    SUBCASE("archive: bounded size, clean first front, best solution retained") {
        CHECK(state.archive.size() <= 4);
        std::vector<std::vector<double>> points;
        for (const auto& s : state.archive) points.push_back(s.objectives);
        const auto fronts = mots::non_dominated_sort(points);
        for (std::size_t a : fronts[0])
            for (std::size_t b : fronts[0])
                CHECK(!mots::dominates(points[a], points[b]));
        // environmental selection never drops the best lower-level loss
        double best_log = 1e18, best_archive = 1e18;
        for (const auto& s : state.log) best_log = std::min(best_log, s.lower_loss);
        for (const auto& s : state.archive) best_archive = std::min(best_archive, s.lower_loss);
        CHECK(best_archive == best_log);
    }
    SUBCASE("tabu entries are pruned to archive membership") {
        for (const auto& p : state.tabu) {
            const bool in_archive =
                std::any_of(state.archive.begin(), state.archive.end(),
                            [&](const mots::EvaluatedSolution& s) { return s.pipeline == p; });
            CHECK(in_archive);
        }
    }
    SUBCASE("inducible region: lower_loss equals min of own history") {
        for (const auto& sol : state.log) {
            double min_loss = 1e18;
            for (const auto& t : sol.history.trials) min_loss = std::min(min_loss, t.loss);
            CHECK(sol.lower_loss == min_loss);
        }
    }
    SUBCASE("objective-map consistency to 1e-12") {
        for (const auto& sol : state.log)
            CHECK(sol.objectives[1] ==
                  doctest::Approx(1.0 - std::sqrt(1.0 - sol.objectives[0])).epsilon(1e-12));
    }
}

TEST_CASE("phase1 determinism: identical seeds give identical archives") {
    mots::RunBudgets budgets = small_budgets();
    auto one = make_search(budgets, 33);
    one.phase1();
    auto two = make_search(budgets, 33);
    two.phase1();
    REQUIRE(one.state().archive.size() == two.state().archive.size());
    for (std::size_t i = 0; i < one.state().archive.size(); ++i) {
        CHECK(one.state().archive[i].pipeline == two.state().archive[i].pipeline);
        CHECK(one.state().archive[i].lower_loss == two.state().archive[i].lower_loss);
    }
    REQUIRE(one.state().log.size() == two.state().log.size());
    for (std::size_t i = 0; i < one.state().log.size(); ++i)
        CHECK(one.state().log[i].pipeline == two.state().log[i].pipeline);
}

TEST_CASE("tabu non-re-evaluation holds across a real phase-1 run") {
    // Replay the recorded evaluate/prune events against an independent tabu
    // replica: no pipeline may be evaluated while listed.
    mots::RunBudgets budgets = small_budgets();
    budgets.phase1_evals = 80;
    auto search = make_search(budgets, 55);
    search.phase1();

    std::multiset<std::string> listed;
    std::size_t evaluations = 0;
    for (const auto& event : search.state().tabu_events) {
        if (event.kind == mots::TabuEvent::Kind::Evaluated) {
            CHECK(listed.count(event.key) == 0);
            listed.insert(event.key);
            ++evaluations;
        } else {
            listed.erase(event.key);
        }
    }
    CHECK(evaluations == search.state().log.size());
}
