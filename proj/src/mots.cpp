#include "cpdp/mots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cpdp::mots {

std::vector<double> objectives_from_loss(double lower_loss) {
    if (!(lower_loss >= -1e-9 && lower_loss <= 1.0 + 1e-9))
        throw OutOfRangeError("lower_loss must lie in [0, 1]");
    const double auc = std::clamp(1.0 - lower_loss, 0.0, 1.0);
    return {1.0 - auc, 1.0 - std::sqrt(auc)};
}

ObjectiveMap objective_map_by_id(const std::string& id) {
    if (id == "default") return [](double loss) { return objectives_from_loss(loss); };
    throw ConfigError("unknown objective map '" + id + "'");
}

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool not_worse = true;
    bool strictly_better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) not_worse = false;
        if (a[i] < b[i]) strictly_better = true;
    }
    return not_worse && strictly_better;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    for (const auto& p : points)
        if (p.size() != points.front().size())
            throw DimensionMismatchError("objective vectors differ in length");

    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) {
                dominated[i].push_back(j);
                ++count[j];
            } else if (dominates(points[j], points[i])) {
                dominated[j].push_back(i);
                ++count[i];
            }
        }

    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    const std::size_t m = front.front().size();
    constexpr double kInf = std::numeric_limits<double>::infinity();

    for (std::size_t obj = 0; obj < m; ++obj) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return front[a][obj] < front[b][obj];
        });
        dist[order.front()] = kInf;
        dist[order.back()] = kInf;
        const double range = front[order.back()][obj] - front[order.front()][obj];
        if (range <= 0.0) continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (dist[order[i]] != kInf)
                dist[order[i]] += (front[order[i + 1]][obj] - front[order[i - 1]][obj]) / range;
    }
    return dist;
}

void RunBudgets::validate() const {
    if (population < 1 || pool_capacity < 1 || ensemble_size < 1)
        throw ConfigError("population, pool and ensemble sizes must be positive");
    if (phase1_evals < 1 || phase2_evals < 0)
        throw ConfigError("phase budgets must be positive (B2 may be zero)");
    if (lower.max_evaluations < 1) throw BudgetZeroError("lower-level budget must be >= 1");
    if (pc < 0.0 || pc > 1.0 || eta_c <= 0.0 || eta_m <= 0.0)
        throw ConfigError("invalid variation parameters");
}

// ---------------------------------------------------------------------------
// Variation

double sbx_combine(double xi, double xj, double eta_c, rng::Stream& stream) {
    const double u = stream.uniform();
    const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta_c + 1.0))
                                 : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta_c + 1.0));
    return 0.5 * ((1.0 + beta) * xi + (1.0 - beta) * xj);
}

double pm_perturb(double x, double lo, double hi, double eta_m, rng::Stream& stream) {
    const double u = stream.uniform();
    const double delta = u < 0.5 ? std::pow(2.0 * u, 1.0 / (eta_m + 1.0)) - 1.0
                                 : 1.0 - std::pow(2.0 * (1.0 - u), 1.0 / (eta_m + 1.0));
    return x + delta * (hi - lo);
}

long long uniform_gene(rng::Stream& stream, std::size_t stage_size) {
    return static_cast<long long>(stream.index(stage_size));
}

std::vector<PipelineSpec> vary(const std::vector<EvaluatedSolution>& archive,
                               const RunBudgets& budgets, rng::Stream& stream) {
    const auto sizes = learners::portfolio().stage_sizes();
    constexpr std::size_t n_genes = 3;
    const double pm_prob = budgets.mutation_probability();

    std::vector<PipelineSpec> offspring;
    offspring.reserve(budgets.population);
    for (int child = 0; child < budgets.population; ++child) {
        const std::size_t a = stream.index(archive.size());
        std::size_t b = a;
        if (archive.size() > 1)
            while (b == a) b = stream.index(archive.size());
        const auto genes_of = [](const PipelineSpec& p) {
            return std::array<double, 3>{static_cast<double>(p.fs), static_cast<double>(p.tl),
                                         static_cast<double>(p.clf())};
        };
        const auto pa = genes_of(archive[a].pipeline);
        const auto pb = genes_of(archive[b].pipeline);

        std::array<long long, 3> genes{};
        for (std::size_t g = 0; g < n_genes; ++g) {
            const double lo = 0.0;
            const double hi = static_cast<double>(sizes[g] - 1);
            const double r1 = stream.uniform();
            if (r1 > 1.0 / static_cast<double>(n_genes)) {
                double v = pa[g];
                if (stream.uniform() <= budgets.pc) v = sbx_combine(pa[g], pb[g], budgets.eta_c, stream);
                if (stream.uniform() < pm_prob) v = pm_perturb(v, lo, hi, budgets.eta_m, stream);
                genes[g] = static_cast<long long>(std::clamp(std::round(v), lo, hi));
            } else {
                genes[g] = uniform_gene(stream, sizes[g]);
            }
        }
        offspring.push_back(PipelineSpec{static_cast<int>(genes[0]), static_cast<int>(genes[1]),
                                         {static_cast<int>(genes[2])}});
    }
    return offspring;
}

std::vector<PipelineSpec> neighbors(const PipelineSpec& p) {
    const auto sizes = learners::portfolio().stage_sizes();
    std::vector<PipelineSpec> out;
    for (int fs = 0; fs < static_cast<int>(sizes[0]); ++fs)
        if (fs != p.fs) out.push_back({fs, p.tl, p.clfs});
    for (int tl = 0; tl < static_cast<int>(sizes[1]); ++tl)
        if (tl != p.tl) out.push_back({p.fs, tl, p.clfs});
    if (!p.is_ensemble())
        for (int clf = 0; clf < static_cast<int>(sizes[2]); ++clf)
            if (clf != p.clf()) out.push_back({p.fs, p.tl, {clf}});
    return out;
}

// ---------------------------------------------------------------------------
// Search driver

namespace {
std::vector<EvaluatedSolution> select_impl(std::vector<EvaluatedSolution> solutions,
                                           std::size_t n) {
    if (solutions.size() <= n) return solutions;
    std::vector<std::vector<double>> points;
    points.reserve(solutions.size());
    for (const auto& s : solutions) points.push_back(s.objectives);
    const auto fronts = non_dominated_sort(points);

    std::vector<std::size_t> front_of(solutions.size(), 0);
    std::vector<double> crowd(solutions.size(), 0.0);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<std::vector<double>> front_points;
        for (std::size_t idx : fronts[f]) front_points.push_back(points[idx]);
        const auto d = crowding_distance(front_points);
        for (std::size_t i = 0; i < fronts[f].size(); ++i) {
            front_of[fronts[f][i]] = f;
            crowd[fronts[f][i]] = d[i];
        }
    }

    std::vector<std::size_t> order(solutions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (front_of[a] != front_of[b]) return front_of[a] < front_of[b];
        if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
        return a < b;
    });
    std::vector<EvaluatedSolution> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::move(solutions[order[i]]));
    return out;
}
}  // namespace

std::vector<EvaluatedSolution> environmental_select(std::vector<EvaluatedSolution> solutions,
                                                    std::size_t n) {
    return select_impl(std::move(solutions), n);
}

UpperSearch::UpperSearch(learners::DataDims dims, RunBudgets budgets, std::uint64_t seed,
                         ObjectiveMap objective_map, LossFn loss)
    : dims_(dims),
      budgets_(budgets),
      seed_(seed),
      objective_map_(std::move(objective_map)),
      loss_(std::move(loss)) {
    budgets_.validate();
    state_.pool.capacity = static_cast<std::size_t>(budgets_.pool_capacity);
}

bool UpperSearch::offer(const PipelineSpec& p, BudgetTracker& tracker) {
    if (state_.tabu.contains(p)) return false;
    if (tracker.exhausted()) return false;

    const std::string key = learners::pipeline_key(p);
    const int occurrence = state_.occurrences[key]++;
    const std::uint64_t tpe_seed =
        rng::derive(seed_, std::string_view{"lower"}, std::string_view{key}, occurrence);

    const auto space = learners::pipeline_space(p).resolve(dims_);
    tpe::LowerBudget lower = budgets_.lower;
    lower.max_evaluations = static_cast<int>(std::min<long long>(
        lower.max_evaluations, tracker.remaining()));

    const auto objective = [&](const Configuration& config) -> double {
        try {
            return loss_(p, config);
        } catch (const Error&) {
            return 1.0;  // degenerate trainings count as worst case
        }
    };
    auto history = tpe::tpe_optimize(space, objective, lower, tpe_seed);
    tracker.charge(history.budget_used);

    EvaluatedSolution sol;
    sol.pipeline = p;
    sol.best_config = history.best().config;
    sol.lower_loss = history.best().loss;
    sol.objectives = objective_map_(sol.lower_loss);
    sol.history = std::move(history);

    state_.tabu_events.push_back({TabuEvent::Kind::Evaluated, key});
    state_.log.push_back(sol);
    state_.archive.push_back(sol);
    state_.pool.members.push_back(std::move(sol));
    if (state_.pool.members.size() > state_.pool.capacity)
        state_.pool.members = select_impl(std::move(state_.pool.members), state_.pool.capacity);
    state_.tabu.insert(p);
    return true;
}

void UpperSearch::environmental_selection() {
    state_.archive =
        select_impl(std::move(state_.archive), static_cast<std::size_t>(budgets_.population));
    std::erase_if(state_.tabu, [&](const PipelineSpec& p) {
        const bool keep = std::any_of(state_.archive.begin(), state_.archive.end(),
                                      [&](const EvaluatedSolution& s) { return s.pipeline == p; });
        if (!keep)
            state_.tabu_events.push_back({TabuEvent::Kind::Pruned, learners::pipeline_key(p)});
        return !keep;
    });
}

void UpperSearch::phase1() {
    BudgetTracker tracker = make_phase1_tracker();
    const auto sizes = learners::portfolio().stage_sizes();

    rng::Stream init_stream(rng::derive(seed_, std::string_view{"upper"}, std::string_view{"init"}));
    int evaluated = 0;
    int attempts = 0;
    const int max_attempts = 100 * budgets_.population;
    while (evaluated < budgets_.population && !tracker.exhausted() && attempts < max_attempts) {
        ++attempts;
        PipelineSpec p{static_cast<int>(init_stream.index(sizes[0])),
                       static_cast<int>(init_stream.index(sizes[1])),
                       {static_cast<int>(init_stream.index(sizes[2]))}};
        if (offer(p, tracker)) ++evaluated;
    }

    std::size_t iteration = 0;
    int stalled_rounds = 0;
    while (!tracker.exhausted() && !state_.archive.empty()) {
        rng::Stream vary_stream(
            rng::derive(seed_, std::string_view{"upper"}, std::string_view{"vary"}, iteration));
        const auto offspring = vary(state_.archive, budgets_, vary_stream);
        bool progressed = false;
        for (const auto& child : offspring) {
            for (const auto& neighbor : neighbors(child)) {
                if (tracker.exhausted()) break;
                if (offer(neighbor, tracker)) progressed = true;
            }
            environmental_selection();
            if (tracker.exhausted()) break;
        }
        ++iteration;
        // The whole reachable neighbourhood can be tabu-listed; treat a long
        // streak of empty rounds as clean exhaustion.
        stalled_rounds = progressed ? 0 : stalled_rounds + 1;
        if (stalled_rounds > 1000) break;
    }
}

UpperSearch phase1_search(const data::DatasetBundle& bundle, const RunBudgets& budgets,
                          std::uint64_t seed, const ObjectiveMap& objective_map,
                          const LossFn& loss) {
    UpperSearch search(learners::bundle_dims(bundle), budgets, seed, objective_map, loss);
    search.phase1();
    return search;
}

}  // namespace cpdp::mots
