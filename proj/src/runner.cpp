#include "cpdp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cpdp/dataspace.hpp"
#include "cpdp/ensemble.hpp"
#include "cpdp/metrics.hpp"
#include "cpdp/stats.hpp"

namespace cpdp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "cpdp-search/result/v1";
constexpr const char* kVersion = "0.1.0";

data::DatasetBundle load_bundle(const RunConfig& config) {
    std::vector<std::string> paths = config.data_paths;
    if (!config.data_dir.empty()) {
        if (!fs::is_directory(config.data_dir))
            throw MissingFileError("data_dir '" + config.data_dir + "' is not a directory");
        for (const auto& entry : fs::directory_iterator(config.data_dir))
            if (entry.path().extension() == ".csv") paths.push_back(entry.path().string());
        std::sort(paths.begin(), paths.end());
    }
    if (paths.empty()) throw MissingFileError("no dataset files configured");

    std::vector<data::ProjectData> projects;
    projects.reserve(paths.size());
    for (const auto& p : paths) projects.push_back(data::load_project_csv(p));
    auto bundle = data::make_bundle(projects, config.target, config.train_fraction, config.seed);
    return data::zscore_fit_apply(bundle);
}

ordered_json config_to_json(const learners::Configuration& config,
                            const learners::ParamSpace& space) {
    ordered_json out = ordered_json::object();
    for (const auto& spec : space.specs) {
        switch (spec.kind) {
            case learners::ParamKind::Integer:
                out[spec.name] = config.get_int(spec.name);
                break;
            case learners::ParamKind::Real:
                out[spec.name] = config.get_real(spec.name);
                break;
            case learners::ParamKind::Categorical:
                out[spec.name] = config.get_choice(spec.name);
                break;
        }
    }
    return out;
}

struct TestMetrics {
    double auc = 0.5, acc = 0.0, recall = 0.0, f1 = 0.0, mcc = 0.0;
    bool degenerate = false;
};

TestMetrics test_metrics(const mots::EvaluatedSolution& sol, const data::DatasetBundle& bundle,
                         std::uint64_t seed) {
    TestMetrics out;
    try {
        const auto model = ens::fit_any(sol.pipeline, sol.best_config, bundle, seed);
        const auto scores = model.predict(bundle.target_test.features);
        out.auc = metrics::auc_or_flag(bundle.target_test.labels, scores).value;
        const auto cm = metrics::confusion(bundle.target_test.labels, scores, 0.5);
        out.acc = metrics::accuracy(cm);
        out.recall = metrics::recall(cm);
        out.f1 = metrics::f1(cm);
        out.mcc = metrics::mcc(cm);
    } catch (const Error&) {
        out.degenerate = true;
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunOutput run_single(const RunConfig& config, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    RunConfig cfg = config;
    cfg.seed = seed;
    const auto bundle = load_bundle(cfg);

    const auto objective_map = mots::objective_map_by_id(cfg.objective_map);
    const auto loss = ens::make_bundle_loss(bundle, seed);

    auto search = mots::phase1_search(bundle, cfg.budgets, seed, objective_map, loss);

    // Phase-2 candidate pool: greedy ensemble selection with replacement over
    // the phase-1 survivors (final archive plus the running pool).
    std::vector<mots::EvaluatedSolution> survivors = search.state().archive;
    survivors.insert(survivors.end(), search.state().pool.members.begin(),
                     search.state().pool.members.end());
    const auto pool = ens::greedy_pool_select(
        survivors, static_cast<std::size_t>(cfg.budgets.pool_capacity), bundle, seed);

    ens::phase2_loop(search, pool, bundle, cfg.q_mode_enum());
    search.environmental_selection();
    const auto& archive = search.state().archive;

    const auto dims = learners::bundle_dims(bundle);

    ordered_json doc;
    doc["schema"] = kSchema;
    ordered_json meta;
    meta["seed"] = seed;
    meta["target"] = cfg.target;
    meta["train_fraction"] = cfg.train_fraction;
    ordered_json project_names = ordered_json::array();
    for (const auto& p : bundle.source) project_names.push_back(p.name);
    meta["source_projects"] = project_names;
    meta["feature_count"] = bundle.feature_count;
    meta["budgets"] = {{"b1", cfg.budgets.phase1_evals},
                       {"b2", cfg.budgets.phase2_evals},
                       {"bl", cfg.budgets.lower.max_evaluations},
                       {"b1_seconds", cfg.budgets.phase1_seconds},
                       {"b2_seconds", cfg.budgets.phase2_seconds},
                       {"bl_seconds", cfg.budgets.lower.max_seconds}};
    meta["params"] = {{"nu", cfg.budgets.population},
                      {"nc", cfg.budgets.pool_capacity},
                      {"ns", cfg.budgets.ensemble_size},
                      {"pc", cfg.budgets.pc},
                      {"eta_c", cfg.budgets.eta_c},
                      {"pm", cfg.budgets.mutation_probability()},
                      {"eta_m", cfg.budgets.eta_m}};
    meta["objective_map"] = cfg.objective_map;
    meta["q_mode"] = cfg.q_mode;
    meta["version"] = kVersion;
    doc["metadata"] = meta;

    const auto& reg = learners::portfolio();
    ordered_json archive_json = ordered_json::array();
    std::ostringstream csv;
    csv << "seed,target,fs,tl,clf,lower_loss,obj1,obj2,auc,acc,recall,f1,mcc,history_len\n";
    for (const auto& sol : archive) {
        const auto space = learners::pipeline_space(sol.pipeline).resolve(dims);
        const auto tm = test_metrics(sol, bundle, seed);

        ordered_json entry;
        entry["pipeline"] = {{"fs", reg.feature_selectors.at(sol.pipeline.fs).id},
                             {"tl", reg.transfer_learners.at(sol.pipeline.tl).id}};
        ordered_json clfs = ordered_json::array();
        for (int c : sol.pipeline.clfs) clfs.push_back(reg.classifiers.at(c).id);
        entry["pipeline"]["clf"] = clfs;
        entry["key"] = learners::pipeline_key(sol.pipeline);
        entry["config"] = config_to_json(sol.best_config, space);
        entry["lower_loss"] = sol.lower_loss;
        entry["objectives"] = sol.objectives;
        entry["history_len"] = sol.history_len();
        entry["metrics"] = {{"auc", tm.auc},   {"acc", tm.acc}, {"recall", tm.recall},
                            {"f1", tm.f1},     {"mcc", tm.mcc}, {"degenerate", tm.degenerate}};
        archive_json.push_back(entry);

        std::string clf_joined;
        for (std::size_t i = 0; i < sol.pipeline.clfs.size(); ++i) {
            if (i) clf_joined += '+';
            clf_joined += reg.classifiers.at(sol.pipeline.clfs[i]).id;
        }
        csv << seed << ',' << cfg.target << ',' << reg.feature_selectors.at(sol.pipeline.fs).id
            << ',' << reg.transfer_learners.at(sol.pipeline.tl).id << ',' << clf_joined << ','
            << format_double(sol.lower_loss) << ',' << format_double(sol.objectives.at(0)) << ','
            << format_double(sol.objectives.at(1)) << ',' << format_double(tm.auc) << ','
            << format_double(tm.acc) << ',' << format_double(tm.recall) << ','
            << format_double(tm.f1) << ',' << format_double(tm.mcc) << ',' << sol.history_len()
            << '\n';
    }
    doc["archive"] = archive_json;

    RunOutput out;
    out.document = std::move(doc);
    out.csv = csv.str();
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    out.wall_seconds = elapsed.count();
    return out;
}

std::vector<fs::path> run_experiment(const RunConfig& config, const std::string& out_override) {
    const fs::path out_dir = out_override.empty() ? fs::path(config.out) : fs::path(out_override);
    fs::create_directories(out_dir);

    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < config.repeats; ++r)
        seeds.push_back(config.seed + static_cast<std::uint64_t>(r));

    std::vector<RunOutput> outputs(seeds.size());
    if (config.parallel_repeats && seeds.size() > 1) {
        std::vector<std::future<RunOutput>> futures;
        futures.reserve(seeds.size());
        for (std::uint64_t s : seeds)
            futures.push_back(std::async(std::launch::async,
                                         [&config, s] { return run_single(config, s); }));
        for (std::size_t i = 0; i < futures.size(); ++i) outputs[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < seeds.size(); ++i) outputs[i] = run_single(config, seeds[i]);
    }

    std::vector<fs::path> written;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::string stem = config.target + "_seed" + std::to_string(seeds[i]);
        const fs::path json_path = out_dir / (stem + ".json");
        std::ofstream(json_path) << outputs[i].document.dump(2) << '\n';
        std::ofstream(out_dir / (stem + ".csv")) << outputs[i].csv;
        // Wall time is volatile; it lives in a sidecar so result files stay
        // byte-identical across identical runs.
        std::ofstream(out_dir / (stem + ".log"))
            << "wall_seconds=" << outputs[i].wall_seconds << '\n';
        written.push_back(json_path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// compare

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return quantile(0.75) - quantile(0.25);
}

}  // namespace

std::string compare_report(const std::vector<fs::path>& dirs, const std::string& metric,
                           double alpha) {
    static const std::set<std::string> kMetrics{"auc", "acc", "recall", "f1", "mcc"};
    if (!kMetrics.contains(metric)) throw ConfigError("unknown metric '" + metric + "'");
    if (dirs.size() < 2) throw ConfigError("compare needs at least two result directories");

    // method (dir order) -> target -> one value per repeat
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    for (const auto& dir : dirs) {
        const std::string method = dir.filename().empty() ? dir.string() : dir.filename().string();
        methods.push_back(method);
        if (!fs::is_directory(dir))
            throw MissingFileError("result directory '" + dir.string() + "' not found");
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            std::ifstream in(file);
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const std::exception&) {
                continue;
            }
            if (!doc.contains("schema") || doc["schema"] != kSchema) continue;
            const std::string target = doc["metadata"]["target"];
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& entry : doc["archive"])
                best = std::max(best, entry["metrics"][metric].get<double>());
            if (doc["archive"].empty()) continue;
            values[method][target].push_back(best);
        }
        if (values[method].empty())
            throw InsufficientRepeatsError("no result files found under '" + dir.string() + "'");
    }

    std::set<std::string> targets;
    for (const auto& [method, per_target] : values)
        for (const auto& [target, v] : per_target) targets.insert(target);

    std::ostringstream out;
    out << "metric: " << metric << "  alpha: " << alpha << "  reference: " << methods.front()
        << "\n";
    char buf[256];
    for (const auto& target : targets) {
        for (const auto& method : methods) {
            const auto it = values[method].find(target);
            if (it == values[method].end() || it->second.size() < 2)
                throw InsufficientRepeatsError("method '" + method + "' has < 2 repeats for '" +
                                               target + "'");
        }
        std::vector<stats::RunSample> groups;
        for (const auto& method : methods) groups.push_back({method, values[method][target]});
        const auto ranks = stats::scott_knott(groups, alpha);
        const auto& ref = values[methods.front()][target];

        out << "\n== dataset: " << target << " ==\n";
        std::snprintf(buf, sizeof(buf), "%-24s %4s %10s %10s %10s %5s %7s %8s %4s\n", "method", "n",
                      "median", "iqr", "p", "mark", "a12", "effect", "rank");
        out << buf;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const auto& sample = values[methods[m]][target];
            std::string p_text = "-", mark = "-", a12_text = "-", effect = "-";
            if (m > 0) {
                const double p = stats::wilcoxon_rank_sum(ref, sample);
                const double effect_size = stats::a12(ref, sample);
                // dagger: reference significantly better; double dagger: worse
                mark = p >= alpha ? "≈" : (effect_size > 0.5 ? "†" : "‡");
                std::snprintf(buf, sizeof(buf), "%.5f", p);
                p_text = buf;
                std::snprintf(buf, sizeof(buf), "%.4f", effect_size);
                a12_text = buf;
                effect = stats::a12_bucket(effect_size);
            }
            std::snprintf(buf, sizeof(buf), "%-24s %4zu %10.5f %10.5f %10s %5s %7s %8s %4d\n",
                          methods[m].c_str(), sample.size(), median_of(sample), iqr_of(sample),
                          p_text.c_str(), mark.c_str(), a12_text.c_str(), effect.c_str(),
                          ranks[m]);
            out << buf;
        }
    }
    return out.str();
}

std::vector<fs::path> write_synth_dataset(std::size_t projects, std::size_t rows,
                                          std::size_t features, double shift, std::uint64_t seed,
                                          const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const auto generated = data::synth_cpdp(projects, rows, features, shift, seed);
    std::vector<fs::path> written;
    for (const auto& project : generated) {
        const fs::path path = out_dir / (project.name + ".csv");
        data::write_project_csv(project, path);
        written.push_back(path);
    }
    return written;
}

}  // namespace cpdp::cli
