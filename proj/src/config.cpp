#include "cpdp/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cpdp::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double parse_double(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& value, const std::string& where) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(where + ": expected an integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

}  // namespace

ens::QMode RunConfig::q_mode_enum() const {
    if (q_mode == "max_q") return ens::QMode::MaxQ;
    if (q_mode == "min_abs_q") return ens::QMode::MinAbsQ;
    throw ConfigError("q_mode must be max_q or min_abs_q, got '" + q_mode + "'");
}

void RunConfig::validate() const {
    if (data_paths.empty() && data_dir.empty())
        throw ConfigError("one of 'data' or 'data_dir' is required");
    if (target.empty()) throw ConfigError("'target' is required");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1)");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    budgets.validate();
    (void)q_mode_enum();
    (void)mots::objective_map_by_id(objective_map);
}

RunConfig parse_run_config_text(const std::string& text, const std::string& context) {
    RunConfig config;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = context + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");

        if (key == "data") config.data_paths = split_list(value);
        else if (key == "data_dir") config.data_dir = value;
        else if (key == "target") config.target = value;
        else if (key == "train_fraction") config.train_fraction = parse_double(value, where);
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(value, where));
        else if (key == "repeats") config.repeats = static_cast<int>(parse_int(value, where));
        else if (key == "out") config.out = value;
        else if (key == "b1") config.budgets.phase1_evals = parse_int(value, where);
        else if (key == "b2") config.budgets.phase2_evals = parse_int(value, where);
        else if (key == "bl")
            config.budgets.lower.max_evaluations = static_cast<int>(parse_int(value, where));
        else if (key == "b1_seconds") config.budgets.phase1_seconds = parse_double(value, where);
        else if (key == "b2_seconds") config.budgets.phase2_seconds = parse_double(value, where);
        else if (key == "bl_seconds") config.budgets.lower.max_seconds = parse_double(value, where);
        else if (key == "nu") config.budgets.population = static_cast<int>(parse_int(value, where));
        else if (key == "nc")
            config.budgets.pool_capacity = static_cast<int>(parse_int(value, where));
        else if (key == "ns")
            config.budgets.ensemble_size = static_cast<int>(parse_int(value, where));
        else if (key == "pc") config.budgets.pc = parse_double(value, where);
        else if (key == "eta_c") config.budgets.eta_c = parse_double(value, where);
        else if (key == "pm") config.budgets.pm = parse_double(value, where);
        else if (key == "eta_m") config.budgets.eta_m = parse_double(value, where);
        else if (key == "objective_map") config.objective_map = value;
        else if (key == "q_mode") config.q_mode = value;
        else if (key == "parallel_repeats") config.parallel_repeats = parse_bool(value, where);
        else throw ConfigError(where + ": unknown key '" + key + "'");
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    }
    return config;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config_text(buffer.str(), path.string());
}

}  // namespace cpdp::cli
