#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cpdp/errors.hpp"

namespace cpdp::learners {

enum class ParamKind { Integer, Real, Categorical };

/// Bound that may reference dataset sizes, resolved before sampling.
struct Bound {
    enum class Ref { Literal, MaxSourceTargetRows };
    double value = 0.0;
    Ref ref = Ref::Literal;

    static Bound literal(double v) { return {v, Ref::Literal}; }
    static Bound max_ns_nt() { return {0.0, Ref::MaxSourceTargetRows}; }
};

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Real;
    Bound lo;
    Bound hi;
    std::vector<std::string> choices;  // categorical only

    static ParamSpec integer(std::string name, Bound lo, Bound hi) {
        return {std::move(name), ParamKind::Integer, lo, hi, {}};
    }
    static ParamSpec real(std::string name, double lo, double hi) {
        return {std::move(name), ParamKind::Real, Bound::literal(lo), Bound::literal(hi), {}};
    }
    static ParamSpec categorical(std::string name, std::vector<std::string> choices) {
        return {std::move(name), ParamKind::Categorical, {}, {}, std::move(choices)};
    }
};

/// Dataset sizes available to data-dependent bounds.
struct DataDims {
    std::size_t n_source_rows = 0;
    std::size_t n_target_train_rows = 0;
};

/// Ordered parameter space. `resolved` spaces have concrete lo <= hi bounds.
struct ParamSpace {
    std::vector<ParamSpec> specs;
    bool resolved = false;

    /// Resolves data-dependent bounds against the dataset sizes; enforces
    /// lo <= hi by pulling the lower bound down when necessary.
    ParamSpace resolve(const DataDims& dims) const;

    const ParamSpec* find(const std::string& name) const;
};

using ParamValue = std::variant<long long, double, std::string>;

/// One assignment of values to every spec of a resolved ParamSpace.
struct Configuration {
    std::map<std::string, ParamValue> values;

    long long get_int(const std::string& name) const;
    double get_real(const std::string& name) const;
    const std::string& get_choice(const std::string& name) const;
    bool get_flag(const std::string& name) const { return get_choice(name) == "true"; }
};

/// Throws BadConfigurationError unless every spec has an in-bounds value.
void validate_configuration(const Configuration& config, const ParamSpace& space);

/// Canonical text form (spec order), used in result files.
std::string to_string(const Configuration& config, const ParamSpace& space);

}  // namespace cpdp::learners
