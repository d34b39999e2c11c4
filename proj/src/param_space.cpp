#include "cpdp/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cpdp::learners {

namespace {
double resolve_bound(const Bound& b, const DataDims& dims) {
    switch (b.ref) {
        case Bound::Ref::Literal:
            return b.value;
        case Bound::Ref::MaxSourceTargetRows:
            return static_cast<double>(std::max(dims.n_source_rows, dims.n_target_train_rows));
    }
    return b.value;
}
}  // namespace

ParamSpace ParamSpace::resolve(const DataDims& dims) const {
    ParamSpace out = *this;
    for (auto& spec : out.specs) {
        if (spec.kind == ParamKind::Categorical) continue;
        double lo = resolve_bound(spec.lo, dims);
        double hi = resolve_bound(spec.hi, dims);
        if (hi < lo) lo = hi;
        spec.lo = Bound::literal(lo);
        spec.hi = Bound::literal(hi);
    }
    out.resolved = true;
    return out;
}

const ParamSpec* ParamSpace::find(const std::string& name) const {
    for (const auto& spec : specs)
        if (spec.name == name) return &spec;
    return nullptr;
}

long long Configuration::get_int(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) throw BadConfigurationError("missing parameter '" + name + "'");
    if (const auto* v = std::get_if<long long>(&it->second)) return *v;
    if (const auto* v = std::get_if<double>(&it->second)) return std::llround(*v);
    throw BadConfigurationError("parameter '" + name + "' is not numeric");
}

double Configuration::get_real(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) throw BadConfigurationError("missing parameter '" + name + "'");
    if (const auto* v = std::get_if<double>(&it->second)) return *v;
    if (const auto* v = std::get_if<long long>(&it->second)) return static_cast<double>(*v);
    throw BadConfigurationError("parameter '" + name + "' is not numeric");
}

const std::string& Configuration::get_choice(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) throw BadConfigurationError("missing parameter '" + name + "'");
    if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
    throw BadConfigurationError("parameter '" + name + "' is not categorical");
}

void validate_configuration(const Configuration& config, const ParamSpace& space) {
    if (!space.resolved) throw BadConfigurationError("space is not resolved");
    for (const auto& spec : space.specs) {
        const auto it = config.values.find(spec.name);
        if (it == config.values.end())
            throw BadConfigurationError("missing parameter '" + spec.name + "'");
        switch (spec.kind) {
            case ParamKind::Integer: {
                const long long v = config.get_int(spec.name);
                if (v < std::llround(spec.lo.value) || v > std::llround(spec.hi.value))
                    throw BadConfigurationError("parameter '" + spec.name + "' out of bounds");
                break;
            }
            case ParamKind::Real: {
                const double v = config.get_real(spec.name);
                if (v < spec.lo.value || v > spec.hi.value)
                    throw BadConfigurationError("parameter '" + spec.name + "' out of bounds");
                break;
            }
            case ParamKind::Categorical: {
                const auto& v = config.get_choice(spec.name);
                if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end())
                    throw BadConfigurationError("parameter '" + spec.name + "' has unknown choice '" +
                                                v + "'");
                break;
            }
        }
    }
}

std::string to_string(const Configuration& config, const ParamSpace& space) {
    std::ostringstream out;
    bool first = true;
    char buf[64];
    for (const auto& spec : space.specs) {
        if (!first) out << ';';
        first = false;
        out << spec.name << '=';
        switch (spec.kind) {
            case ParamKind::Integer:
                out << config.get_int(spec.name);
                break;
            case ParamKind::Real:
                std::snprintf(buf, sizeof(buf), "%.17g", config.get_real(spec.name));
                out << buf;
                break;
            case ParamKind::Categorical:
                out << config.get_choice(spec.name);
                break;
        }
    }
    return out.str();
}

}  // namespace cpdp::learners
