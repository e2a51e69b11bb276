#include "hmsched/searchspace.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hmsched/errors.hpp"
#include "hmsched/sobol.hpp"

namespace hmsched {

ParamDef ParamDef::continuous(std::string name, double lo, double hi)
{
    ParamDef p;
    p.name = std::move(name);
    p.kind = ParamKind::Continuous;
    p.lo = lo;
    p.hi = hi;
    return p;
}

ParamDef ParamDef::integer(std::string name, std::int64_t lo, std::int64_t hi)
{
    ParamDef p;
    p.name = std::move(name);
    p.kind = ParamKind::Integer;
    p.lo = static_cast<double>(lo);
    p.hi = static_cast<double>(hi);
    return p;
}

ParamDef ParamDef::categorical(std::string name, std::vector<std::string> options)
{
    ParamDef p;
    p.name = std::move(name);
    p.kind = ParamKind::Categorical;
    p.lo = 0.0;
    p.hi = 0.0;
    p.options = std::move(options);
    return p;
}

double DesignPoint::real(const std::string& name) const
{
    const auto& v = values.at(name);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw DomainError("parameter '" + name + "' is not numeric");
}

std::int64_t DesignPoint::integer(const std::string& name) const
{
    const auto& v = values.at(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    throw DomainError("parameter '" + name + "' is not an integer");
}

const std::string& DesignPoint::category(const std::string& name) const
{
    const auto& v = values.at(name);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw DomainError("parameter '" + name + "' is not categorical");
}

std::string to_string(const ParamValue& v)
{
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    std::ostringstream ss;
    ss << std::get<double>(v);
    return ss.str();
}

std::size_t SearchSpace::dimension() const
{
    std::size_t d = 0;
    for (const auto& p : params) d += p.width();
    return d;
}

const ParamDef* SearchSpace::find(const std::string& name) const
{
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<std::string> SearchSpace::encoded_names() const
{
    std::vector<std::string> names;
    for (const auto& p : params) {
        if (p.kind == ParamKind::Categorical) {
            for (const auto& o : p.options) names.push_back(p.name + "=" + o);
        } else {
            names.push_back(p.name);
        }
    }
    return names;
}

std::vector<std::size_t> SearchSpace::encoded_owner() const
{
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < params.size(); ++i) {
        owner.insert(owner.end(), params[i].width(), i);
    }
    return owner;
}

std::vector<std::string> SearchSpace::definition_violations() const
{
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& p : params) {
        if (p.name.empty()) out.emplace_back("parameter with empty name");
        if (!seen.insert(p.name).second) out.emplace_back("duplicate parameter '" + p.name + "'");
        switch (p.kind) {
        case ParamKind::Continuous:
            if (!(p.lo < p.hi)) out.emplace_back(p.name + ": continuous bounds need lo < hi");
            break;
        case ParamKind::Integer:
            if (!(p.lo <= p.hi) || p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi)) {
                out.emplace_back(p.name + ": integer bounds need integral lo <= hi");
            }
            break;
        case ParamKind::Categorical:
            if (p.options.size() < 2) out.emplace_back(p.name + ": categorical needs at least 2 options");
            break;
        }
    }
    for (const auto& p : params) {
        if (!p.conditional_on) continue;
        const auto* parent = find(p.conditional_on->param);
        if (!parent) {
            out.emplace_back(p.name + ": conditional references unknown parameter '" + p.conditional_on->param + "'");
        } else if (parent->kind != ParamKind::Categorical) {
            out.emplace_back(p.name + ": conditional parent must be categorical");
        } else if (parent->conditional_on) {
            out.emplace_back(p.name + ": nested conditionals are not supported");
        } else {
            for (const auto& v : p.conditional_on->values) {
                if (std::find(parent->options.begin(), parent->options.end(), v) == parent->options.end()) {
                    out.emplace_back(p.name + ": conditional value '" + v + "' is not an option of " + parent->name);
                }
            }
        }
    }
    for (const auto& name : at_least_one) {
        const auto* p = find(name);
        if (!p || p->kind != ParamKind::Integer || p->conditional_on) {
            out.emplace_back("at-least-one constraint needs unconditional integer parameter '" + name + "'");
        }
    }
    return out;
}

SearchSpace default_space()
{
    SearchSpace s;
    s.params = {
        ParamDef::continuous("freq_little_ghz", 0.5, 1.5),
        ParamDef::integer("count_little", 0, 4),
        ParamDef::continuous("freq_medium_ghz", 1.0, 2.5),
        ParamDef::integer("count_medium", 0, 4),
        ParamDef::continuous("freq_big_ghz", 1.5, 3.5),
        ParamDef::integer("count_big", 0, 4),
        ParamDef::categorical("scheduler", {"FCFS", "RR", "Priority"}),
        ParamDef::continuous("quantum_ms", 0.5, 5.0),
    };
    s.params.back().conditional_on = Conditional{"scheduler", {"RR", "Priority"}};
    s.at_least_one = {"count_little", "count_medium", "count_big"};
    return s;
}

namespace {

bool is_active(const ParamDef& p, const std::map<std::string, ParamValue>& values)
{
    if (!p.conditional_on) return true;
    auto it = values.find(p.conditional_on->param);
    if (it == values.end()) return false;
    const auto* s = std::get_if<std::string>(&it->second);
    if (!s) return false;
    const auto& accepted = p.conditional_on->values;
    return std::find(accepted.begin(), accepted.end(), *s) != accepted.end();
}

double unit(double v, double lo, double hi)
{
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
}

}  // namespace

std::vector<std::string> validate(const DesignPoint& point, const SearchSpace& space)
{
    std::vector<std::string> out;
    for (const auto& [name, value] : point.values) {
        if (!space.find(name)) out.emplace_back("unknown parameter '" + name + "'");
    }
    for (const auto& p : space.params) {
        const bool active = is_active(p, point.values);
        auto it = point.values.find(p.name);
        if (!active) {
            if (it != point.values.end()) {
                out.emplace_back(p.name + " must be absent unless " + p.conditional_on->param + " is one of the gating values");
            }
            continue;
        }
        if (it == point.values.end()) {
            out.emplace_back(p.name + " is missing");
            continue;
        }
        const auto& v = it->second;
        switch (p.kind) {
        case ParamKind::Continuous: {
            const auto* d = std::get_if<double>(&v);
            if (!d) {
                out.emplace_back(p.name + " must be a real number");
            } else if (!(*d >= p.lo && *d <= p.hi)) {
                std::ostringstream ss;
                ss << p.name << " = " << *d << " outside [" << p.lo << ", " << p.hi << "]";
                out.push_back(ss.str());
            }
            break;
        }
        case ParamKind::Integer: {
            const auto* i = std::get_if<std::int64_t>(&v);
            if (!i) {
                out.emplace_back(p.name + " must be an integer");
            } else if (static_cast<double>(*i) < p.lo || static_cast<double>(*i) > p.hi) {
                std::ostringstream ss;
                ss << p.name << " = " << *i << " outside {" << p.lo << ".." << p.hi << "}";
                out.push_back(ss.str());
            }
            break;
        }
        case ParamKind::Categorical: {
            const auto* s = std::get_if<std::string>(&v);
            if (!s) {
                out.emplace_back(p.name + " must be a string option");
            } else if (std::find(p.options.begin(), p.options.end(), *s) == p.options.end()) {
                out.emplace_back(p.name + " = '" + *s + "' is not an option");
            }
            break;
        }
        }
    }
    if (!space.at_least_one.empty()) {
        std::int64_t total = 0;
        bool all_present = true;
        for (const auto& name : space.at_least_one) {
            auto it = point.values.find(name);
            if (it == point.values.end() || !std::holds_alternative<std::int64_t>(it->second)) {
                all_present = false;
                break;
            }
            total += std::get<std::int64_t>(it->second);
        }
        if (all_present && total < 1) out.emplace_back("total core count must be at least 1");
    }
    return out;
}

std::vector<double> encode(const DesignPoint& point, const SearchSpace& space)
{
    if (auto v = validate(point, space); !v.empty()) {
        throw ValidationError(std::move(v));
    }
    std::vector<double> x;
    x.reserve(space.dimension());
    for (const auto& p : space.params) {
        auto it = point.values.find(p.name);
        switch (p.kind) {
        case ParamKind::Continuous:
        case ParamKind::Integer:
            x.push_back(it == point.values.end() ? 0.5 : unit(point.real(p.name), p.lo, p.hi));
            break;
        case ParamKind::Categorical: {
            const std::size_t base = x.size();
            x.insert(x.end(), p.options.size(), 0.0);
            if (it == point.values.end()) {
                std::fill(x.begin() + static_cast<std::ptrdiff_t>(base), x.end(), 0.5);
            } else {
                const auto pos = std::find(p.options.begin(), p.options.end(), std::get<std::string>(it->second));
                x[base + static_cast<std::size_t>(pos - p.options.begin())] = 1.0;
            }
            break;
        }
        }
    }
    return x;
}

DecodeResult decode_with_info(std::span<const double> vec, const SearchSpace& space)
{
    if (vec.size() != space.dimension()) {
        throw DomainError("decode: expected " + std::to_string(space.dimension()) + " coordinates, got " +
                          std::to_string(vec.size()));
    }
    DecodeResult out;
    auto& values = out.point.values;
    std::map<std::string, double> raw;
    std::size_t pos = 0;
    for (const auto& p : space.params) {
        switch (p.kind) {
        case ParamKind::Continuous: {
            const double u = std::clamp(vec[pos], 0.0, 1.0);
            values[p.name] = std::clamp(p.lo + u * (p.hi - p.lo), p.lo, p.hi);
            raw[p.name] = u;
            ++pos;
            break;
        }
        case ParamKind::Integer: {
            const double u = std::clamp(vec[pos], 0.0, 1.0);
            const double r = std::clamp(std::round(p.lo + u * (p.hi - p.lo)), p.lo, p.hi);
            values[p.name] = static_cast<std::int64_t>(r);
            raw[p.name] = u;
            ++pos;
            break;
        }
        case ParamKind::Categorical: {
            std::size_t best = 0;
            for (std::size_t k = 1; k < p.options.size(); ++k) {
                if (vec[pos + k] > vec[pos + best]) best = k;
            }
            values[p.name] = p.options[best];
            pos += p.options.size();
            break;
        }
        }
    }
    for (const auto& p : space.params) {
        if (!is_active(p, values)) values.erase(p.name);
    }
    if (!space.at_least_one.empty()) {
        std::int64_t total = 0;
        for (const auto& name : space.at_least_one) total += std::get<std::int64_t>(values.at(name));
        if (total < 1) {
            // Bump the member whose coordinate came closest to rounding up.
            const std::string* pick = &space.at_least_one.front();
            for (const auto& name : space.at_least_one) {
                if (raw.at(name) > raw.at(*pick)) pick = &name;
            }
            const auto* def = space.find(*pick);
            values[*pick] = std::max<std::int64_t>(1, static_cast<std::int64_t>(def->lo));
            out.repaired = true;
        }
    }
    return out;
}

DesignPoint decode(std::span<const double> vec, const SearchSpace& space)
{
    return decode_with_info(vec, space).point;
}

std::vector<DesignPoint> sobol_sample(std::size_t n, const SearchSpace& space, std::uint64_t /*seed*/)
{
    std::vector<DesignPoint> out;
    if (n == 0) return out;
    const auto d = space.dimension();
    if (d > static_cast<std::size_t>(SobolSequence::kMaxDimension)) {
        throw DomainError("sobol_sample: search space has too many encoded dimensions");
    }
    const SobolSequence sobol(static_cast<int>(d));
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = sobol.point(i + 1);
        out.push_back(decode(x, space));
    }
    return out;
}

DesignPoint random_sample(const SearchSpace& space, Rng& rng)
{
    for (;;) {
        DesignPoint point;
        for (const auto& p : space.params) {
            switch (p.kind) {
            case ParamKind::Continuous:
                point.values[p.name] = rng.uniform(p.lo, p.hi);
                break;
            case ParamKind::Integer:
                point.values[p.name] =
                    rng.uniform_int(static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi));
                break;
            case ParamKind::Categorical:
                point.values[p.name] =
                    p.options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.options.size()) - 1))];
                break;
            }
        }
        for (const auto& p : space.params) {
            if (!is_active(p, point.values)) point.values.erase(p.name);
        }
        std::int64_t total = 0;
        for (const auto& name : space.at_least_one) total += point.integer(name);
        if (space.at_least_one.empty() || total >= 1) return point;
    }
}

}  // namespace hmsched
