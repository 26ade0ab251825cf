#include "speclab/json_io.hpp"

#include <cstdio>

namespace speclab {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key, std::string("wrong type (") + e.what() + ")");
    }
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError(path, "expected an object");
    }
}

} // namespace

std::string to_string(SystemFamily f) {
    switch (f) {
    case SystemFamily::torus:
        return "torus";
    case SystemFamily::sphere:
        return "sphere";
    case SystemFamily::powerlaw:
        return "powerlaw";
    }
    return "?";
}

std::string to_string(FilterFamily f) {
    switch (f) {
    case FilterFamily::krr:
        return "krr";
    case FilterFamily::iterated_ridge:
        return "iterated_ridge";
    case FilterFamily::gradient_flow:
        return "gradient_flow";
    case FilterFamily::gradient_descent:
        return "gradient_descent";
    }
    return "?";
}

std::string to_string(SourceStyle s) {
    return s == SourceStyle::exact_powerlaw ? "exact_powerlaw" : "gapped";
}

json to_json(const SystemDescriptor& d) {
    json j{{"family", to_string(d.family)}, {"beta", d.beta}, {"m_max", d.m_max}};
    switch (d.family) {
    case SystemFamily::torus:
        j["exact_series"] = d.exact_series;
        break;
    case SystemFamily::sphere:
        j["sphere_dim"] = d.sphere_dim;
        j["rule_exponent"] = d.rule_exponent;
        break;
    case SystemFamily::powerlaw:
        j["gamma"] = d.gamma;
        break;
    }
    return j;
}

json to_json(const FilterDescriptor& d) {
    json j{{"family", to_string(d.family)}};
    if (d.family == FilterFamily::iterated_ridge) {
        j["order"] = d.order;
    }
    if (d.family == FilterFamily::gradient_descent) {
        j["eta"] = d.eta;
    }
    return j;
}

json to_json(const SourceSpec& s) {
    json j{{"style", to_string(s.style)}, {"s", s.s}, {"blocks", s.blocks}};
    if (s.style == SourceStyle::gapped) {
        j["q"] = s.q;
    }
    return j;
}

SystemDescriptor system_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    SystemDescriptor d;
    const auto fam = get_or<std::string>(j, "family", "torus", path);
    if (fam == "torus") {
        d.family = SystemFamily::torus;
    } else if (fam == "sphere") {
        d.family = SystemFamily::sphere;
    } else if (fam == "powerlaw") {
        d.family = SystemFamily::powerlaw;
    } else {
        throw ConfigError(path + ".family", "unknown system family '" + fam + "'");
    }
    d.beta = get_or<double>(j, "beta", d.beta, path);
    d.gamma = get_or<double>(j, "gamma", d.gamma, path);
    d.sphere_dim = get_or<int>(j, "sphere_dim", d.sphere_dim, path);
    d.rule_exponent = get_or<double>(j, "rule_exponent", d.rule_exponent, path);
    d.m_max = get_or<int>(j, "m_max", d.m_max, path);
    d.exact_series = get_or<bool>(j, "exact_series", d.exact_series, path);
    if (!(d.beta > 1.0)) {
        throw ConfigError(path + ".beta", "must exceed 1");
    }
    if (d.m_max < 1) {
        throw ConfigError(path + ".m_max", "must be >= 1");
    }
    return d;
}

FilterDescriptor filter_from_json(const json& j, double kappa_sq, const std::string& path) {
    require_object(j, path);
    FilterDescriptor d;
    const auto fam = get_or<std::string>(j, "family", "krr", path);
    if (fam == "krr") {
        d.family = FilterFamily::krr;
    } else if (fam == "iterated_ridge") {
        d.family = FilterFamily::iterated_ridge;
        d.order = get_or<double>(j, "order", 2.0, path);
    } else if (fam == "gradient_flow") {
        d.family = FilterFamily::gradient_flow;
    } else if (fam == "gradient_descent") {
        d.family = FilterFamily::gradient_descent;
        if (j.contains("eta")) {
            d.eta = get_or<double>(j, "eta", 0.0, path);
        } else {
            // step size relative to the spectrum bound, eta = c / kappa^2
            d.eta = get_or<double>(j, "eta_times_kappa_sq", 0.4, path) / kappa_sq;
        }
    } else {
        throw ConfigError(path + ".family", "unknown filter family '" + fam + "'");
    }
    return d;
}

SourceSpec source_from_json(const json& j, const std::string& path) {
    require_object(j, path);
    SourceSpec s;
    const auto style = get_or<std::string>(j, "style", "exact_powerlaw", path);
    if (style == "exact_powerlaw") {
        s.style = SourceStyle::exact_powerlaw;
    } else if (style == "gapped") {
        s.style = SourceStyle::gapped;
    } else {
        throw ConfigError(path + ".style", "unknown source style '" + style + "'");
    }
    s.s = get_or<double>(j, "s", s.s, path);
    s.q = get_or<double>(j, "q", s.q, path);
    s.blocks = get_or<int>(j, "blocks", s.blocks, path);
    if (!(s.s > 0.0)) {
        throw ConfigError(path + ".s", "must be positive");
    }
    return s;
}

std::string canonical_dump(const json& j) {
    // nlohmann's default object type is an ordered std::map, so dump() is already key-sorted
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& j) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_dump(j))));
    return buf;
}

} // namespace speclab
