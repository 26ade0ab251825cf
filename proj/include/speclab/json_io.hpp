#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "speclab/filters.hpp"
#include "speclab/source.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

using json = nlohmann::json;

/// Malformed or inconsistent configuration; `field` names the offending JSON path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

std::string to_string(SystemFamily f);
std::string to_string(FilterFamily f);
std::string to_string(SourceStyle s);

json to_json(const SystemDescriptor& d);
json to_json(const FilterDescriptor& d);
json to_json(const SourceSpec& s);

/// Parsers reject unknown enum tags and wrongly typed fields with a ConfigError naming `path`.
SystemDescriptor system_from_json(const json& j, const std::string& path = "system");
FilterDescriptor filter_from_json(const json& j, double kappa_sq, const std::string& path = "filter");
SourceSpec source_from_json(const json& j, const std::string& path = "source");

/// Serialization with sorted keys and no whitespace, so equal documents hash equally.
std::string canonical_dump(const json& j);
std::uint64_t fnv1a64(const std::string& bytes);
/// 16 hex digits of fnv1a64(canonical_dump(j)).
std::string config_hash(const json& j);

} // namespace speclab
