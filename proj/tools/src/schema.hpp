#pragma once

// Minimal JSON Schema (draft-07 subset) checker for the documents this tool
// emits. Supported keywords: type, properties, required,
// additionalProperties (boolean), items, minItems, maxItems, enum, const,
// minimum, anyOf and local $ref into #/definitions.

#include <json.hpp>

#include <string>
#include <vector>

namespace melodic::cli {

using Json = nlohmann::ordered_json;

/// Violations found, each prefixed with its JSON path. Empty means valid.
std::vector<std::string> schema_violations(const Json& document, const Json& schema);

/// Embedded schemas: "fit", "scan", "geometry", "dataset".
const Json& schema(const std::string& name);

/// Throws melodic::Error listing the first violations.
void require_valid(const Json& document, const std::string& schema_name);

}  // namespace melodic::cli
