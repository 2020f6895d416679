#include "schema.hpp"

#include "melodic/types.hpp"

#include <cmath>
#include <map>

namespace melodic::cli {

// Defined in the generated schemas.cpp.
const char* schema_text(const std::string& name);

namespace {

bool has_type(const Json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    if (type == "integer") {
        return value.is_number_integer() || (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>());
    }
    if (type == "number") return value.is_number();
    return false;
}

// Numbers compare by value, so 1 and 1.0 match in enum/const.
bool same_value(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) return a.get<double>() == b.get<double>();
    return a == b;
}

class Checker {
public:
    explicit Checker(const Json& root) : root_(root) {}

    void check(const Json& value, const Json& s, const std::string& path) {
        if (s.contains("$ref")) {
            const std::string ref = s["$ref"].get<std::string>();
            const std::string prefix = "#/definitions/";
            if (ref.compare(0, prefix.size(), prefix) != 0) {
                fail(path, "unsupported $ref " + ref);
                return;
            }
            check(value, root_.at("definitions").at(ref.substr(prefix.size())), path);
            return;
        }
        if (s.contains("type")) {
            const Json& t = s["type"];
            bool ok = false;
            if (t.is_string()) {
                ok = has_type(value, t.get<std::string>());
            } else {
                for (const auto& alt : t) ok = ok || has_type(value, alt.get<std::string>());
            }
            if (!ok) {
                fail(path, "expected type " + t.dump());
                return;
            }
        }
        if (s.contains("const") && !same_value(value, s["const"])) fail(path, "expected " + s["const"].dump());
        if (s.contains("enum")) {
            bool found = false;
            for (const auto& option : s["enum"]) found = found || same_value(value, option);
            if (!found) fail(path, "value " + value.dump() + " not in " + s["enum"].dump());
        }
        if (s.contains("minimum") && value.is_number() && value.get<double>() < s["minimum"].get<double>()) {
            fail(path, "below minimum " + s["minimum"].dump());
        }
        if (s.contains("anyOf")) {
            bool any = false;
            for (const auto& alt : s["anyOf"]) {
                Checker sub(root_);
                sub.check(value, alt, path);
                any = any || sub.errors.empty();
            }
            if (!any) fail(path, "matches no alternative of anyOf");
        }
        if (value.is_object()) {
            if (s.contains("required")) {
                for (const auto& key : s["required"]) {
                    if (!value.contains(key.get<std::string>())) fail(path, "missing required key '" + key.get<std::string>() + "'");
                }
            }
            const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
            for (const auto& item : value.items()) {
                const std::string child = path + "." + item.key();
                if (s.contains("properties") && s["properties"].contains(item.key())) {
                    check(item.value(), s["properties"][item.key()], child);
                } else if (closed) {
                    fail(child, "unexpected key");
                }
            }
        }
        if (value.is_array()) {
            const std::size_t n = value.size();
            if (s.contains("minItems") && n < s["minItems"].get<std::size_t>()) fail(path, "too few items");
            if (s.contains("maxItems") && n > s["maxItems"].get<std::size_t>()) fail(path, "too many items");
            if (s.contains("items")) {
                for (std::size_t i = 0; i < n; ++i) check(value[i], s["items"], path + "[" + std::to_string(i) + "]");
            }
        }
    }

    std::vector<std::string> errors;

private:
    void fail(const std::string& path, const std::string& message) { errors.push_back(path + ": " + message); }

    const Json& root_;
};

}  // namespace

std::vector<std::string> schema_violations(const Json& document, const Json& s) {
    Checker checker(s);
    checker.check(document, s, "$");
    return checker.errors;
}

const Json& schema(const std::string& name) {
    static std::map<std::string, Json> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, Json::parse(schema_text(name))).first;
    return it->second;
}

void require_valid(const Json& document, const std::string& schema_name) {
    const auto errors = schema_violations(document, schema(schema_name));
    if (errors.empty()) return;
    std::string message = "emitted " + schema_name + " document violates its schema: " + errors.front();
    if (errors.size() > 1) message += " (+" + std::to_string(errors.size() - 1) + " more)";
    throw Error(message);
}

}  // namespace melodic::cli
