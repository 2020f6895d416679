#include "melodic/data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace melodic {

using json = nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
    throw InputError("config " + path + ": " + message);
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

Matrix matrix_from_json(const json& j, const std::string& name) {
    if (!j.is_array()) throw InputError("dataset document: '" + name + "' must be an array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols) throw InputError("dataset document: ragged '" + name + "'");
        for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path, "expected a list of names");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) schema_error(path + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

}  // namespace

void IngestConfig::validate() const {
    if (predictor_columns.empty()) throw InputError("no predictor columns given");
    if (response_columns.empty()) throw InputError("no response columns given");
    std::set<std::string> seen;
    for (const auto& name : predictor_columns)
        if (!seen.insert(name).second) throw InputError("column '" + name + "' listed twice");
    for (const auto& name : response_columns)
        if (!seen.insert(name).second) throw InputError("column '" + name + "' is listed twice or as both predictor and response");
    if (prevalence_bounds) {
        const auto [low, high] = *prevalence_bounds;
        if (!(low >= 0.0 && low < high && high <= 1.0)) {
            throw InputError("prevalence bounds must satisfy 0 <= low < high <= 1");
        }
    }
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("column '" + name + "' not found in CSV header");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv_table(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            if (trim(line).empty()) continue;
            table.header = split_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw InputError("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                             " fields, header has " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InputError("CSV input has no header row");
    return table;
}

CsvTable read_csv_table(const std::string& path) {
    return parse_csv_table(read_text_file(path));
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
    const std::string where = " at data row " + std::to_string(row + 1) + ", column '" + column + "'";
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        throw InputError("missing value" + where);
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw InputError("non-numeric value '" + cell + "'" + where);
    }
    return value;
}

Dataset dataset_from_table(const CsvTable& table, const IngestConfig& ingest, std::vector<std::string>* notices) {
    ingest.validate();
    const std::size_t n = table.rows.size();
    if (n < 2) throw InputError("CSV input needs at least two data rows");

    Matrix raw_x(static_cast<Index>(n), static_cast<Index>(ingest.predictor_columns.size()));
    for (std::size_t j = 0; j < ingest.predictor_columns.size(); ++j) {
        const std::string& name = ingest.predictor_columns[j];
        const std::size_t c = table.column(name);
        for (std::size_t i = 0; i < n; ++i) raw_x(static_cast<Index>(i), static_cast<Index>(j)) = parse_number(table.rows[i][c], i, name);
    }

    std::vector<std::string> kept;
    std::vector<Vector> columns;
    for (const std::string& name : ingest.response_columns) {
        const std::size_t c = table.column(name);
        const auto rule = ingest.binarize_thresholds.find(name);
        Vector y(static_cast<Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double v = parse_number(table.rows[i][c], i, name);
            if (rule != ingest.binarize_thresholds.end()) {
                y(static_cast<Index>(i)) = v >= rule->second ? 1.0 : 0.0;
            } else if (v == 0.0 || v == 1.0) {
                y(static_cast<Index>(i)) = v;
            } else {
                throw InputError("response value '" + table.rows[i][c] + "' at data row " + std::to_string(i + 1) +
                                 ", column '" + name + "' is not 0/1 and no binarize rule is configured");
            }
        }
        const double prevalence = y.mean();
        if (ingest.prevalence_bounds) {
            const auto [low, high] = *ingest.prevalence_bounds;
            if (prevalence < low || prevalence > high) {
                if (notices) {
                    std::ostringstream msg;
                    msg << "dropped response '" << name << "': prevalence " << prevalence << " outside [" << low
                        << ", " << high << "]";
                    notices->push_back(msg.str());
                }
                continue;
            }
        }
        if (prevalence == 0.0 || prevalence == 1.0) {
            throw InputError("response '" + name + "' has zero variance");
        }
        kept.push_back(name);
        columns.push_back(std::move(y));
    }
    if (kept.empty()) throw InputError("no responses left after prevalence filtering");

    Matrix y(static_cast<Index>(n), static_cast<Index>(kept.size()));
    for (std::size_t r = 0; r < columns.size(); ++r) y.col(static_cast<Index>(r)) = columns[r];

    return Dataset::from_raw(raw_x, y, ingest.standardize ? Preprocessing::Standardize : Preprocessing::Center,
                             ingest.predictor_columns, std::move(kept), ingest.sd_ddof);
}

Dataset load_csv(const std::string& path, const IngestConfig& ingest, std::vector<std::string>* notices) {
    return dataset_from_table(read_csv_table(path), ingest, notices);
}

RunConfig parse_fit_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("$", "expected an object");

    static const std::set<std::string> known = {"dimensions", "constraints", "standardize", "tol",
                                                "max_iter", "restarts", "prevalence_bounds", "predictors",
                                                "responses", "binarize", "location_rule", "seed", "sd_ddof"};
    for (const auto& item : doc.items())
        if (!known.count(item.key())) schema_error("$." + item.key(), "unknown key");

    RunConfig cfg;
    if (!doc.contains("dimensions")) schema_error("$.dimensions", "required key missing");
    if (!doc["dimensions"].is_number_integer()) schema_error("$.dimensions", "expected an integer");
    cfg.fit.dimensions = doc["dimensions"].get<Index>();
    if (cfg.fit.dimensions < 1) schema_error("$.dimensions", "must be at least 1");

    if (doc.contains("tol")) {
        if (!doc["tol"].is_number()) schema_error("$.tol", "expected a number");
        cfg.fit.tol = doc["tol"].get<double>();
        if (!(cfg.fit.tol > 0.0)) schema_error("$.tol", "must be positive");
    }
    if (doc.contains("max_iter")) {
        if (!doc["max_iter"].is_number_integer()) schema_error("$.max_iter", "expected an integer");
        cfg.fit.max_iter = doc["max_iter"].get<int>();
        if (cfg.fit.max_iter < 1) schema_error("$.max_iter", "must be at least 1");
    }
    if (doc.contains("restarts")) {
        if (!doc["restarts"].is_number_integer()) schema_error("$.restarts", "expected an integer");
        cfg.fit.restarts = doc["restarts"].get<int>();
        if (cfg.fit.restarts < 0) schema_error("$.restarts", "must be non-negative");
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) schema_error("$.seed", "expected a non-negative integer");
        cfg.fit.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("location_rule")) {
        const json& rule = doc["location_rule"];
        if (rule == "minimal_norm") cfg.fit.location_rule = LocationRule::MinimalNorm;
        else if (rule == "equal_split") cfg.fit.location_rule = LocationRule::EqualSplit;
        else schema_error("$.location_rule", "expected \"minimal_norm\" or \"equal_split\"");
    }
    if (doc.contains("standardize")) {
        if (!doc["standardize"].is_boolean()) schema_error("$.standardize", "expected a boolean");
        cfg.ingest.standardize = doc["standardize"].get<bool>();
    }
    if (doc.contains("sd_ddof")) {
        if (!doc["sd_ddof"].is_number_integer() || (doc["sd_ddof"] != 0 && doc["sd_ddof"] != 1)) {
            schema_error("$.sd_ddof", "expected 0 or 1");
        }
        cfg.ingest.sd_ddof = doc["sd_ddof"].get<int>();
    }
    if (doc.contains("predictors")) cfg.ingest.predictor_columns = string_list(doc["predictors"], "$.predictors");
    if (doc.contains("responses")) cfg.ingest.response_columns = string_list(doc["responses"], "$.responses");

    if (doc.contains("prevalence_bounds") && !doc["prevalence_bounds"].is_null()) {
        const json& b = doc["prevalence_bounds"];
        if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
            schema_error("$.prevalence_bounds", "expected a pair of numbers");
        }
        const double low = b[0].get<double>();
        const double high = b[1].get<double>();
        if (!(low >= 0.0 && low < high && high <= 1.0)) {
            schema_error("$.prevalence_bounds", "must satisfy 0 <= low < high <= 1");
        }
        cfg.ingest.prevalence_bounds = std::make_pair(low, high);
    }
    if (doc.contains("binarize")) {
        const json& b = doc["binarize"];
        if (!b.is_object()) schema_error("$.binarize", "expected an object of response -> threshold");
        for (const auto& item : b.items()) {
            if (!item.value().is_number()) schema_error("$.binarize." + item.key(), "expected a number");
            cfg.ingest.binarize_thresholds[item.key()] = item.value().get<double>();
        }
    }

    if (doc.contains("constraints") && !doc["constraints"].is_null()) {
        const json& rows = doc["constraints"];
        if (!rows.is_array()) schema_error("$.constraints", "expected a list of rows");
        if (!rows.empty()) {
            const std::size_t width = rows[0].is_array() ? rows[0].size() : 0;
            Eigen::MatrixXi pattern(static_cast<Index>(rows.size()), static_cast<Index>(width));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::string path = "$.constraints[" + std::to_string(r) + "]";
                if (!rows[r].is_array()) schema_error(path, "expected a list of 0/1 entries");
                if (rows[r].size() != width) schema_error(path, "row width differs from the first row");
                int ones = 0;
                for (std::size_t m = 0; m < width; ++m) {
                    const json& e = rows[r][m];
                    if (!e.is_number_integer() || (e != 0 && e != 1)) {
                        schema_error(path + "[" + std::to_string(m) + "]", "expected 0 or 1");
                    }
                    pattern(static_cast<Index>(r), static_cast<Index>(m)) = e.get<int>();
                    ones += e.get<int>();
                }
                if (ones == 0) schema_error(path, "response pertains to no dimension");
            }
            if (static_cast<Index>(width) != cfg.fit.dimensions) {
                schema_error("$.constraints", "width " + std::to_string(width) + " does not match dimensions " +
                                                  std::to_string(cfg.fit.dimensions));
            }
            try {
                cfg.fit.assignment = DimensionAssignment(pattern);
            } catch (const InputError& e) {
                schema_error("$.constraints", e.what());
            }
        }
    }
    return cfg;
}

RunConfig parse_fit_config(const std::string& path) {
    return parse_fit_config_text(read_text_file(path));
}

std::string dataset_to_json(const Dataset& data) {
    json doc;
    doc["format"] = "melodic.dataset/1";
    doc["predictor_names"] = data.predictor_names;
    doc["response_names"] = data.response_names;
    doc["preprocessing"] = data.preprocessing == Preprocessing::None     ? "none"
                           : data.preprocessing == Preprocessing::Center ? "center"
                                                                         : "standardize";
    doc["sd_ddof"] = data.sd_ddof;
    doc["centering_offsets"] = vector_to_json(data.centering_offsets);
    doc["scaling_factors"] = vector_to_json(data.scaling_factors);
    doc["predictor_sd"] = vector_to_json(data.predictor_sd);
    doc["X"] = matrix_to_json(data.X);
    doc["Y"] = matrix_to_json(data.Y);
    doc["G"] = matrix_to_json(data.G);
    return doc.dump(1);
}

Dataset dataset_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("dataset document is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "melodic.dataset/1") throw InputError("not a melodic.dataset/1 document");
    try {
        Dataset d;
        d.predictor_names = doc.at("predictor_names").get<std::vector<std::string>>();
        d.response_names = doc.at("response_names").get<std::vector<std::string>>();
        const std::string prep = doc.at("preprocessing").get<std::string>();
        d.preprocessing = prep == "none" ? Preprocessing::None
                          : prep == "center" ? Preprocessing::Center
                                             : Preprocessing::Standardize;
        d.sd_ddof = doc.at("sd_ddof").get<int>();
        d.centering_offsets = vector_from_json(doc.at("centering_offsets"));
        d.scaling_factors = vector_from_json(doc.at("scaling_factors"));
        d.predictor_sd = vector_from_json(doc.at("predictor_sd"));
        d.X = matrix_from_json(doc.at("X"), "X");
        d.Y = matrix_from_json(doc.at("Y"), "Y");
        d.G = matrix_from_json(doc.at("G"), "G");
        d.validate();
        return d;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed dataset document: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace melodic
