#pragma once

#include "melodic/solver.hpp"
#include "melodic/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace melodic {

struct IngestConfig {
    std::vector<std::string> predictor_columns;
    std::vector<std::string> response_columns;
    bool standardize = true;
    int sd_ddof = 1;
    // Raw response value v maps to 1 when v >= threshold, else 0.
    std::map<std::string, double> binarize_thresholds;
    // Responses whose prevalence of 1s falls outside [low, high] are dropped.
    std::optional<std::pair<double, double>> prevalence_bounds;

    void validate() const;
};

struct RunConfig {
    FitConfig fit;
    IngestConfig ingest;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Throws InputError when the column is absent.
    std::size_t column(const std::string& name) const;
};

/// Comma-separated, header row, '.' decimal point. Double-quoted fields may
/// contain commas.
CsvTable read_csv_table(const std::string& path);
CsvTable parse_csv_table(const std::string& text);

/// Parses a numeric cell; throws InputError citing row and column on failure
/// or when the cell is empty / NA.
double parse_number(const std::string& cell, std::size_t row, const std::string& column);

Dataset load_csv(const std::string& path, const IngestConfig& ingest,
                 std::vector<std::string>* notices = nullptr);
Dataset dataset_from_table(const CsvTable& table, const IngestConfig& ingest,
                           std::vector<std::string>* notices = nullptr);

/// Reads the JSON run configuration (keys: dimensions, constraints,
/// standardize, tol, max_iter, restarts, prevalence_bounds, predictors,
/// responses; optional binarize, location_rule, seed).
RunConfig parse_fit_config(const std::string& path);
RunConfig parse_fit_config_text(const std::string& text);

/// Self-describing JSON interchange for a preprocessed dataset.
std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace melodic
