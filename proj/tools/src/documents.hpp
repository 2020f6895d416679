#pragma once

// Fit and scan documents, and reading a fitted model back for predict and
// biplot.

#include "schema.hpp"

#include "melodic/model.hpp"
#include "melodic/selection.hpp"
#include "melodic/solver.hpp"
#include "melodic/types.hpp"

#include <string>
#include <vector>

namespace melodic::cli {

Json matrix_json(const Matrix& m);
Json vector_json(const Vector& v);

Json fit_document(const Dataset& data, const FitConfig& config, const FitResult& fit,
                  const QualityReport& quality);

struct FittedModel {
    std::vector<std::string> predictor_names;
    std::vector<std::string> response_names;
    Preprocessing mode = Preprocessing::Center;
    PredictorScaling scaling;
    Vector predictor_sd;
    ModelParams params;

    // Raw predictor values to model coordinates.
    Matrix transform(const Matrix& raw_x) const;
};

/// Throws InputError when the document is not a consistent fit document.
FittedModel model_from_document(const Json& doc);
FittedModel load_model(const std::string& path);

enum class ScanKind { Dimensions, DropPredictor };

/// `first_dims` is the M of the first row for a dimension scan, or the fixed
/// M of a drop scan.
Json scan_document(const ScanResult& scan, ScanKind kind, const Dataset& data, Index first_dims);

/// Aligned text rendering; the best AIC / BIC rows are marked with '*'.
std::string scan_table(const ScanResult& scan);

/// Pretty-printed with a trailing newline.
std::string serialize(const Json& doc);

}  // namespace melodic::cli
