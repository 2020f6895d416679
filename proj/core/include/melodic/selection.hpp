#pragma once

// Parameter counts, information criteria, quality of representation and the
// dimensionality / leave-one-predictor-out scans.

#include "melodic/solver.hpp"
#include "melodic/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace melodic {

struct ModelSummary {
    std::string label;
    double deviance = 0.0;
    Index n_params = 0;
    double aic = 0.0;
    double bic = 0.0;
    Index n = 0;
};

/// Unconstrained: (P + R)M + R - M(M + 1)/2.
/// Constrained: (P - 1)M + ones(D) + R.
Index count_parameters(Index num_predictors, Index num_responses, Index dims,
                       const std::optional<DimensionAssignment>& assignment = std::nullopt);

struct InformationCriteria {
    double aic;
    double bic;
};

InformationCriteria information_criteria(double deviance, Index n_params, Index n);

ModelSummary summarize(const std::string& label, double deviance, Index n_params, Index n);

struct LogisticFit {
    Vector coefficients;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    bool separated = false;
};

/// Maximum-likelihood binary logistic regression by IRLS with step halving.
/// `design` must already contain an intercept column if one is wanted.
LogisticFit fit_univariate_logistic(const Matrix& design, const Vector& y, int max_iter = 200);

/// Deviance of the intercept-only model, -2 [k log p + (n - k) log(1 - p)].
double intercept_only_deviance(const Vector& y);

struct ResponseQuality {
    std::string name;
    double null_deviance = 0.0;       // L0_r
    double logistic_deviance = 0.0;   // Llr_r
    double model_deviance = 0.0;      // L_r, share of the fitted loss
    std::optional<double> quality;    // Q_r; empty when L0_r - Llr_r < 1e-8
};

struct QualityReport {
    std::vector<ResponseQuality> responses;
};

QualityReport quality_of_representation(const Dataset& data, const FitResult& fit);

struct ScanRow {
    ModelSummary summary;
    std::optional<FitResult> fit;
    std::string error;  // non-empty when the fit for this row failed
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::optional<std::size_t> best_aic;
    std::optional<std::size_t> best_bic;
};

/// One independent fit per M in [lo, hi]. config.dimensions and
/// config.assignment are overridden per row.
ScanResult dimension_scan(const Dataset& data, Index lo, Index hi, const FitConfig& config);

/// P refits at fixed dimensionality, each without one predictor.
ScanResult predictor_drop_scan(const Dataset& data, const FitConfig& config);

}  // namespace melodic
