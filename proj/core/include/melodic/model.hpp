#pragma once

// Closed-form quantities of the distance model: category coordinates,
// distances, probabilities, log odds, deviance and implied coefficients.

#include "melodic/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace melodic {

/// V = A_l L + A_k K. Row 2r is category 0 (L_r + K_r), row 2r + 1 is
/// category 1 (L_r - K_r).
Matrix category_coordinates(const Matrix& K, const Matrix& L);
Matrix category_coordinates(const ModelParams& params);

struct Decomposition {
    Matrix K;
    Matrix L;
};

/// Inverse of category_coordinates: K_r = (v_r0 - v_r1) / 2, L_r = (v_r0 + v_r1) / 2.
Decomposition decompose_category_coordinates(const Matrix& V);

/// U = XB.
Matrix subject_scores(const Matrix& X, const Matrix& B);
Matrix subject_scores(const Dataset& data, const ModelParams& params);

double half_sq_distance(const Vector& u, const Vector& v);

/// Linear predictors with the subject term dropped:
/// theta_irc = u_i'v_rc - |v_rc|^2 / 2, laid out like G (n x 2R).
Matrix linear_predictors(const Matrix& X, const ModelParams& params);

/// Pairwise softmax of a G-aligned n x 2R matrix of linear predictors.
Matrix pair_softmax(const Matrix& theta);

/// Deviance of G-aligned linear predictors, -2 sum g log pi.
double deviance_from_predictors(const Matrix& theta, const Matrix& G);

Matrix class_probabilities(const Matrix& X, const ModelParams& params);
Matrix class_probabilities(const Dataset& data, const ModelParams& params);

/// n x R matrix of log(pi_r1 / pi_r0) = delta(u, v_r0) - delta(u, v_r1).
Matrix log_odds(const Matrix& X, const ModelParams& params);
Matrix log_odds(const Dataset& data, const ModelParams& params);

struct ImpliedCoefficients {
    Vector intercepts;    // a*, length R
    Matrix coefficients;  // B*, P x R
};

/// Re-expresses the model as R ordinary logistic regressions:
/// log_odds(i, r) = a*_r + x_i' b*_r.
ImpliedCoefficients implied_coefficients(const ModelParams& params);

double deviance(const Dataset& data, const ModelParams& params);

/// Deviance contribution of each response (sums to deviance()).
Vector response_deviances(const Dataset& data, const ModelParams& params);

struct PredictorScaling {
    Vector centering_offsets;
    Vector scaling_factors;
};

struct Prediction {
    Matrix probabilities;             // R x 2, columns (pi_r0, pi_r1)
    std::vector<int> hard_classes;    // 1 iff log odds > 0; ties go to 0
};

/// Predicts one subject given raw-scale predictor values.
Prediction predict(const Vector& raw_x, const ModelParams& params, const PredictorScaling& scaling);

/// Number of response profiles a model can represent. Without an assignment
/// this is sum_{m=0}^{min(M,R)} C(R, m); with one it is prod_m (|D_m| + 1).
/// Throws InputError when a response loads on more than one dimension.
std::uint64_t count_representable_profiles(Index num_responses, Index dims,
                                           const std::optional<DimensionAssignment>& assignment = std::nullopt);

}  // namespace melodic
