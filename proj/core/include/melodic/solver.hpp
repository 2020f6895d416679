#pragma once

// Majorize-minimize estimation of the unconstrained and the
// dimension-constrained model.

#include "melodic/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace melodic {

/// How locations are recovered from a_r = K_r'L_r.
enum class LocationRule {
    MinimalNorm,     // L_r = a_r K_r / |K_r|^2 (point of the even-odds plane nearest the origin)
    EqualSplit,      // l_rm = a_r / sum_{m in S_r} k_rm, the alternative printed for the constrained case
};

struct FitConfig {
    Index dimensions = 2;
    double tol = 1e-8;
    int max_iter = 65536;
    std::optional<DimensionAssignment> assignment;
    LocationRule location_rule = LocationRule::MinimalNorm;
    // Extra jittered starts; the best final deviance wins. 0 = single run.
    int restarts = 0;
    std::uint64_t seed = 0;
    bool record_trace = true;
    // Curvature of the quadratic bound on the per-observation negative
    // log-likelihood. 1/4 is the valid bound; other values only exist so
    // the validation suite can demonstrate that descent breaks.
    double majorization_constant = 0.25;

    void validate(Index num_predictors, Index num_responses) const;
};

struct FitResult {
    ModelParams params;
    double deviance = 0.0;
    std::vector<double> trace;  // deviance at the start and after every iteration
    int iterations = 0;
    bool converged = false;
    std::vector<Index> degenerate_responses;  // |K_r| vanished, L_r set to 0
    bool possible_separation = false;         // max |K| exceeded 1e3
};

/// Lower-triangular R with X'X = R R'. Throws SingularDesignError naming the
/// first column whose pivot falls below 1e-12 * trace(X'X).
Matrix cholesky_factor(const Matrix& xtx);

/// Z = Theta + (G - Pi) / (2c); with c = 1/4 this is Theta + 2(G - Pi).
Matrix working_matrix(const Matrix& theta, const Matrix& pi, const Matrix& G,
                      double majorization_constant = 0.25);

/// Z1 = Z J A_k / 2, i.e. Z1(i, r) = (z_ir0 - z_ir1) / 2.
Matrix contract_pairs(const Matrix& Z);

/// a = -Z1'1 / n.
Vector update_intercepts(const Matrix& Z1);

struct GsvdStep {
    Matrix B;  // P x M
    Matrix K;  // R x M
    Vector singular_values;
};

/// Rank-M minimizer of |Z2 - X B K'|^2 subject to B'X'XB / n = I, through
/// the SVD of R_x^{-1} X' Z2. `chol` is the factor from cholesky_factor.
GsvdStep gsvd_update(const Matrix& Z2, const Matrix& X, const Matrix& chol, Index dims);

struct LocationUpdate {
    Matrix L;
    std::vector<Index> degenerate;
};

/// Locations reproducing a_r = K_r'L_r; rows with |K_r|^2 < 1e-14 get L_r = 0
/// and are reported as degenerate.
LocationUpdate update_locations(const Vector& a, const Matrix& K,
                                const std::optional<DimensionAssignment>& assignment = std::nullopt,
                                LocationRule rule = LocationRule::MinimalNorm);

/// Flips each dimension (B, K and L columns together) so that the first
/// predictor with |b_pm| >= 1e-10 has a positive weight.
void canonicalize_signs(ModelParams& params);

FitResult fit_unconstrained(const Dataset& data, const FitConfig& config);
FitResult fit_constrained(const Dataset& data, const FitConfig& config);

/// Dispatches on config.assignment and handles restarts.
FitResult fit(const Dataset& data, const FitConfig& config);

struct MajorizationValues {
    double loss;      // -2 sum_c g_c log pi_c(theta)
    double majorizer; // quadratic bound built at theta_tilde
};

/// Per-observation deviance term and its quadratic majorizer. The bound is
/// the deviance-scale version of f(t~) + (t - t~)'grad + c |t - t~|^2 for the
/// negative log-likelihood, so it touches at theta = theta_tilde.
MajorizationValues majorization_gap(const Eigen::Vector2d& theta, const Eigen::Vector2d& theta_tilde,
                                    const Eigen::Vector2d& g, double majorization_constant = 0.25);

}  // namespace melodic
