#pragma once

// Slow, independent reference implementations used by the test suites and
// the `validate` command. Nothing here shares numerical code with the
// solver beyond element access.

#include "melodic/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace melodic::oracles {

struct SyntheticSpec {
    Index n = 200;
    Index num_predictors = 4;
    Index num_responses = 4;
    Index true_dims = 2;
    double coefficient_scale = 1.0;  // sd of the true discriminations K
    double intercept_spread = 0.5;   // sd of the implied intercepts a*_r (0 = balanced classes)
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticData {
    Dataset dataset;
    ModelParams truth;
};

/// X ~ N(0, 1) then centered; true (B, K, L) identified and sign-fixed; Y
/// drawn from the model probabilities. Resamples Y up to 100 times until
/// every response shows both classes.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Deviance by literal loops over subjects, responses and categories using
/// full squared distances (subject term included).
double reference_deviance(const Matrix& X, const Matrix& G, const ModelParams& params);

struct BruteForceOptions {
    int restarts = 50;
    std::uint64_t seed = 2024;
    int max_evaluations = 20000;
};

/// Best deviance found by Nelder-Mead over the one-dimensional model written
/// as eta_ir = alpha_r + gamma_r x_i'w. Limited to n <= 50, P <= 3, R <= 3.
double brute_force_fit(const Dataset& data, Index dims = 1, const BruteForceOptions& options = {});

struct ReferenceLogistic {
    std::vector<double> coefficients;
    double deviance = 0.0;
    bool separated = false;
};

/// Newton-Raphson logistic regression with a hand-rolled Gaussian elimination.
/// `design` rows are observations; include an intercept column if wanted.
ReferenceLogistic reference_logistic(const Matrix& design, const Vector& y);

/// Tiny M = 1 instance (n in [20, 50], P, R in [1, 3]) for brute-force
/// arbitration. Draws where some response is linearly separable are
/// rejected: their deviance has no finite minimizer to compare against.
Dataset arbitration_instance(std::mt19937_64& rng);

struct ValidationOptions {
    std::uint64_t seed = 1;
    double majorization_constant = 0.25;
    int majorization_samples = 100000;
    int descent_instances = 20;
    int equivalence_instances = 3;
    int brute_force_instances = 3;
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Majorization sampling, monotone descent, full-rank equivalence and
/// brute-force arbitration in one deterministic run.
std::vector<ValidationCheck> run_validation(const ValidationOptions& options);

}  // namespace melodic::oracles
