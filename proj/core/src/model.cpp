#include "melodic/model.hpp"

#include <algorithm>
#include <cmath>

namespace melodic {

namespace {

void check_params(const ModelParams& params) {
    if (params.K.rows() != params.L.rows() || params.K.cols() != params.L.cols() ||
        params.K.cols() != params.B.cols()) {
        throw DimensionError("B, K and L disagree on shape");
    }
}

// -log(softmax) of the first argument against the second.
double neg_log_pair(double own, double other) {
    const double d = other - own;
    return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

}  // namespace

Matrix category_coordinates(const Matrix& K, const Matrix& L) {
    if (K.rows() != L.rows() || K.cols() != L.cols()) {
        throw DimensionError("K and L must have the same shape");
    }
    Matrix V(2 * K.rows(), K.cols());
    for (Index r = 0; r < K.rows(); ++r) {
        V.row(2 * r) = L.row(r) + K.row(r);
        V.row(2 * r + 1) = L.row(r) - K.row(r);
    }
    return V;
}

Matrix category_coordinates(const ModelParams& params) {
    return category_coordinates(params.K, params.L);
}

Decomposition decompose_category_coordinates(const Matrix& V) {
    if (V.rows() % 2 != 0) throw DimensionError("category coordinates need an even row count");
    const Index R = V.rows() / 2;
    Decomposition out{Matrix(R, V.cols()), Matrix(R, V.cols())};
    for (Index r = 0; r < R; ++r) {
        out.K.row(r) = 0.5 * (V.row(2 * r) - V.row(2 * r + 1));
        out.L.row(r) = 0.5 * (V.row(2 * r) + V.row(2 * r + 1));
    }
    return out;
}

Matrix subject_scores(const Matrix& X, const Matrix& B) {
    if (X.cols() != B.rows()) throw DimensionError("X columns do not match B rows");
    return X * B;
}

Matrix subject_scores(const Dataset& data, const ModelParams& params) {
    return subject_scores(data.X, params.B);
}

double half_sq_distance(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) throw DimensionError("distance between vectors of different length");
    return 0.5 * (u - v).squaredNorm();
}

Matrix linear_predictors(const Matrix& X, const ModelParams& params) {
    check_params(params);
    const Matrix V = category_coordinates(params);
    Matrix theta = subject_scores(X, params.B) * V.transpose();
    const Vector half_sq = 0.5 * V.rowwise().squaredNorm();
    theta.rowwise() -= half_sq.transpose();
    return theta;
}

Matrix pair_softmax(const Matrix& theta) {
    Matrix pi(theta.rows(), theta.cols());
    for (Index c = 0; c + 1 < theta.cols(); c += 2) {
        for (Index i = 0; i < theta.rows(); ++i) {
            const double t0 = theta(i, c);
            const double t1 = theta(i, c + 1);
            const double top = std::max(t0, t1);
            const double e0 = std::exp(t0 - top);
            const double e1 = std::exp(t1 - top);
            pi(i, c) = e0 / (e0 + e1);
            pi(i, c + 1) = e1 / (e0 + e1);
        }
    }
    return pi;
}

double deviance_from_predictors(const Matrix& theta, const Matrix& G) {
    double total = 0.0;
    for (Index c = 0; c + 1 < theta.cols(); c += 2) {
        for (Index i = 0; i < theta.rows(); ++i) {
            total += G(i, c) * neg_log_pair(theta(i, c), theta(i, c + 1)) +
                     G(i, c + 1) * neg_log_pair(theta(i, c + 1), theta(i, c));
        }
    }
    return 2.0 * total;
}

Matrix class_probabilities(const Matrix& X, const ModelParams& params) {
    return pair_softmax(linear_predictors(X, params));
}

Matrix class_probabilities(const Dataset& data, const ModelParams& params) {
    return class_probabilities(data.X, params);
}

Matrix log_odds(const Matrix& X, const ModelParams& params) {
    const Matrix theta = linear_predictors(X, params);
    Matrix out(theta.rows(), theta.cols() / 2);
    for (Index r = 0; r < out.cols(); ++r) out.col(r) = theta.col(2 * r + 1) - theta.col(2 * r);
    return out;
}

Matrix log_odds(const Dataset& data, const ModelParams& params) {
    return log_odds(data.X, params);
}

ImpliedCoefficients implied_coefficients(const ModelParams& params) {
    check_params(params);
    // v_r1 - v_r0 = -2 K_r and |v_r0|^2 - |v_r1|^2 = 4 K_r'L_r.
    ImpliedCoefficients out;
    out.intercepts = 2.0 * (params.K.array() * params.L.array()).rowwise().sum().matrix();
    out.coefficients = -2.0 * params.B * params.K.transpose();
    return out;
}

double deviance(const Dataset& data, const ModelParams& params) {
    return deviance_from_predictors(linear_predictors(data.X, params), data.G);
}

Vector response_deviances(const Dataset& data, const ModelParams& params) {
    const Matrix theta = linear_predictors(data.X, params);
    Vector out(data.num_responses());
    for (Index r = 0; r < out.size(); ++r) {
        out(r) = deviance_from_predictors(theta.middleCols(2 * r, 2), data.G.middleCols(2 * r, 2));
    }
    return out;
}

Prediction predict(const Vector& raw_x, const ModelParams& params, const PredictorScaling& scaling) {
    const Index P = params.num_predictors();
    if (raw_x.size() != P || scaling.centering_offsets.size() != P || scaling.scaling_factors.size() != P) {
        throw DimensionError("predictor vector length does not match the model");
    }
    if (!raw_x.allFinite()) throw InputError("predictor values must be finite");
    const Matrix x = ((raw_x - scaling.centering_offsets).array() / scaling.scaling_factors.array())
                         .matrix()
                         .transpose();
    const Matrix pi = class_probabilities(x, params);
    const Matrix lo = log_odds(x, params);

    Prediction out;
    out.probabilities.resize(params.num_responses(), 2);
    for (Index r = 0; r < params.num_responses(); ++r) {
        out.probabilities(r, 0) = pi(0, 2 * r);
        out.probabilities(r, 1) = pi(0, 2 * r + 1);
        out.hard_classes.push_back(lo(0, r) > 0.0 ? 1 : 0);
    }
    return out;
}

std::uint64_t count_representable_profiles(Index num_responses, Index dims,
                                           const std::optional<DimensionAssignment>& assignment) {
    if (num_responses < 1 || dims < 1) throw InputError("profile count needs R >= 1 and M >= 1");
    if (assignment) {
        if (assignment->num_responses() != num_responses || assignment->num_dimensions() != dims) {
            throw DimensionError("assignment shape does not match R x M");
        }
        if (assignment->has_multi_dimension_response()) {
            throw InputError("profile count is undefined when a response loads on several dimensions");
        }
        std::uint64_t product = 1;
        for (Index m = 0; m < dims; ++m) product *= assignment->responses_on(m).size() + 1;
        return product;
    }
    // Regions cut by R hyperplanes in general position in M dimensions.
    std::uint64_t total = 0;
    std::uint64_t binom = 1;
    for (Index m = 0; m <= std::min(dims, num_responses); ++m) {
        total += binom;
        binom = binom * static_cast<std::uint64_t>(num_responses - m) / static_cast<std::uint64_t>(m + 1);
    }
    return total;
}

}  // namespace melodic
