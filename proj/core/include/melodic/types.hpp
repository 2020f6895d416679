#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace melodic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error hierarchy. Everything thrown by the library derives from Error so
// callers can map categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, missing columns, invalid configuration.
class InputError : public Error {
public:
    using Error::Error;
};

/// Shape mismatch between arguments (wrong lengths, odd row counts).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// X'X is not positive definite.
class SingularDesignError : public Error {
public:
    SingularDesignError(const std::string& what, Index column)
        : Error(what), column_(column) {}
    Index column() const { return column_; }

private:
    Index column_;
};

/// Linear algebra failure (SVD did not converge, non-finite values).
class NumericalError : public Error {
public:
    using Error::Error;
};

enum class Preprocessing { None, Center, Standardize };

// Centered predictors, binary responses and the super indicator matrix.
//
// G has two columns per response: column 2r holds 1 when y_r = 0 and
// column 2r + 1 holds 1 when y_r = 1 (zero-based). Offsets and factors map
// raw predictor values onto the model scale: x_model = (x_raw - offset) / factor.
struct Dataset {
    Matrix X;
    Matrix Y;
    Matrix G;
    Vector centering_offsets;
    Vector scaling_factors;
    // Standard deviation (denominator n - sd_ddof) of each raw predictor.
    Vector predictor_sd;
    int sd_ddof = 1;
    Preprocessing preprocessing = Preprocessing::Center;
    std::vector<std::string> predictor_names;
    std::vector<std::string> response_names;

    Index n() const { return X.rows(); }
    Index num_predictors() const { return X.cols(); }
    Index num_responses() const { return Y.cols(); }

    // Builds a dataset from raw matrices. Y must be 0/1. Names default to
    // x1.. / y1.. when empty. Standard deviations use n - sd_ddof.
    static Dataset from_raw(const Matrix& raw_x, const Matrix& y,
                            Preprocessing prep = Preprocessing::Center,
                            std::vector<std::string> predictor_names = {},
                            std::vector<std::string> response_names = {},
                            int sd_ddof = 1);

    // Same data without predictor p; X is recentered (and rescaled when the
    // original was standardized).
    Dataset without_predictor(Index p) const;

    // Throws InputError when an invariant does not hold.
    void validate() const;
};

Matrix indicator_matrix(const Matrix& y);

// R x M 0/1 pattern: D(r, m) = 1 when response r loads on dimension m.
class DimensionAssignment {
public:
    DimensionAssignment() = default;
    explicit DimensionAssignment(Eigen::MatrixXi pattern);

    static DimensionAssignment identity(Index r);

    const Eigen::MatrixXi& pattern() const { return pattern_; }
    Index num_responses() const { return pattern_.rows(); }
    Index num_dimensions() const { return pattern_.cols(); }
    bool allows(Index r, Index m) const { return pattern_(r, m) != 0; }

    std::vector<Index> responses_on(Index m) const;
    std::vector<Index> dimensions_of(Index r) const;
    Index ones() const { return pattern_.sum(); }
    bool has_multi_dimension_response() const;

private:
    Eigen::MatrixXi pattern_;
};

struct ModelParams {
    Matrix B;  // P x M regression weights
    Matrix K;  // R x M discriminations
    Matrix L;  // R x M locations

    Index dims() const { return B.cols(); }
    Index num_predictors() const { return B.rows(); }
    Index num_responses() const { return K.rows(); }
};

}  // namespace melodic
