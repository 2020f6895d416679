#include "melodic/types.hpp"

#include <cmath>
#include <utility>

namespace melodic {

namespace {

std::vector<std::string> default_names(const std::string& prefix, Index count) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
    return names;
}

}  // namespace

Matrix indicator_matrix(const Matrix& y) {
    Matrix g(y.rows(), 2 * y.cols());
    for (Index r = 0; r < y.cols(); ++r) {
        for (Index i = 0; i < y.rows(); ++i) {
            const double v = y(i, r);
            if (v != 0.0 && v != 1.0) {
                throw InputError("response " + std::to_string(r + 1) + " row " +
                                 std::to_string(i + 1) + " is not 0/1");
            }
            g(i, 2 * r) = 1.0 - v;
            g(i, 2 * r + 1) = v;
        }
    }
    return g;
}

Dataset Dataset::from_raw(const Matrix& raw_x, const Matrix& y, Preprocessing prep,
                          std::vector<std::string> predictor_names,
                          std::vector<std::string> response_names, int sd_ddof) {
    if (raw_x.rows() != y.rows()) {
        throw DimensionError("predictor and response row counts differ");
    }
    if (raw_x.rows() < 2) throw InputError("need at least two observations");
    if (!raw_x.allFinite()) throw InputError("predictor matrix has non-finite values");

    Dataset d;
    const Index n = raw_x.rows();
    const Index p = raw_x.cols();
    d.preprocessing = prep;
    d.sd_ddof = sd_ddof;
    d.centering_offsets = Vector::Zero(p);
    d.scaling_factors = Vector::Ones(p);
    d.predictor_sd.resize(p);

    const Vector means = raw_x.colwise().mean().transpose();
    for (Index j = 0; j < p; ++j) {
        const double ss = (raw_x.col(j).array() - means(j)).square().sum();
        d.predictor_sd(j) = std::sqrt(ss / static_cast<double>(n - sd_ddof));
    }

    d.X = raw_x;
    if (prep != Preprocessing::None) {
        d.centering_offsets = means;
        d.X.rowwise() -= means.transpose();
    }
    if (prep == Preprocessing::Standardize) {
        for (Index j = 0; j < p; ++j) {
            if (!(d.predictor_sd(j) > 0.0)) {
                throw InputError("predictor " + std::to_string(j + 1) + " has zero variance");
            }
            d.scaling_factors(j) = d.predictor_sd(j);
            d.X.col(j) /= d.predictor_sd(j);
        }
    }

    d.Y = y;
    d.G = indicator_matrix(y);
    d.predictor_names = predictor_names.empty() ? default_names("x", p) : std::move(predictor_names);
    d.response_names = response_names.empty() ? default_names("y", y.cols()) : std::move(response_names);
    if (static_cast<Index>(d.predictor_names.size()) != p ||
        static_cast<Index>(d.response_names.size()) != y.cols()) {
        throw DimensionError("name list length does not match matrix width");
    }
    return d;
}

Dataset Dataset::without_predictor(Index p) const {
    if (p < 0 || p >= num_predictors()) throw DimensionError("predictor index out of range");
    if (num_predictors() < 2) throw InputError("cannot drop the only predictor");

    // Undo the preprocessing, drop the column and redo it so the reduced
    // design is centered (and scaled) on its own.
    Matrix raw(n(), num_predictors() - 1);
    std::vector<std::string> names;
    for (Index j = 0, k = 0; j < num_predictors(); ++j) {
        if (j == p) continue;
        raw.col(k).array() = X.col(j).array() * scaling_factors(j) + centering_offsets(j);
        names.push_back(predictor_names[static_cast<std::size_t>(j)]);
        ++k;
    }
    return from_raw(raw, Y, preprocessing, std::move(names), response_names, sd_ddof);
}

void Dataset::validate() const {
    const Index rows = n();
    if (Y.rows() != rows || G.rows() != rows || G.cols() != 2 * Y.cols()) {
        throw DimensionError("dataset matrices have inconsistent shapes");
    }
    if (preprocessing != Preprocessing::None) {
        const Vector sums = X.colwise().sum().transpose();
        for (Index j = 0; j < sums.size(); ++j) {
            if (std::abs(sums(j)) > 1e-10 * static_cast<double>(rows)) {
                throw InputError("predictor " + std::to_string(j + 1) + " is not centered");
            }
        }
    }
    for (Index r = 0; r < Y.cols(); ++r) {
        for (Index i = 0; i < rows; ++i) {
            if (G(i, 2 * r) + G(i, 2 * r + 1) != 1.0 || G(i, 2 * r + 1) != Y(i, r)) {
                throw InputError("indicator matrix disagrees with responses");
            }
        }
    }
}

DimensionAssignment::DimensionAssignment(Eigen::MatrixXi pattern) : pattern_(std::move(pattern)) {
    if (pattern_.rows() == 0 || pattern_.cols() == 0) {
        throw InputError("dimension assignment is empty");
    }
    for (Index r = 0; r < pattern_.rows(); ++r) {
        for (Index m = 0; m < pattern_.cols(); ++m) {
            if (pattern_(r, m) != 0 && pattern_(r, m) != 1) {
                throw InputError("dimension assignment entries must be 0 or 1");
            }
        }
        if (pattern_.row(r).sum() == 0) {
            throw InputError("response " + std::to_string(r + 1) + " pertains to no dimension");
        }
    }
    for (Index m = 0; m < pattern_.cols(); ++m) {
        if (pattern_.col(m).sum() == 0) {
            throw InputError("dimension " + std::to_string(m + 1) + " has no responses");
        }
    }
}

DimensionAssignment DimensionAssignment::identity(Index r) {
    return DimensionAssignment(Eigen::MatrixXi::Identity(r, r));
}

std::vector<Index> DimensionAssignment::responses_on(Index m) const {
    std::vector<Index> out;
    for (Index r = 0; r < pattern_.rows(); ++r)
        if (pattern_(r, m) != 0) out.push_back(r);
    return out;
}

std::vector<Index> DimensionAssignment::dimensions_of(Index r) const {
    std::vector<Index> out;
    for (Index m = 0; m < pattern_.cols(); ++m)
        if (pattern_(r, m) != 0) out.push_back(m);
    return out;
}

bool DimensionAssignment::has_multi_dimension_response() const {
    for (Index r = 0; r < pattern_.rows(); ++r)
        if (pattern_.row(r).sum() > 1) return true;
    return false;
}

}  // namespace melodic
