#include "melodic/solver.hpp"

#include "melodic/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace melodic {

namespace {

constexpr double kDegenerateNorm = 1e-14;
constexpr double kSeparationBound = 1e3;
constexpr double kDevianceFloor = 1e-12;

struct Svd {
    Matrix U;
    Vector sigma;
    Matrix V;
};

Svd thin_svd(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
        throw NumericalError("singular value decomposition did not converge");
    }
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// R^{-1} M for lower-triangular R.
Matrix solve_lower(const Matrix& chol, const Matrix& rhs) {
    return chol.triangularView<Eigen::Lower>().solve(rhs);
}

// R^{-T} M for lower-triangular R.
Matrix solve_lower_transposed(const Matrix& chol, const Matrix& rhs) {
    return chol.transpose().triangularView<Eigen::Upper>().solve(rhs);
}

void check_both_classes(const Dataset& data) {
    for (Index r = 0; r < data.num_responses(); ++r) {
        const double ones = data.Y.col(r).sum();
        if (ones < 0.5 || ones > static_cast<double>(data.n()) - 0.5) {
            throw InputError("response '" + data.response_names[static_cast<std::size_t>(r)] +
                             "' has a single observed class");
        }
    }
}

void apply_pattern(Matrix& M, const DimensionAssignment& assignment) {
    for (Index r = 0; r < M.rows(); ++r)
        for (Index m = 0; m < M.cols(); ++m)
            if (!assignment.allows(r, m)) M(r, m) = 0.0;
}

// Starting values from the SVD of R_x^{-1} X'G.
ModelParams initial_params(const Dataset& data, const Matrix& chol, Index dims) {
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    const Svd svd = thin_svd(solve_lower(chol, data.X.transpose() * data.G));
    ModelParams init;
    init.B = root_n * solve_lower_transposed(chol, svd.U.leftCols(dims));
    const Matrix V = svd.V.leftCols(dims) * svd.sigma.head(dims).asDiagonal() / root_n;
    Decomposition kl = decompose_category_coordinates(V);
    init.K = std::move(kl.K);
    init.L = std::move(kl.L);
    return init;
}

// Rescales each b_m to unit mean square of X b_m, compensating in K and L.
void normalize_dimension_scale(const Matrix& X, ModelParams& params) {
    const double n = static_cast<double>(X.rows());
    for (Index m = 0; m < params.dims(); ++m) {
        const double scale = std::sqrt((X * params.B.col(m)).squaredNorm() / n);
        if (scale > 0.0) {
            params.B.col(m) /= scale;
            params.K.col(m) *= scale;
            params.L.col(m) *= scale;
        }
    }
}

class MmRunner {
public:
    MmRunner(const Dataset& data, const FitConfig& config, const Matrix& chol)
        : data_(data), config_(config), chol_(chol), xtx_(data.X.transpose() * data.X),
          root_n_(std::sqrt(static_cast<double>(data.n()))) {}

    FitResult run(ModelParams params) {
        FitResult result;
        Matrix theta = linear_predictors(data_.X, params);
        double current = deviance_from_predictors(theta, data_.G);
        result.trace.push_back(current);

        std::vector<Index> degenerate;
        for (int t = 1; t <= config_.max_iter; ++t) {
            const Matrix pi = pair_softmax(theta);
            const Matrix Z = working_matrix(theta, pi, data_.G, config_.majorization_constant);
            const Matrix Z1 = contract_pairs(Z);
            const Vector a = update_intercepts(Z1);
            const Matrix Z2 = Z1.rowwise() + a.transpose();

            if (config_.assignment) {
                update_constrained(Z2, params);
            } else {
                GsvdStep step = gsvd_update(Z2, data_.X, chol_, config_.dimensions);
                params.B = std::move(step.B);
                params.K = std::move(step.K);
            }
            LocationUpdate loc = update_locations(a, params.K, config_.assignment, config_.location_rule);
            params.L = std::move(loc.L);
            degenerate = std::move(loc.degenerate);

            theta = linear_predictors(data_.X, params);
            const double next = deviance_from_predictors(theta, data_.G);
            if (!std::isfinite(next)) throw NumericalError("deviance became non-finite");
            if (config_.record_trace) result.trace.push_back(next);
            result.iterations = t;

            const double previous = current;
            current = next;
            if (previous - current <= config_.tol * current || current < kDevianceFloor) {
                result.converged = true;
                break;
            }
        }
        if (!config_.record_trace) result.trace.push_back(current);

        canonicalize_signs(params);
        result.deviance = current;
        result.degenerate_responses = std::move(degenerate);
        result.possible_separation = params.K.cwiseAbs().maxCoeff() > kSeparationBound;
        result.params = std::move(params);
        return result;
    }

private:
    // Block update over dimensions: each b_s, k_s is the leading pair of the
    // residual after removing the other dimensions, restricted to D_s.
    void update_constrained(const Matrix& Z2, ModelParams& params) const {
        const DimensionAssignment& assignment = *config_.assignment;
        const Matrix xtz = data_.X.transpose() * Z2;
        for (Index s = 0; s < params.dims(); ++s) {
            Matrix cross = xtz;
            for (Index m = 0; m < params.dims(); ++m) {
                if (m == s) continue;
                cross.noalias() -= (xtx_ * params.B.col(m)) * params.K.col(m).transpose();
            }
            const std::vector<Index> members = assignment.responses_on(s);
            Matrix block(cross.rows(), static_cast<Index>(members.size()));
            for (std::size_t j = 0; j < members.size(); ++j) block.col(static_cast<Index>(j)) = cross.col(members[j]);

            const Svd svd = thin_svd(solve_lower(chol_, block));
            params.B.col(s) = root_n_ * solve_lower_transposed(chol_, svd.U.col(0));
            params.K.col(s).setZero();
            for (std::size_t j = 0; j < members.size(); ++j) {
                params.K(members[j], s) = svd.V(static_cast<Index>(j), 0) * svd.sigma(0) / root_n_;
            }
        }
    }

    const Dataset& data_;
    const FitConfig& config_;
    const Matrix& chol_;
    Matrix xtx_;
    double root_n_;
};

FitResult run_with_start(const Dataset& data, const FitConfig& config, const Matrix& chol,
                         const ModelParams& start) {
    return MmRunner(data, config, chol).run(start);
}

ModelParams jitter(const ModelParams& base, const Dataset& data, const FitConfig& config, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto perturb = [&](Matrix& M) {
        const double scale = std::max(1e-3, std::sqrt(M.squaredNorm() / static_cast<double>(std::max<Index>(1, M.size()))));
        for (Index i = 0; i < M.size(); ++i) M.data()[i] += 0.5 * scale * normal(rng);
    };
    ModelParams p = base;
    perturb(p.B);
    perturb(p.K);
    perturb(p.L);
    if (config.assignment) {
        apply_pattern(p.K, *config.assignment);
        apply_pattern(p.L, *config.assignment);
    }
    normalize_dimension_scale(data.X, p);
    return p;
}

FitResult fit_with_restarts(const Dataset& data, const FitConfig& config, bool constrained) {
    data.validate();
    config.validate(data.num_predictors(), data.num_responses());
    if (constrained != config.assignment.has_value()) {
        throw InputError(constrained ? "constrained fit requires a dimension assignment"
                                     : "unconstrained fit must not carry a dimension assignment");
    }
    check_both_classes(data);

    const Matrix chol = cholesky_factor(data.X.transpose() * data.X);
    ModelParams start = initial_params(data, chol, config.dimensions);
    if (config.assignment) {
        apply_pattern(start.K, *config.assignment);
        apply_pattern(start.L, *config.assignment);
    }

    FitResult best = run_with_start(data, config, chol, start);
    std::mt19937_64 rng(config.seed);
    for (int k = 0; k < config.restarts; ++k) {
        FitResult candidate = run_with_start(data, config, chol, jitter(start, data, config, rng));
        if (candidate.deviance < best.deviance) best = std::move(candidate);
    }
    return best;
}

}  // namespace

void FitConfig::validate(Index num_predictors, Index num_responses) const {
    if (!(tol > 0.0)) throw InputError("tol must be positive");
    if (max_iter < 1) throw InputError("max_iter must be at least 1");
    if (restarts < 0) throw InputError("restarts must be non-negative");
    if (!(majorization_constant > 0.0)) throw InputError("majorization constant must be positive");
    if (dimensions < 1 || dimensions > std::min(num_predictors, num_responses)) {
        throw InputError("dimensions must lie in [1, min(P, R)] = [1, " +
                         std::to_string(std::min(num_predictors, num_responses)) + "]");
    }
    if (assignment) {
        if (assignment->num_responses() != num_responses) {
            throw InputError("constraint matrix has " + std::to_string(assignment->num_responses()) +
                             " rows but there are " + std::to_string(num_responses) + " responses");
        }
        if (assignment->num_dimensions() != dimensions) {
            throw InputError("constraint matrix width does not match dimensions");
        }
    }
}

Matrix cholesky_factor(const Matrix& xtx) {
    if (xtx.rows() != xtx.cols()) throw DimensionError("cross-product matrix must be square");
    const Index P = xtx.rows();
    const double threshold = 1e-12 * xtx.trace();
    Matrix chol = Matrix::Zero(P, P);
    for (Index j = 0; j < P; ++j) {
        double pivot = xtx(j, j);
        for (Index k = 0; k < j; ++k) pivot -= chol(j, k) * chol(j, k);
        if (!(pivot > threshold)) {
            throw SingularDesignError("design matrix is rank deficient at predictor column " + std::to_string(j + 1), j);
        }
        chol(j, j) = std::sqrt(pivot);
        for (Index i = j + 1; i < P; ++i) {
            double s = xtx(i, j);
            for (Index k = 0; k < j; ++k) s -= chol(i, k) * chol(j, k);
            chol(i, j) = s / chol(j, j);
        }
    }
    return chol;
}

Matrix working_matrix(const Matrix& theta, const Matrix& pi, const Matrix& G, double majorization_constant) {
    return theta + (G - pi) / (2.0 * majorization_constant);
}

Matrix contract_pairs(const Matrix& Z) {
    if (Z.cols() % 2 != 0) throw DimensionError("working matrix needs an even column count");
    Matrix Z1(Z.rows(), Z.cols() / 2);
    for (Index r = 0; r < Z1.cols(); ++r) Z1.col(r) = 0.5 * (Z.col(2 * r) - Z.col(2 * r + 1));
    return Z1;
}

Vector update_intercepts(const Matrix& Z1) {
    return -Z1.colwise().mean().transpose();
}

GsvdStep gsvd_update(const Matrix& Z2, const Matrix& X, const Matrix& chol, Index dims) {
    if (Z2.rows() != X.rows()) throw DimensionError("Z2 and X row counts differ");
    if (dims < 1 || dims > std::min(X.cols(), Z2.cols())) throw DimensionError("rank out of range");
    const double root_n = std::sqrt(static_cast<double>(X.rows()));
    const Svd svd = thin_svd(solve_lower(chol, X.transpose() * Z2));
    GsvdStep step;
    step.B = root_n * solve_lower_transposed(chol, svd.U.leftCols(dims));
    step.K = svd.V.leftCols(dims) * svd.sigma.head(dims).asDiagonal() / root_n;
    step.singular_values = svd.sigma;
    return step;
}

LocationUpdate update_locations(const Vector& a, const Matrix& K,
                                const std::optional<DimensionAssignment>& assignment, LocationRule rule) {
    if (a.size() != K.rows()) throw DimensionError("intercept vector length does not match K");
    LocationUpdate out{Matrix::Zero(K.rows(), K.cols()), {}};
    for (Index r = 0; r < K.rows(); ++r) {
        auto allowed = [&](Index m) { return !assignment || assignment->allows(r, m); };
        double sq = 0.0;
        double sum = 0.0;
        for (Index m = 0; m < K.cols(); ++m) {
            if (!allowed(m)) continue;
            sq += K(r, m) * K(r, m);
            sum += K(r, m);
        }
        if (sq < kDegenerateNorm) {
            out.degenerate.push_back(r);
            continue;
        }
        if (rule == LocationRule::EqualSplit && assignment) {
            if (std::abs(sum) < kDegenerateNorm) {
                out.degenerate.push_back(r);
                continue;
            }
            for (Index m = 0; m < K.cols(); ++m)
                if (allowed(m)) out.L(r, m) = a(r) / sum;
        } else {
            for (Index m = 0; m < K.cols(); ++m)
                if (allowed(m)) out.L(r, m) = a(r) * K(r, m) / sq;
        }
    }
    return out;
}

void canonicalize_signs(ModelParams& params) {
    for (Index m = 0; m < params.dims(); ++m) {
        for (Index p = 0; p < params.B.rows(); ++p) {
            const double w = params.B(p, m);
            if (std::abs(w) < 1e-10) continue;
            if (w < 0.0) {
                params.B.col(m) *= -1.0;
                params.K.col(m) *= -1.0;
                params.L.col(m) *= -1.0;
            }
            break;
        }
    }
}

FitResult fit_unconstrained(const Dataset& data, const FitConfig& config) {
    return fit_with_restarts(data, config, false);
}

FitResult fit_constrained(const Dataset& data, const FitConfig& config) {
    return fit_with_restarts(data, config, true);
}

FitResult fit(const Dataset& data, const FitConfig& config) {
    return fit_with_restarts(data, config, config.assignment.has_value());
}

MajorizationValues majorization_gap(const Eigen::Vector2d& theta, const Eigen::Vector2d& theta_tilde,
                                    const Eigen::Vector2d& g, double majorization_constant) {
    auto loss = [&](const Eigen::Vector2d& t) {
        const double top = t.maxCoeff();
        const double log_sum = top + std::log(std::exp(t(0) - top) + std::exp(t(1) - top));
        return -2.0 * (g(0) * (t(0) - log_sum) + g(1) * (t(1) - log_sum));
    };
    const double top = theta_tilde.maxCoeff();
    Eigen::Vector2d pi((theta_tilde.array() - top).exp());
    pi /= pi.sum();

    const Eigen::Vector2d step = theta - theta_tilde;
    const Eigen::Vector2d gradient = -2.0 * (g - pi);
    MajorizationValues out;
    out.loss = loss(theta);
    out.majorizer = loss(theta_tilde) + step.dot(gradient) + 2.0 * majorization_constant * step.squaredNorm();
    return out;
}

}  // namespace melodic
