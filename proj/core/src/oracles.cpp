#include "melodic/oracles.hpp"

#include "melodic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

namespace melodic::oracles {

namespace {

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

using Objective = std::function<double(const std::vector<double>&)>;

struct Simplex {
    std::vector<double> best;
    double value;
};

// Plain Nelder-Mead with the textbook coefficients.
Simplex nelder_mead(const Objective& f, std::vector<double> start, double step, int max_evaluations) {
    const std::size_t dim = start.size();
    std::vector<std::vector<double>> pts(dim + 1, start);
    for (std::size_t k = 0; k < dim; ++k) pts[k + 1][k] += step;
    std::vector<double> vals(dim + 1);
    int evals = 0;
    for (std::size_t k = 0; k <= dim; ++k) {
        vals[k] = f(pts[k]);
        ++evals;
    }

    std::vector<std::size_t> order(dim + 1);
    while (evals < max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t lo = order.front();
        const std::size_t hi = order.back();
        const std::size_t second = order[dim - 1];
        if (std::abs(vals[hi] - vals[lo]) <= 1e-13 * (std::abs(vals[lo]) + 1e-13)) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t k = 0; k <= dim; ++k) {
            if (k == hi) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[k][j] / static_cast<double>(dim);
        }
        auto along = [&](double t) {
            std::vector<double> p(dim);
            for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (pts[hi][j] - centroid[j]);
            return p;
        };

        std::vector<double> reflected = along(-1.0);
        const double fr = f(reflected);
        ++evals;
        if (fr < vals[lo]) {
            std::vector<double> expanded = along(-2.0);
            const double fe = f(expanded);
            ++evals;
            if (fe < fr) {
                pts[hi] = std::move(expanded);
                vals[hi] = fe;
            } else {
                pts[hi] = std::move(reflected);
                vals[hi] = fr;
            }
        } else if (fr < vals[second]) {
            pts[hi] = std::move(reflected);
            vals[hi] = fr;
        } else {
            const bool outside = fr < vals[hi];
            std::vector<double> contracted = along(outside ? -0.5 : 0.5);
            const double fc = f(contracted);
            ++evals;
            if (fc < std::min(fr, vals[hi])) {
                pts[hi] = std::move(contracted);
                vals[hi] = fc;
            } else {
                for (std::size_t k = 0; k <= dim; ++k) {
                    if (k == lo) continue;
                    for (std::size_t j = 0; j < dim; ++j) pts[k][j] = pts[lo][j] + 0.5 * (pts[k][j] - pts[lo][j]);
                    vals[k] = f(pts[k]);
                    ++evals;
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best]};
}

std::vector<double> solve_gauss(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (std::abs(a[col][col]) < 1e-300) return {};
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

DimensionAssignment random_assignment(Index R, Index M, std::mt19937_64& rng) {
    Eigen::MatrixXi pattern = Eigen::MatrixXi::Zero(R, M);
    std::uniform_int_distribution<Index> pick(0, M - 1);
    for (Index r = 0; r < R; ++r) pattern(r, r < M ? r : pick(rng)) = 1;
    // One response on two dimensions, so the multi-dimension path is exercised.
    if (M > 1 && R > M) {
        for (Index m = 0; m < M; ++m) {
            if (pattern(R - 1, m) == 0) {
                pattern(R - 1, m) = 1;
                break;
            }
        }
    }
    return DimensionAssignment(pattern);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n < 2 || num_predictors < 1 || num_responses < 1 || true_dims < 1) {
        throw InputError("synthetic spec sizes must be positive");
    }
    if (true_dims > std::min(num_predictors, num_responses)) throw InputError("true_dims exceeds min(P, R)");
    if (coefficient_scale < 0.0 || intercept_spread < 0.0) throw InputError("scales must be non-negative");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Index rows, Index cols, double sd) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = sd * normal(rng);
        return m;
    };

    const Matrix raw_x = draw(spec.n, spec.num_predictors, 1.0);
    Matrix x = raw_x;
    x.rowwise() -= x.colwise().mean();

    ModelParams truth;
    const Matrix b_raw = draw(spec.num_predictors, spec.true_dims, 1.0);
    const Matrix scores = x * b_raw;
    const Eigen::LLT<Matrix> llt(scores.transpose() * scores / static_cast<double>(spec.n));
    if (llt.info() != Eigen::Success) throw InputError("synthetic regression weights are degenerate");
    truth.B = llt.matrixL().solve(b_raw.transpose()).transpose();
    truth.K = draw(spec.num_responses, spec.true_dims, spec.coefficient_scale);
    truth.L = Matrix::Zero(spec.num_responses, spec.true_dims);
    for (Index r = 0; r < spec.num_responses; ++r) {
        const double a_star = spec.intercept_spread * normal(rng);
        const double sq = truth.K.row(r).squaredNorm();
        if (sq > 1e-14) truth.L.row(r) = (0.5 * a_star / sq) * truth.K.row(r);
    }
    canonicalize_signs(truth);

    const Matrix u = x * truth.B;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix y(spec.n, spec.num_responses);
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (Index i = 0; i < spec.n; ++i) {
            for (Index r = 0; r < spec.num_responses; ++r) {
                const double a = truth.K.row(r).dot(truth.L.row(r));
                const double eta = 2.0 * a - 2.0 * u.row(i).dot(truth.K.row(r));
                const double p1 = 1.0 / (1.0 + std::exp(-eta));
                y(i, r) = unit(rng) < p1 ? 1.0 : 0.0;
            }
        }
        const Eigen::RowVectorXd counts = y.colwise().sum();
        if ((counts.array() > 0.5).all() && (counts.array() < static_cast<double>(spec.n) - 0.5).all()) {
            return {Dataset::from_raw(raw_x, y, Preprocessing::Center), truth};
        }
    }
    throw InputError("could not draw responses with both classes present after 100 attempts");
}

double reference_deviance(const Matrix& X, const Matrix& G, const ModelParams& params) {
    const Index n = X.rows();
    const Index P = X.cols();
    const Index R = params.K.rows();
    const Index M = params.B.cols();
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        std::vector<double> u(static_cast<std::size_t>(M), 0.0);
        for (Index m = 0; m < M; ++m)
            for (Index p = 0; p < P; ++p) u[static_cast<std::size_t>(m)] += X(i, p) * params.B(p, m);
        for (Index r = 0; r < R; ++r) {
            double delta[2] = {0.0, 0.0};
            for (Index m = 0; m < M; ++m) {
                const double v0 = params.L(r, m) + params.K(r, m);
                const double v1 = params.L(r, m) - params.K(r, m);
                const double um = u[static_cast<std::size_t>(m)];
                delta[0] += 0.5 * (um - v0) * (um - v0);
                delta[1] += 0.5 * (um - v1) * (um - v1);
            }
            for (int c = 0; c < 2; ++c) {
                const double pi = std::exp(-delta[c]) / (std::exp(-delta[0]) + std::exp(-delta[1]));
                total += G(i, 2 * r + c) * std::log(pi);
            }
        }
    }
    return -2.0 * total;
}

double brute_force_fit(const Dataset& data, Index dims, const BruteForceOptions& options) {
    const Index n = data.n();
    const Index P = data.num_predictors();
    const Index R = data.num_responses();
    if (dims != 1 || n > 50 || P > 3 || R > 3) {
        throw InputError("brute force is limited to M = 1, n <= 50, P <= 3, R <= 3");
    }
    const std::size_t np = static_cast<std::size_t>(P);
    const std::size_t nr = static_cast<std::size_t>(R);

    // theta = (w[0..P), gamma[0..R), alpha[0..R))
    const Objective loss = [&](const std::vector<double>& t) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p) s += data.X(i, static_cast<Index>(p)) * t[p];
            for (std::size_t r = 0; r < nr; ++r) {
                const double eta = t[np + nr + r] + t[np + r] * s;
                total += data.Y(i, static_cast<Index>(r)) > 0.5 ? softplus(-eta) : softplus(eta);
            }
        }
        return 2.0 * total;
    };

    std::vector<double> base(np + 2 * nr, 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
        const double prevalence = data.Y.col(static_cast<Index>(r)).mean();
        base[np + nr + r] = std::log(prevalence / (1.0 - prevalence));
    }

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double best = loss(base);
    std::vector<double> best_point = base;
    for (int k = 0; k < options.restarts; ++k) {
        std::vector<double> start = base;
        for (double& v : start) v += normal(rng);
        Simplex s = nelder_mead(loss, start, 0.5, options.max_evaluations);
        // Restart from the optimum to escape premature collapse of the simplex.
        for (int polish = 0; polish < 3; ++polish) {
            Simplex again = nelder_mead(loss, s.best, 0.05, options.max_evaluations);
            if (again.value >= s.value - 1e-12) {
                s = again.value < s.value ? again : s;
                break;
            }
            s = again;
        }
        if (s.value < best) {
            best = s.value;
            best_point = s.best;
        }
    }
    return best;
}

ReferenceLogistic reference_logistic(const Matrix& design, const Vector& y) {
    const std::size_t n = static_cast<std::size_t>(design.rows());
    const std::size_t k = static_cast<std::size_t>(design.cols());
    ReferenceLogistic out;
    out.coefficients.assign(k, 0.0);

    auto evaluate = [&](const std::vector<double>& beta, std::vector<double>& eta) {
        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            eta[i] = 0.0;
            for (std::size_t j = 0; j < k; ++j) eta[i] += design(static_cast<Index>(i), static_cast<Index>(j)) * beta[j];
            dev += y(static_cast<Index>(i)) > 0.5 ? softplus(-eta[i]) : softplus(eta[i]);
        }
        return 2.0 * dev;
    };

    std::vector<double> eta(n);
    double dev = evaluate(out.coefficients, eta);
    for (int iter = 0; iter < 100 && dev > 1e-10; ++iter) {
        std::vector<std::vector<double>> h(k, std::vector<double>(k, 0.0));
        std::vector<double> g(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-eta[i]));
            const double w = p * (1.0 - p);
            for (std::size_t a = 0; a < k; ++a) {
                const double xa = design(static_cast<Index>(i), static_cast<Index>(a));
                g[a] += xa * (y(static_cast<Index>(i)) - p);
                for (std::size_t b = 0; b < k; ++b) h[a][b] += w * xa * design(static_cast<Index>(i), static_cast<Index>(b));
            }
        }
        const std::vector<double> step = solve_gauss(h, g);
        if (step.empty()) break;
        std::vector<double> next(k);
        std::vector<double> next_eta(n);
        double t = 1.0;
        double next_dev = 0.0;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            for (std::size_t j = 0; j < k; ++j) next[j] = out.coefficients[j] + t * step[j];
            next_dev = evaluate(next, next_eta);
            if (next_dev <= dev) break;
        }
        if (!(next_dev <= dev)) break;
        const double change = dev - next_dev;
        out.coefficients = next;
        eta = next_eta;
        dev = next_dev;
        if (change < 1e-13 * (dev + 1e-13)) break;
    }
    out.deviance = dev;
    double max_eta = 0.0;
    for (double e : eta) max_eta = std::max(max_eta, std::abs(e));
    out.separated = dev < 1e-6 || max_eta > 30.0;
    return out;
}

Dataset arbitration_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(20, 50);
    std::uniform_int_distribution<int> p_dist(1, 3);
    std::uniform_int_distribution<int> r_dist(1, 3);
    SyntheticSpec spec;
    spec.n = n_dist(rng);
    spec.num_predictors = p_dist(rng);
    spec.num_responses = r_dist(rng);
    spec.true_dims = 1;
    spec.coefficient_scale = 0.6;
    spec.intercept_spread = 0.5;
    for (int attempt = 0; attempt < 100; ++attempt) {
        spec.seed = rng();
        Dataset data = generate_synthetic(spec).dataset;
        Matrix design(data.n(), data.num_predictors() + 1);
        design.col(0).setOnes();
        design.rightCols(data.num_predictors()) = data.X;
        bool separable = false;
        for (Index r = 0; r < data.num_responses() && !separable; ++r)
            separable = reference_logistic(design, data.Y.col(r)).separated;
        if (!separable) return data;
    }
    throw NumericalError("could not draw a non-separable arbitration instance");
}

std::vector<ValidationCheck> run_validation(const ValidationOptions& options) {
    std::vector<ValidationCheck> checks;
    std::mt19937_64 rng(options.seed);

    {
        ValidationCheck check{"majorization inequality", true, ""};
        std::normal_distribution<double> normal(0.0, 3.0);
        std::bernoulli_distribution coin(0.5);
        double worst = 0.0;
        double worst_touch = 0.0;
        for (int s = 0; s < options.majorization_samples; ++s) {
            const Eigen::Vector2d theta(normal(rng), normal(rng));
            const Eigen::Vector2d tilde(normal(rng), normal(rng));
            const Eigen::Vector2d g = coin(rng) ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
            const MajorizationValues v = majorization_gap(theta, tilde, g, options.majorization_constant);
            worst = std::min(worst, v.majorizer - v.loss);
            const MajorizationValues touch = majorization_gap(tilde, tilde, g, options.majorization_constant);
            worst_touch = std::max(worst_touch, std::abs(touch.majorizer - touch.loss));
        }
        check.passed = worst >= -1e-12 && worst_touch <= 1e-12;
        check.detail = "min(g - f) = " + fmt(worst) + ", max touch gap = " + fmt(worst_touch);
        checks.push_back(check);
    }

    {
        ValidationCheck check{"monotone descent", true, ""};
        std::uniform_int_distribution<int> n_dist(20, 200);
        std::uniform_int_distribution<int> size_dist(2, 6);
        std::uniform_int_distribution<int> m_dist(1, 3);
        int failures = 0;
        double worst = 0.0;
        for (int k = 0; k < options.descent_instances; ++k) {
            SyntheticSpec spec;
            spec.n = n_dist(rng);
            spec.num_predictors = size_dist(rng);
            spec.num_responses = size_dist(rng);
            spec.true_dims = std::min<Index>(m_dist(rng), std::min(spec.num_predictors, spec.num_responses));
            spec.seed = rng();
            const Dataset data = generate_synthetic(spec).dataset;
            for (const bool constrained : {false, true}) {
                FitConfig config;
                config.dimensions = spec.true_dims;
                config.max_iter = 500;
                config.majorization_constant = options.majorization_constant;
                if (constrained) config.assignment = random_assignment(spec.num_responses, spec.true_dims, rng);
                const FitResult fit = melodic::fit(data, config);
                for (std::size_t t = 1; t < fit.trace.size(); ++t) {
                    const double rise = (fit.trace[t] - fit.trace[t - 1]) / fit.trace[t - 1];
                    worst = std::max(worst, rise);
                    if (rise > 1e-9) {
                        ++failures;
                        break;
                    }
                }
            }
        }
        check.passed = failures == 0;
        check.detail = std::to_string(failures) + " fits with an increase; worst relative rise " + fmt(worst);
        checks.push_back(check);
    }

    {
        ValidationCheck check{"full-rank equivalence", true, ""};
        double worst = 0.0;
        for (int k = 0; k < options.equivalence_instances; ++k) {
            SyntheticSpec spec;
            spec.n = 200;
            spec.num_predictors = 4;
            spec.num_responses = 3;
            spec.true_dims = 3;
            spec.coefficient_scale = 0.5;
            spec.seed = rng();
            const Dataset data = generate_synthetic(spec).dataset;
            FitConfig config;
            config.dimensions = 3;
            config.assignment = DimensionAssignment::identity(3);
            config.tol = 1e-12;
            const FitResult fit = melodic::fit(data, config);
            Matrix design(data.n(), data.num_predictors() + 1);
            design.col(0).setOnes();
            design.rightCols(data.num_predictors()) = data.X;
            double separate = 0.0;
            for (Index r = 0; r < data.num_responses(); ++r) separate += reference_logistic(design, data.Y.col(r)).deviance;
            worst = std::max(worst, std::abs(fit.deviance - separate));
        }
        check.passed = worst <= 1e-3;
        check.detail = "max |deviance difference| = " + fmt(worst);
        checks.push_back(check);
    }

    {
        ValidationCheck check{"brute-force arbitration", true, ""};
        double worst = -1e300;
        for (int k = 0; k < options.brute_force_instances; ++k) {
            const Dataset data = arbitration_instance(rng);
            FitConfig config;
            config.dimensions = 1;
            config.tol = 1e-12;
            const FitResult fit = melodic::fit(data, config);
            BruteForceOptions bf;
            bf.seed = rng();
            worst = std::max(worst, fit.deviance - brute_force_fit(data, 1, bf));
        }
        check.passed = worst <= 1e-4;
        check.detail = "max (MM - brute force) = " + fmt(worst);
        checks.push_back(check);
    }
    return checks;
}

}  // namespace melodic::oracles
