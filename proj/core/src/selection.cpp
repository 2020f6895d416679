#include "melodic/selection.hpp"

#include "melodic/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace melodic {

namespace {

constexpr double kSeparationEta = 25.0;

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double binomial_deviance(const Vector& eta, const Vector& y) {
    double total = 0.0;
    for (Index i = 0; i < eta.size(); ++i) total += y(i) > 0.5 ? softplus(-eta(i)) : softplus(eta(i));
    return 2.0 * total;
}

void mark_best(ScanResult& scan) {
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        if (!scan.rows[i].error.empty()) continue;
        const ModelSummary& s = scan.rows[i].summary;
        if (!scan.best_aic || s.aic < scan.rows[*scan.best_aic].summary.aic) scan.best_aic = i;
        if (!scan.best_bic || s.bic < scan.rows[*scan.best_bic].summary.bic) scan.best_bic = i;
    }
}

ScanRow run_row(const std::string& label, const Dataset& data, const FitConfig& config) {
    ScanRow row;
    row.summary.label = label;
    row.summary.n = data.n();
    row.summary.n_params =
        count_parameters(data.num_predictors(), data.num_responses(), config.dimensions, config.assignment);
    try {
        FitResult fit = melodic::fit(data, config);
        row.summary = summarize(label, fit.deviance, row.summary.n_params, data.n());
        row.fit = std::move(fit);
    } catch (const Error& e) {
        row.error = e.what();
    }
    return row;
}

}  // namespace

Index count_parameters(Index num_predictors, Index num_responses, Index dims,
                       const std::optional<DimensionAssignment>& assignment) {
    if (assignment) return (num_predictors - 1) * dims + assignment->ones() + num_responses;
    return (num_predictors + num_responses) * dims + num_responses - dims * (dims + 1) / 2;
}

InformationCriteria information_criteria(double deviance, Index n_params, Index n) {
    if (n < 1) throw InputError("sample size must be positive");
    const double k = static_cast<double>(n_params);
    return {deviance + 2.0 * k, deviance + std::log(static_cast<double>(n)) * k};
}

ModelSummary summarize(const std::string& label, double deviance, Index n_params, Index n) {
    const InformationCriteria ic = information_criteria(deviance, n_params, n);
    return {label, deviance, n_params, ic.aic, ic.bic, n};
}

LogisticFit fit_univariate_logistic(const Matrix& design, const Vector& y, int max_iter) {
    if (design.rows() != y.size()) throw DimensionError("design and response lengths differ");
    const double ones = y.sum();
    if (ones < 0.5 || ones > static_cast<double>(y.size()) - 0.5) {
        throw InputError("logistic regression needs both classes present");
    }

    LogisticFit out;
    out.coefficients = Vector::Zero(design.cols());
    Vector eta = Vector::Zero(design.rows());
    double current = binomial_deviance(eta, y);

    for (int t = 1; t <= max_iter; ++t) {
        const Vector p = (1.0 + (-eta.array()).exp()).inverse().matrix();
        const Vector w = (p.array() * (1.0 - p.array())).matrix();
        const Matrix hessian = design.transpose() * w.asDiagonal() * design;
        const Vector gradient = design.transpose() * (y - p);
        const Vector step = hessian.ldlt().solve(gradient);
        if (!step.allFinite()) break;

        double scale = 1.0;
        Vector candidate = out.coefficients + step;
        Vector next_eta = design * candidate;
        double next = binomial_deviance(next_eta, y);
        while (next > current && scale > 1e-10) {
            scale *= 0.5;
            candidate = out.coefficients + scale * step;
            next_eta = design * candidate;
            next = binomial_deviance(next_eta, y);
        }
        out.iterations = t;
        if (next > current) break;

        out.coefficients = candidate;
        eta = next_eta;
        const double change = current - next;
        current = next;
        if (change <= 1e-10 * std::max(current, 1e-10)) {
            out.converged = true;
            break;
        }
    }
    out.deviance = current;
    out.separated = eta.cwiseAbs().maxCoeff() > kSeparationEta;
    if (out.separated) out.converged = false;
    return out;
}

double intercept_only_deviance(const Vector& y) {
    const double n = static_cast<double>(y.size());
    const double k = y.sum();
    const double p = k / n;
    double total = 0.0;
    if (k > 0.0) total += k * std::log(p);
    if (n - k > 0.0) total += (n - k) * std::log(1.0 - p);
    return -2.0 * total;
}

QualityReport quality_of_representation(const Dataset& data, const FitResult& fit) {
    const Vector shares = response_deviances(data, fit.params);
    Matrix design(data.n(), data.num_predictors() + 1);
    design.col(0).setOnes();
    design.rightCols(data.num_predictors()) = data.X;

    QualityReport report;
    for (Index r = 0; r < data.num_responses(); ++r) {
        ResponseQuality q;
        q.name = data.response_names[static_cast<std::size_t>(r)];
        const Vector y = data.Y.col(r);
        q.null_deviance = intercept_only_deviance(y);
        q.logistic_deviance = fit_univariate_logistic(design, y).deviance;
        q.model_deviance = shares(r);
        const double reachable = q.null_deviance - q.logistic_deviance;
        if (reachable >= 1e-8) q.quality = (q.null_deviance - q.model_deviance) / reachable;
        report.responses.push_back(std::move(q));
    }
    return report;
}

ScanResult dimension_scan(const Dataset& data, Index lo, Index hi, const FitConfig& config) {
    const Index top = std::min(data.num_predictors(), data.num_responses());
    if (lo < 1 || hi < lo || hi > top) {
        throw InputError("dimension range must lie within [1, " + std::to_string(top) + "]");
    }
    ScanResult scan;
    for (Index m = lo; m <= hi; ++m) {
        FitConfig row_config = config;
        row_config.dimensions = m;
        row_config.assignment.reset();
        scan.rows.push_back(run_row("M=" + std::to_string(m), data, row_config));
    }
    mark_best(scan);
    return scan;
}

ScanResult predictor_drop_scan(const Dataset& data, const FitConfig& config) {
    if (data.num_predictors() < 2) throw InputError("dropping predictors needs P >= 2");
    ScanResult scan;
    for (Index p = 0; p < data.num_predictors(); ++p) {
        const std::string label = "-" + data.predictor_names[static_cast<std::size_t>(p)];
        ScanRow row;
        try {
            row = run_row(label, data.without_predictor(p), config);
        } catch (const Error& e) {
            row.summary.label = label;
            row.error = e.what();
        }
        scan.rows.push_back(std::move(row));
    }
    mark_best(scan);
    return scan;
}

}  // namespace melodic
