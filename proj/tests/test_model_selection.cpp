#include <doctest.h>

#include "melodic/model.hpp"
#include "melodic/oracles.hpp"
#include "melodic/selection.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace melodic;

namespace {

DimensionAssignment pattern(std::initializer_list<std::initializer_list<int>> rows) {
    Eigen::MatrixXi d(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& row : rows) {
        Index j = 0;
        for (int v : row) d(i, j++) = v;
        ++i;
    }
    return DimensionAssignment(d);
}

Matrix with_intercept(const Matrix& X) {
    Matrix design(X.rows(), X.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(X.cols()) = X;
    return design;
}

// Draws responses from the distance model for a given truth.
Dataset draw_from(const Matrix& raw_x, const ModelParams& truth, std::uint64_t seed) {
    Matrix x = raw_x;
    x.rowwise() -= x.colwise().mean();
    const Matrix pi = class_probabilities(x, truth);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix y(raw_x.rows(), truth.num_responses());
    for (Index i = 0; i < y.rows(); ++i)
        for (Index r = 0; r < y.cols(); ++r) y(i, r) = unit(rng) < pi(i, 2 * r + 1) ? 1.0 : 0.0;
    return Dataset::from_raw(raw_x, y);
}

}  // namespace

TEST_CASE("parameter counts") {
    CHECK(count_parameters(9, 11, 2) == 48);
    CHECK(count_parameters(9, 11, 7) == 123);
    CHECK(count_parameters(8, 5, 2) == 28);
    const Index table1[] = {30, 48, 65, 81, 96, 110, 123};
    for (Index m = 1; m <= 7; ++m) CHECK(count_parameters(9, 11, m) == table1[m - 1]);

    CHECK(count_parameters(8, 5, 1, DimensionAssignment(Eigen::MatrixXi::Ones(5, 1))) == 17);
    CHECK(count_parameters(8, 5, 2, pattern({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}})) == 24);
    CHECK(count_parameters(8, 5, 2, pattern({{1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}})) == 24);
    CHECK(count_parameters(8, 5, 2, pattern({{1, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 1}})) == 25);
}

TEST_CASE("information criteria") {
    const InformationCriteria a = information_criteria(18311, 30, 1885);
    CHECK(a.aic == 18371);
    CHECK(a.bic == doctest::Approx(18311 + 30 * std::log(1885.0)));
    CHECK(std::abs(a.bic - 18538) <= 1.0);

    const InformationCriteria zero = information_criteria(0, 0, 17);
    CHECK(zero.aic == 0.0);
    CHECK(zero.bic == 0.0);

    const InformationCriteria t1 = information_criteria(4553.34, 17, 786);
    CHECK(t1.aic == doctest::Approx(4587.34));
    CHECK(t1.bic == doctest::Approx(4666.68).epsilon(1e-5));

    const ModelSummary s = summarize("x", 10.0, 3, 100);
    CHECK(s.aic == 16.0);
    CHECK(s.bic == doctest::Approx(10.0 + 3 * std::log(100.0)));
    CHECK_THROWS_AS(information_criteria(1.0, 1, 0), InputError);
}

TEST_CASE("univariate logistic regression") {
    SUBCASE("intercept only, balanced") {
        Vector y(10);
        y << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0;
        const LogisticFit fit = fit_univariate_logistic(Matrix::Ones(10, 1), y);
        CHECK(fit.converged);
        CHECK(fit.deviance == doctest::Approx(20.0 * std::log(2.0)).epsilon(1e-12));
        CHECK(fit.deviance == doctest::Approx(13.86294).epsilon(1e-6));
        CHECK(intercept_only_deviance(y) == doctest::Approx(13.86294).epsilon(1e-6));
    }
    SUBCASE("intercept only, eight successes") {
        Vector y = Vector::Ones(10);
        y(0) = y(1) = 0.0;
        const double analytic = -2.0 * (8.0 * std::log(0.8) + 2.0 * std::log(0.2));
        CHECK(analytic == doctest::Approx(10.008048470763757).epsilon(1e-14));
        CHECK(fit_univariate_logistic(Matrix::Ones(10, 1), y).deviance == doctest::Approx(analytic).epsilon(1e-12));
        CHECK(intercept_only_deviance(y) == doctest::Approx(analytic).epsilon(1e-14));
        CHECK(fit_univariate_logistic(Matrix::Ones(10, 1), y).coefficients(0) == doctest::Approx(std::log(4.0)));
    }
    SUBCASE("agrees with the independent Newton oracle") {
        std::mt19937_64 rng(5);
        for (int k = 0; k < 50; ++k) {
            oracles::SyntheticSpec spec;
            spec.n = 80;
            spec.num_predictors = 3;
            spec.num_responses = 1;
            spec.true_dims = 1;
            spec.coefficient_scale = 0.5;
            spec.seed = rng();
            const Dataset d = oracles::generate_synthetic(spec).dataset;
            const Matrix design = with_intercept(d.X);
            const LogisticFit fit = fit_univariate_logistic(design, d.Y.col(0));
            const oracles::ReferenceLogistic ref = oracles::reference_logistic(design, d.Y.col(0));
            CHECK(std::abs(fit.deviance - ref.deviance) <= 1e-6);
            CHECK_FALSE(ref.separated);
        }
    }
    SUBCASE("perfect separation is flagged") {
        Matrix design(2, 2);
        design << 1, -1, 1, 1;
        const LogisticFit fit = fit_univariate_logistic(design, Eigen::Vector2d(0, 1));
        CHECK(fit.separated);
        CHECK_FALSE(fit.converged);
        CHECK(fit.deviance < 1e-6);
    }
    SUBCASE("single class rejected") {
        CHECK_THROWS_AS(fit_univariate_logistic(Matrix::Ones(3, 1), Vector::Ones(3)), InputError);
    }
}

TEST_CASE("quality of representation") {
    SUBCASE("full-rank identity fit reproduces the separate regressions") {
        oracles::SyntheticSpec spec;
        spec.n = 200;
        spec.num_predictors = 4;
        spec.num_responses = 3;
        spec.true_dims = 3;
        spec.coefficient_scale = 0.6;
        spec.seed = 12;
        const Dataset d = oracles::generate_synthetic(spec).dataset;
        FitConfig config;
        config.dimensions = 3;
        config.assignment = DimensionAssignment::identity(3);
        config.tol = 1e-12;
        const QualityReport q = quality_of_representation(d, fit(d, config));
        REQUIRE(q.responses.size() == 3);
        for (const auto& r : q.responses) {
            REQUIRE(r.quality.has_value());
            CHECK(*r.quality == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(r.null_deviance >= r.logistic_deviance);
        }
    }
    SUBCASE("coincident categories cannot beat the null model") {
        oracles::SyntheticSpec spec;
        spec.n = 100;
        spec.num_predictors = 3;
        spec.num_responses = 2;
        spec.true_dims = 1;
        spec.intercept_spread = 2.0;
        spec.seed = 13;
        const Dataset d = oracles::generate_synthetic(spec).dataset;
        FitConfig config;
        config.dimensions = 1;
        FitResult f = fit(d, config);
        f.params.K.row(0).setZero();
        f.params.L.row(0).setZero();
        const QualityReport q = quality_of_representation(d, f);
        CHECK(q.responses[0].model_deviance == doctest::Approx(2.0 * 100 * std::log(2.0)));
        REQUIRE(q.responses[0].quality.has_value());
        CHECK(*q.responses[0].quality <= 0.0);
    }
    SUBCASE("uninformative predictors leave Q undefined") {
        Matrix x(8, 1);
        x << 1, -1, 1, -1, 2, -2, 2, -2;
        Matrix y(8, 1);
        y << 1, 1, 0, 0, 1, 1, 0, 0;
        const Dataset d = Dataset::from_raw(x, y);
        FitResult f;
        f.params = {Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
        const QualityReport q = quality_of_representation(d, f);
        CHECK_FALSE(q.responses[0].quality.has_value());
    }
    SUBCASE("rotation of the fitted parameters does not change Q") {
        oracles::SyntheticSpec spec;
        spec.n = 150;
        spec.num_predictors = 4;
        spec.num_responses = 4;
        spec.true_dims = 2;
        spec.seed = 14;
        const Dataset d = oracles::generate_synthetic(spec).dataset;
        FitConfig config;
        config.dimensions = 2;
        const FitResult f = fit(d, config);
        std::mt19937_64 rng(1);
        const Matrix T = melodic::testing::random_orthogonal(2, rng);
        FitResult rotated = f;
        rotated.params = {f.params.B * T, f.params.K * T, f.params.L * T};
        const QualityReport a = quality_of_representation(d, f);
        const QualityReport b = quality_of_representation(d, rotated);
        for (std::size_t r = 0; r < a.responses.size(); ++r) {
            CHECK(*a.responses[r].quality == doctest::Approx(*b.responses[r].quality).epsilon(1e-10));
        }
    }
}

TEST_CASE("dimension scan") {
    oracles::SyntheticSpec spec;
    spec.n = 300;
    spec.num_predictors = 5;
    spec.num_responses = 5;
    spec.true_dims = 2;
    spec.seed = 15;
    const Dataset d = oracles::generate_synthetic(spec).dataset;
    FitConfig config;
    const ScanResult a = dimension_scan(d, 1, 4, config);
    const ScanResult b = dimension_scan(d, 1, 4, config);
    REQUIRE(a.rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.rows[i].error.empty());
        CHECK(a.rows[i].summary.deviance == b.rows[i].summary.deviance);
        CHECK(a.rows[i].summary.n_params == count_parameters(5, 5, static_cast<Index>(i) + 1));
        if (i > 0) CHECK(a.rows[i].summary.deviance <= a.rows[i - 1].summary.deviance + 1e-3);
    }
    REQUIRE(a.best_bic.has_value());
    CHECK(*a.best_bic == 1);
    CHECK(a.best_aic == b.best_aic);
    CHECK_THROWS_AS(dimension_scan(d, 0, 2, config), InputError);
    CHECK_THROWS_AS(dimension_scan(d, 1, 6, config), InputError);
}

TEST_CASE("predictor drop scan") {
    std::mt19937_64 rng(16);
    const Matrix raw = melodic::testing::random_matrix(400, 4, rng);
    // Predictor 4 carries nothing, predictor 1 carries a lot.
    ModelParams truth;
    truth.B = Matrix::Zero(4, 2);
    truth.B << 1.5, 0.0, 0.3, 0.6, 0.0, 0.8, 0.0, 0.0;
    truth.K = melodic::testing::random_matrix(5, 2, rng);
    truth.L = Matrix::Zero(5, 2);
    const Dataset d = draw_from(raw, truth, 17);

    FitConfig config;
    config.dimensions = 2;
    const FitResult full = fit(d, config);
    const ModelSummary full_summary =
        summarize("all", full.deviance, count_parameters(4, 5, 2), d.n());

    const ScanResult scan = predictor_drop_scan(d, config);
    REQUIRE(scan.rows.size() == 4);
    for (const ScanRow& row : scan.rows) {
        CHECK(row.error.empty());
        CHECK(row.summary.n_params == count_parameters(3, 5, 2));
    }
    CHECK(scan.rows[0].summary.label == "-x1");
    CHECK(scan.rows[3].summary.label == "-x4");
    CHECK(scan.rows[0].summary.deviance - full.deviance > 10.0);
    CHECK(scan.rows[3].summary.deviance - full.deviance < 7.0);
    CHECK(scan.rows[3].summary.aic < full_summary.aic);

    // Rows match refitting by hand.
    const FitResult manual = fit(d.without_predictor(2), config);
    CHECK(scan.rows[2].summary.deviance == manual.deviance);
}
