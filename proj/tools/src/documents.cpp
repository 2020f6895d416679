#include "documents.hpp"

#include "melodic/data_io.hpp"

#include <algorithm>
#include <cstdio>

namespace melodic::cli {

namespace {

const char* mode_name(Preprocessing mode) {
    switch (mode) {
        case Preprocessing::None: return "none";
        case Preprocessing::Center: return "center";
        case Preprocessing::Standardize: return "standardize";
    }
    return "center";
}

Matrix matrix_from(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InputError("model document: '" + what + "' is not a matrix");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw InputError("model document: '" + what + "' has ragged rows");
        }
        for (Index c = 0; c < cols; ++c) {
            const Json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw InputError("model document: '" + what + "' has a non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

Vector vector_from(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InputError("model document: '" + what + "' is not a vector");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) {
        const Json& e = j[static_cast<std::size_t>(i)];
        if (!e.is_number()) throw InputError("model document: '" + what + "' has a non-numeric entry");
        v(i) = e.get<double>();
    }
    return v;
}

Json number_or_null(double v, bool present) { return present ? Json(v) : Json(nullptr); }

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

Json matrix_json(const Matrix& m) {
    Json out = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json fit_document(const Dataset& data, const FitConfig& config, const FitResult& fit,
                  const QualityReport& quality) {
    Json doc;
    doc["format"] = "melodic.fit/1";
    doc["dimensions"] = config.dimensions;
    if (config.assignment) {
        Json rows = Json::array();
        const Eigen::MatrixXi& d = config.assignment->pattern();
        for (Index r = 0; r < d.rows(); ++r) {
            Json row = Json::array();
            for (Index m = 0; m < d.cols(); ++m) row.push_back(d(r, m));
            rows.push_back(std::move(row));
        }
        doc["constraints"] = std::move(rows);
    } else {
        doc["constraints"] = nullptr;
    }
    doc["location_rule"] = config.location_rule == LocationRule::MinimalNorm ? "minimal_norm" : "equal_split";
    doc["predictor_names"] = data.predictor_names;
    doc["response_names"] = data.response_names;
    doc["preprocessing"] = {
        {"mode", mode_name(data.preprocessing)},
        {"sd_ddof", data.sd_ddof},
        {"centering_offsets", vector_json(data.centering_offsets)},
        {"scaling_factors", vector_json(data.scaling_factors)},
        {"predictor_sd", vector_json(data.predictor_sd)},
    };
    doc["params"] = {
        {"B", matrix_json(fit.params.B)},
        {"K", matrix_json(fit.params.K)},
        {"L", matrix_json(fit.params.L)},
        {"V", matrix_json(category_coordinates(fit.params))},
    };
    doc["deviance"] = fit.deviance;
    doc["trace"] = fit.trace;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
    Json degenerate = Json::array();
    for (Index r : fit.degenerate_responses) degenerate.push_back(data.response_names[static_cast<std::size_t>(r)]);
    doc["degenerate_responses"] = std::move(degenerate);
    doc["possible_separation"] = fit.possible_separation;

    const Index n_params =
        count_parameters(data.num_predictors(), data.num_responses(), config.dimensions, config.assignment);
    const ModelSummary s = summarize("fit", fit.deviance, n_params, data.n());
    doc["summary"] = {{"n", s.n}, {"n_params", s.n_params}, {"deviance", s.deviance}, {"aic", s.aic}, {"bic", s.bic}};

    const ImpliedCoefficients implied = implied_coefficients(fit.params);
    Json table = Json::array();
    for (Index r = 0; r < data.num_responses(); ++r) {
        table.push_back({{"response", data.response_names[static_cast<std::size_t>(r)]},
                         {"intercept", implied.intercepts(r)},
                         {"coefficients", vector_json(implied.coefficients.col(r))}});
    }
    doc["implied_coefficients"] = std::move(table);

    Json q = Json::array();
    for (const ResponseQuality& rq : quality.responses) {
        q.push_back({{"response", rq.name},
                     {"null_deviance", rq.null_deviance},
                     {"logistic_deviance", rq.logistic_deviance},
                     {"model_deviance", rq.model_deviance},
                     {"quality", number_or_null(rq.quality.value_or(0.0), rq.quality.has_value())}});
    }
    doc["quality"] = std::move(q);
    doc["settings"] = {{"tol", config.tol}, {"max_iter", config.max_iter}, {"restarts", config.restarts},
                       {"seed", config.seed}};
    return doc;
}

Matrix FittedModel::transform(const Matrix& raw_x) const {
    Matrix x = raw_x;
    x.rowwise() -= scaling.centering_offsets.transpose();
    x.array().rowwise() /= scaling.scaling_factors.transpose().array();
    return x;
}

FittedModel model_from_document(const Json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "melodic.fit/1") {
        throw InputError("model document is not a melodic.fit/1 document");
    }
    FittedModel model;
    try {
        model.predictor_names = doc.at("predictor_names").get<std::vector<std::string>>();
        model.response_names = doc.at("response_names").get<std::vector<std::string>>();
        const Json& prep = doc.at("preprocessing");
        const std::string mode = prep.at("mode").get<std::string>();
        model.mode = mode == "none" ? Preprocessing::None
                     : mode == "standardize" ? Preprocessing::Standardize
                                             : Preprocessing::Center;
        model.scaling.centering_offsets = vector_from(prep.at("centering_offsets"), "centering_offsets");
        model.scaling.scaling_factors = vector_from(prep.at("scaling_factors"), "scaling_factors");
        model.predictor_sd = vector_from(prep.at("predictor_sd"), "predictor_sd");
        const Json& params = doc.at("params");
        model.params.B = matrix_from(params.at("B"), "B");
        model.params.K = matrix_from(params.at("K"), "K");
        model.params.L = matrix_from(params.at("L"), "L");
    } catch (const Json::exception& e) {
        throw InputError(std::string("model document: ") + e.what());
    }
    const Index P = static_cast<Index>(model.predictor_names.size());
    const Index R = static_cast<Index>(model.response_names.size());
    const ModelParams& p = model.params;
    if (p.B.rows() != P || p.K.rows() != R || p.L.rows() != R || p.K.cols() != p.B.cols() ||
        p.L.cols() != p.B.cols() || model.scaling.centering_offsets.size() != P ||
        model.scaling.scaling_factors.size() != P || model.predictor_sd.size() != P) {
        throw InputError("model document: matrix sizes disagree with the name lists");
    }
    if ((model.scaling.scaling_factors.array() <= 0.0).any()) {
        throw InputError("model document: scaling factors must be positive");
    }
    return model;
}

FittedModel load_model(const std::string& path) {
    Json doc;
    try {
        doc = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw InputError("model document '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_document(doc);
}

Json scan_document(const ScanResult& scan, ScanKind kind, const Dataset& data, Index first_dims) {
    Json doc;
    doc["format"] = "melodic.scan/1";
    doc["kind"] = kind == ScanKind::Dimensions ? "dimensions" : "drop_predictor";
    doc["n"] = data.n();
    Json rows = Json::array();
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        const ScanRow& row = scan.rows[i];
        const bool ok = row.error.empty();
        Json j;
        j["label"] = row.summary.label;
        j["dimensions"] = kind == ScanKind::Dimensions ? first_dims + static_cast<Index>(i) : first_dims;
        j["dropped_predictor"] = kind == ScanKind::DropPredictor ? Json(data.predictor_names[i]) : Json(nullptr);
        j["deviance"] = number_or_null(row.summary.deviance, ok);
        j["n_params"] = row.summary.n_params;
        j["aic"] = number_or_null(row.summary.aic, ok);
        j["bic"] = number_or_null(row.summary.bic, ok);
        j["converged"] = ok && row.fit && row.fit->converged;
        j["iterations"] = row.fit ? row.fit->iterations : 0;
        j["error"] = ok ? Json(nullptr) : Json(row.error);
        rows.push_back(std::move(j));
    }
    doc["rows"] = std::move(rows);
    doc["best_aic"] = scan.best_aic ? Json(scan.rows[*scan.best_aic].summary.label) : Json(nullptr);
    doc["best_bic"] = scan.best_bic ? Json(scan.rows[*scan.best_bic].summary.label) : Json(nullptr);
    return doc;
}

std::string scan_table(const ScanResult& scan) {
    // AIC and BIC cells carry a trailing mark character so decimals line up.
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"model", "deviance", "#param", "AIC ", "BIC "});
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        const ScanRow& row = scan.rows[i];
        const ModelSummary& s = row.summary;
        if (!row.error.empty()) {
            cells.push_back({s.label, "failed", std::to_string(s.n_params), "- ", "- "});
            continue;
        }
        const bool best_aic = scan.best_aic && *scan.best_aic == i;
        const bool best_bic = scan.best_bic && *scan.best_bic == i;
        cells.push_back({s.label, fixed(s.deviance, 2), std::to_string(s.n_params),
                         fixed(s.aic, 2) + (best_aic ? "*" : " "), fixed(s.bic, 2) + (best_bic ? "*" : " ")});
    }
    std::vector<std::size_t> width(5, 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : cells) {
        std::string line = row[0] + std::string(width[0] - row[0].size(), ' ');
        for (std::size_t c = 1; c < row.size(); ++c) line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
        while (line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    out += "* lowest AIC / BIC\n";
    return out;
}

std::string serialize(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace melodic::cli
