#include "commands.hpp"

#include "biplot.hpp"
#include "documents.hpp"

#include "melodic/data_io.hpp"
#include "melodic/oracles.hpp"
#include "melodic/selection.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <ostream>
#include <sstream>

namespace melodic::cli {

namespace {

struct Globals {
    std::string data;
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

RunConfig load_run_config(const Globals& g) {
    if (g.config.empty()) throw InputError("--config is required");
    RunConfig cfg = parse_fit_config(g.config);
    if (g.seed_given) cfg.fit.seed = g.seed;
    return cfg;
}

Dataset load_data(const Globals& g, const RunConfig& cfg, std::ostream& err) {
    if (g.data.empty()) throw InputError("--data is required");
    if (ends_with(g.data, ".json")) return dataset_from_json(read_text_file(g.data));
    if (cfg.ingest.predictor_columns.empty() || cfg.ingest.response_columns.empty()) {
        throw InputError("config must list 'predictors' and 'responses' for CSV input");
    }
    std::vector<std::string> notices;
    Dataset data = load_csv(g.data, cfg.ingest, &notices);
    if (!g.quiet)
        for (const auto& n : notices) err << "note: " << n << "\n";
    return data;
}

// Raw predictor matrix for the model's predictor columns.
Matrix read_predictors(const std::string& path, const FittedModel& model) {
    const CsvTable table = read_csv_table(path);
    Matrix raw(static_cast<Index>(table.rows.size()), static_cast<Index>(model.predictor_names.size()));
    for (std::size_t j = 0; j < model.predictor_names.size(); ++j) {
        const std::string& name = model.predictor_names[j];
        const std::size_t c = table.column(name);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            raw(static_cast<Index>(i), static_cast<Index>(j)) = parse_number(table.rows[i][c], i, name);
        }
    }
    return raw;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_fit(const Globals& g, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_run_config(g);
    const Dataset data = load_data(g, cfg, err);
    const FitResult result = fit(data, cfg.fit);
    const QualityReport quality = quality_of_representation(data, result);
    const Json doc = fit_document(data, cfg.fit, result, quality);
    require_valid(doc, "fit");
    emit(g.out, serialize(doc), out);

    if (!g.quiet) {
        const Json& s = doc["summary"];
        err << "deviance " << g17(result.deviance) << ", " << s["n_params"].get<Index>() << " parameters, AIC "
            << s["aic"].get<double>() << ", BIC " << s["bic"].get<double>() << ", " << result.iterations
            << " iterations\n";
        for (Index r : result.degenerate_responses) {
            err << "warning: response '" << data.response_names[static_cast<std::size_t>(r)]
                << "' has a vanishing discrimination; its location was set to 0\n";
        }
        if (result.possible_separation) err << "warning: very large discriminations, possible separation\n";
    }
    if (!result.converged) {
        err << "error: no convergence after " << result.iterations << " iterations\n";
        return kNotConverged;
    }
    return kSuccess;
}

std::pair<Index, Index> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const Index m = std::stol(text);
            return {m, m};
        }
        return {std::stol(text.substr(0, dots)), std::stol(text.substr(dots + 2))};
    } catch (const std::exception&) {
        throw InputError("--dims expects lo..hi, got '" + text + "'");
    }
}

int cmd_scan(const Globals& g, const std::string& dims, bool drop, std::ostream& out, std::ostream& err) {
    if (dims.empty() == !drop) throw InputError("scan needs exactly one of --dims lo..hi or --drop-predictors");
    const RunConfig cfg = load_run_config(g);
    const Dataset data = load_data(g, cfg, err);
    ScanResult scan;
    Json doc;
    if (drop) {
        scan = predictor_drop_scan(data, cfg.fit);
        doc = scan_document(scan, ScanKind::DropPredictor, data, cfg.fit.dimensions);
    } else {
        const auto [lo, hi] = parse_range(dims);
        scan = dimension_scan(data, lo, hi, cfg.fit);
        doc = scan_document(scan, ScanKind::Dimensions, data, lo);
    }
    require_valid(doc, "scan");
    if (!g.out.empty()) write_text_file(g.out, serialize(doc));
    out << scan_table(scan);

    int code = kSuccess;
    for (const ScanRow& row : scan.rows) {
        if (!row.error.empty()) {
            err << "error: " << row.summary.label << ": " << row.error << "\n";
            code = kInputError;
        } else if (!row.fit->converged && code == kSuccess) {
            err << "error: " << row.summary.label << " did not converge\n";
            code = kNotConverged;
        }
    }
    return code;
}

Window parse_window(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(parse_number(item, 0, "--window"));
    if (v.size() != 4) throw InputError("--window expects auto or x0,x1,y0,y1");
    return {v[0], v[1], v[2], v[3]};
}

int cmd_biplot(const Globals& g, const std::string& model_path, const std::string& dims,
               const std::string& window, bool lines_on, bool lines_off, const std::string& svg_path,
               std::ostream& out) {
    if (model_path.empty()) throw InputError("--model is required");
    const FittedModel model = load_model(model_path);
    BiplotOptions options;
    const auto comma = dims.find(',');
    if (comma == std::string::npos) throw InputError("--dims expects i,j");
    try {
        options.dim_x = std::stol(dims.substr(0, comma)) - 1;
        options.dim_y = std::stol(dims.substr(comma + 1)) - 1;
    } catch (const std::exception&) {
        throw InputError("--dims expects i,j, got '" + dims + "'");
    }
    if (window != "auto") options.window = parse_window(window);
    if (lines_on && lines_off) throw InputError("--decision-lines and --no-decision-lines are exclusive");
    if (lines_on) options.decision_lines = true;
    if (lines_off) options.decision_lines = false;

    Matrix x(0, model.params.num_predictors());
    if (!g.data.empty()) x = model.transform(read_predictors(g.data, model));
    const BiplotGeometry geometry = build_biplot(model, x, options);
    const Json doc = geometry_document(geometry);
    require_valid(doc, "geometry");
    emit(g.out, serialize(doc), out);
    if (!svg_path.empty()) write_text_file(svg_path, render_svg(geometry));
    return kSuccess;
}

int cmd_predict(const Globals& g, const std::string& model_path, const std::string& input, std::ostream& out) {
    if (model_path.empty()) throw InputError("--model is required");
    if (input.empty()) throw InputError("--input is required");
    const FittedModel model = load_model(model_path);
    const Matrix raw = read_predictors(input, model);

    std::string text;
    for (std::size_t r = 0; r < model.response_names.size(); ++r) {
        const std::string& name = model.response_names[r];
        text += (r ? "," : "") + name + "_p0," + name + "_p1," + name + "_class";
    }
    text += "\n";
    for (Index i = 0; i < raw.rows(); ++i) {
        const Prediction p = predict(raw.row(i).transpose(), model.params, model.scaling);
        for (Index r = 0; r < p.probabilities.rows(); ++r) {
            text += (r ? "," : "") + g17(p.probabilities(r, 0)) + "," + g17(p.probabilities(r, 1)) + "," +
                    std::to_string(p.hard_classes[static_cast<std::size_t>(r)]);
        }
        text += "\n";
    }
    emit(g.out, text, out);
    return kSuccess;
}

int cmd_validate(const Globals& g, double constant, std::ostream& out) {
    oracles::ValidationOptions options;
    if (g.seed_given) options.seed = g.seed;
    options.majorization_constant = constant;
    const auto checks = oracles::run_validation(options);

    std::size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    std::string report;
    bool ok = true;
    for (const auto& c : checks) {
        report += (c.passed ? "PASS  " : "FAIL  ") + c.name + std::string(width - c.name.size() + 2, ' ') + c.detail + "\n";
        ok = ok && c.passed;
    }
    emit(g.out, report, out);
    if (!ok) {
        for (const auto& c : checks)
            if (!c.passed) out << "violated: " << c.name << "\n";
        return kValidationFailed;
    }
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multivariate binary logistic distance models"};
    app.name("melodic");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--data", g.data, "Input CSV (or melodic.dataset/1 JSON)");
    app.add_option("--config", g.config, "Run configuration (JSON)");
    app.add_option("--out", g.out, "Output document path (default: stdout)");
    CLI::Option* seed = app.add_option("--seed", g.seed, "Seed for restarts / validation");
    app.add_flag("--quiet", g.quiet, "Suppress notes and summaries on stderr");

    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model and write the fit document");

    std::string scan_dims;
    bool drop = false;
    CLI::App* scan_cmd = app.add_subcommand("scan", "Dimensionality or leave-one-predictor-out scan");
    scan_cmd->add_option("--dims", scan_dims, "Range lo..hi of dimensionalities");
    scan_cmd->add_flag("--drop-predictors", drop, "Refit once without each predictor");

    std::string model_path;
    std::string plot_dims = "1,2";
    std::string window = "auto";
    bool lines_on = false;
    bool lines_off = false;
    std::string svg_path;
    CLI::App* biplot_cmd = app.add_subcommand("biplot", "Biplot geometry document and SVG");
    biplot_cmd->add_option("--model", model_path, "Fit document");
    biplot_cmd->add_option("--dims", plot_dims, "Dimension pair i,j (1-based)");
    biplot_cmd->add_option("--window", window, "auto or x0,x1,y0,y1");
    biplot_cmd->add_flag("--decision-lines", lines_on, "Draw decision lines");
    biplot_cmd->add_flag("--no-decision-lines", lines_off, "Omit decision lines");
    biplot_cmd->add_option("--svg", svg_path, "SVG output path");

    std::string input;
    CLI::App* predict_cmd = app.add_subcommand("predict", "Class probabilities for new subjects");
    predict_cmd->add_option("--model", model_path, "Fit document");
    predict_cmd->add_option("--input", input, "CSV with the model's predictor columns");

    double constant = 0.25;
    CLI::App* validate_cmd = app.add_subcommand("validate", "Run the built-in property checks");
    validate_cmd->add_option("--majorization-constant", constant, "Curvature constant used by the solver");

    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("melodic");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kInputError;
    }
    g.seed_given = seed->count() > 0;

    try {
        if (*fit_cmd) return cmd_fit(g, out, err);
        if (*scan_cmd) return cmd_scan(g, scan_dims, drop, out, err);
        if (*biplot_cmd) return cmd_biplot(g, model_path, plot_dims, window, lines_on, lines_off, svg_path, out);
        if (*predict_cmd) return cmd_predict(g, model_path, input, out);
        if (*validate_cmd) return cmd_validate(g, constant, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const SingularDesignError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kValidationFailed;
    }
    return kInputError;
}

}  // namespace melodic::cli
