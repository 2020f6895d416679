#include <doctest.h>

#include "biplot.hpp"
#include "commands.hpp"
#include "documents.hpp"
#include "schema.hpp"

#include "melodic/data_io.hpp"
#include "melodic/model.hpp"
#include "melodic/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <regex>
#include <sstream>

using namespace melodic;
using melodic::cli::Json;
using melodic::cli::Point;

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "melodic_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string file(const std::string& name) { return (workdir() / name).string(); }

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Synthetic CSV with predictors p1..p4 and responses r1..r5, plus a config.
void write_fixture() {
    static bool done = false;
    if (done) return;
    oracles::SyntheticSpec spec;
    spec.n = 150;
    spec.num_predictors = 4;
    spec.num_responses = 5;
    spec.true_dims = 2;
    spec.seed = 41;
    const Dataset d = oracles::generate_synthetic(spec).dataset;
    std::string csv = "p1,p2,p3,p4,r1,r2,r3,r4,r5\n";
    for (Index i = 0; i < d.n(); ++i) {
        for (Index p = 0; p < 4; ++p) csv += g17(d.X(i, p) * (p + 1) + 10.0 * p) + ",";
        for (Index r = 0; r < 5; ++r) csv += std::string(d.Y(i, r) > 0.5 ? "1" : "0") + (r < 4 ? "," : "\n");
    }
    write_text_file(file("data.csv"), csv);
    write_text_file(file("config.json"),
                    R"({"dimensions": 2, "predictors": ["p1","p2","p3","p4"], "responses": ["r1","r2","r3","r4","r5"]})");
    write_text_file(file("config_slow.json"),
                    R"({"dimensions": 2, "max_iter": 1, "predictors": ["p1","p2","p3","p4"], "responses": ["r1","r2","r3","r4","r5"]})");
    done = true;
}

Json read_json(const std::string& path) { return Json::parse(read_text_file(path)); }

std::vector<std::vector<double>> read_numeric_csv(const std::string& text) {
    const CsvTable t = parse_csv_table(text);
    std::vector<std::vector<double>> rows;
    for (const auto& row : t.rows) {
        std::vector<double> v;
        for (const auto& cell : row) v.push_back(std::stod(cell));
        rows.push_back(v);
    }
    return rows;
}

// Fit document for one response with v_r0 = (1, 0), v_r1 = (-1, 0), B = I on
// two predictors that need no preprocessing.
std::string write_hand_model() {
    Matrix x(4, 2);
    x << 1, 0, -1, 0, 0, 1, 0, -1;
    Matrix y(4, 1);
    y << 0, 1, 0, 1;
    const Dataset d = Dataset::from_raw(x, y, Preprocessing::Center, {"a", "b"}, {"resp"});
    FitResult f;
    f.params.B = Matrix::Identity(2, 2);
    f.params.K = Matrix(1, 2);
    f.params.K << 1, 0;
    f.params.L = Matrix::Zero(1, 2);
    f.deviance = deviance(d, f.params);
    f.trace = {f.deviance};
    f.converged = true;
    FitConfig config;
    config.dimensions = 2;
    const Json doc = cli::fit_document(d, config, f, quality_of_representation(d, f));
    const std::string path = file("hand_fit.json");
    write_text_file(path, cli::serialize(doc));
    return path;
}

}  // namespace

TEST_CASE("fit command") {
    write_fixture();
    const Outcome a = run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--out", file("fit_a.json")});
    const Outcome b = run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--out", file("fit_b.json"), "--quiet"});
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(b.err.empty());
    CHECK(read_text_file(file("fit_a.json")) == read_text_file(file("fit_b.json")));

    const Json doc = read_json(file("fit_a.json"));
    CHECK(cli::schema_violations(doc, cli::schema("fit")).empty());
    CHECK(doc["converged"] == true);
    CHECK(doc["summary"]["n_params"] == count_parameters(4, 5, 2));
    CHECK(doc["params"]["V"].size() == 10);
    CHECK(doc["implied_coefficients"].size() == 5);
    CHECK(doc["quality"].size() == 5);

    SUBCASE("stdout when --out is absent") {
        const Outcome c = run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--quiet"});
        CHECK(c.code == 0);
        CHECK(c.out == read_text_file(file("fit_a.json")));
    }
    SUBCASE("forced non-convergence") {
        const Outcome c = run({"fit", "--data", file("data.csv"), "--config", file("config_slow.json"), "--out", file("fit_slow.json")});
        CHECK(c.code == 2);
        const Json slow = read_json(file("fit_slow.json"));
        CHECK(slow["converged"] == false);
        CHECK(slow["iterations"] == 1);
        CHECK(c.err.find("no convergence") != std::string::npos);
    }
    SUBCASE("input errors") {
        CHECK(run({"fit", "--data", file("missing.csv"), "--config", file("config.json")}).code == 1);
        CHECK(run({"fit", "--data", file("data.csv")}).code == 1);
        write_text_file(file("bad_columns.json"), R"({"dimensions": 2, "predictors": ["zz"], "responses": ["r1"]})");
        const Outcome c = run({"fit", "--data", file("data.csv"), "--config", file("bad_columns.json")});
        CHECK(c.code == 1);
        CHECK(c.err.find("'zz'") != std::string::npos);
        CHECK(std::count(c.err.begin(), c.err.end(), '\n') == 1);
        write_text_file(file("bad_width.json"), R"({"dimensions": 2, "constraints": [[1,0,0]]})");
        CHECK(run({"fit", "--data", file("data.csv"), "--config", file("bad_width.json")}).code == 1);
        CHECK(run({"fit", "--bogus"}).code == 1);
        CHECK(run({}).code == 1);
    }
    SUBCASE("dataset documents are accepted as input") {
        const Dataset d = load_csv(file("data.csv"), parse_fit_config(file("config.json")).ingest);
        write_text_file(file("data.json"), dataset_to_json(d));
        CHECK(cli::schema_violations(Json::parse(dataset_to_json(d)), cli::schema("dataset")).empty());
        const Outcome c = run({"fit", "--data", file("data.json"), "--config", file("config.json"), "--quiet"});
        CHECK(c.code == 0);
        CHECK(c.out == read_text_file(file("fit_a.json")));
    }
}

TEST_CASE("scan command") {
    write_fixture();
    const Outcome a = run({"scan", "--data", file("data.csv"), "--config", file("config.json"), "--dims", "1..3", "--out", file("scan_a.json")});
    const Outcome b = run({"scan", "--data", file("data.csv"), "--config", file("config.json"), "--dims", "1..3", "--out", file("scan_b.json")});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(read_text_file(file("scan_a.json")) == read_text_file(file("scan_b.json")));
    const Json doc = read_json(file("scan_a.json"));
    CHECK(cli::schema_violations(doc, cli::schema("scan")).empty());
    REQUIRE(doc["rows"].size() == 3);
    for (Index m = 1; m <= 3; ++m) CHECK(doc["rows"][static_cast<std::size_t>(m - 1)]["n_params"] == count_parameters(4, 5, m));
    CHECK(a.out.find('*') != std::string::npos);
    CHECK(a.out.find("M=2") != std::string::npos);

    // The M = 2 row equals a stand-alone fit.
    run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--out", file("fit_scan.json"), "--quiet"});
    const Json fit = read_json(file("fit_scan.json"));
    CHECK(doc["rows"][1]["deviance"].get<double>() == fit["deviance"].get<double>());

    const Outcome drop = run({"scan", "--data", file("data.csv"), "--config", file("config.json"), "--drop-predictors", "--out", file("drop.json")});
    CHECK(drop.code == 0);
    const Json d = read_json(file("drop.json"));
    CHECK(cli::schema_violations(d, cli::schema("scan")).empty());
    REQUIRE(d["rows"].size() == 4);
    CHECK(d["rows"][0]["label"] == "-p1");
    CHECK(d["rows"][3]["dropped_predictor"] == "p4");
    CHECK(d["rows"][2]["n_params"] == count_parameters(3, 5, 2));

    CHECK(run({"scan", "--data", file("data.csv"), "--config", file("config.json")}).code == 1);
    CHECK(run({"scan", "--data", file("data.csv"), "--config", file("config.json"), "--dims", "x..y"}).code == 1);
    CHECK(run({"scan", "--data", file("data.csv"), "--config", file("config.json"), "--dims", "0..2"}).code == 1);
}

TEST_CASE("predict command") {
    write_fixture();
    REQUIRE(run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--out", file("fit_p.json"), "--quiet"}).code == 0);

    SUBCASE("training rows reproduce the fitted probabilities") {
        const Outcome p = run({"predict", "--model", file("fit_p.json"), "--input", file("data.csv")});
        REQUIRE(p.code == 0);
        const RunConfig cfg = parse_fit_config(file("config.json"));
        const Dataset d = load_csv(file("data.csv"), cfg.ingest);
        const cli::FittedModel model = cli::load_model(file("fit_p.json"));
        const Matrix pi = class_probabilities(d, model.params);
        const auto rows = read_numeric_csv(p.out);
        REQUIRE(rows.size() == static_cast<std::size_t>(d.n()));
        double worst = 0.0;
        for (Index i = 0; i < d.n(); ++i) {
            for (Index r = 0; r < 5; ++r) {
                const auto& row = rows[static_cast<std::size_t>(i)];
                worst = std::max(worst, std::abs(row[static_cast<std::size_t>(3 * r)] - pi(i, 2 * r)));
                worst = std::max(worst, std::abs(row[static_cast<std::size_t>(3 * r + 1)] - pi(i, 2 * r + 1)));
                CHECK(row[static_cast<std::size_t>(3 * r + 2)] == (pi(i, 2 * r + 1) > pi(i, 2 * r) ? 1.0 : 0.0));
            }
        }
        CHECK(worst <= 1e-12);
    }
    SUBCASE("mean row uses u = 0") {
        const cli::FittedModel model = cli::load_model(file("fit_p.json"));
        std::string csv = "p4,p3,p2,p1\n";
        for (Index p = 3; p >= 0; --p) csv += g17(model.scaling.centering_offsets(p)) + (p > 0 ? "," : "\n");
        write_text_file(file("mean.csv"), csv);
        const Outcome p = run({"predict", "--model", file("fit_p.json"), "--input", file("mean.csv")});
        REQUIRE(p.code == 0);
        const auto rows = read_numeric_csv(p.out);
        const Matrix V = category_coordinates(model.params);
        for (Index r = 0; r < 5; ++r) {
            const double t0 = -0.5 * V.row(2 * r).squaredNorm();
            const double t1 = -0.5 * V.row(2 * r + 1).squaredNorm();
            CHECK(rows[0][static_cast<std::size_t>(3 * r + 1)] == doctest::Approx(1.0 / (1.0 + std::exp(t0 - t1))).epsilon(1e-12));
        }
    }
    SUBCASE("hand-built model") {
        const std::string model = write_hand_model();
        write_text_file(file("point.csv"), "a,b\n1,0\n");
        const Outcome p = run({"predict", "--model", model, "--input", file("point.csv")});
        REQUIRE(p.code == 0);
        const auto rows = read_numeric_csv(p.out);
        CHECK(rows[0][0] == doctest::Approx(0.8808).epsilon(1e-4));
        CHECK(rows[0][0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-14));
        CHECK(rows[0][2] == 0.0);
    }
    SUBCASE("input errors") {
        write_text_file(file("wrong.csv"), "p1,p2\n1,2\n");
        CHECK(run({"predict", "--model", file("fit_p.json"), "--input", file("wrong.csv")}).code == 1);
        write_text_file(file("text.csv"), "p1,p2,p3,p4\n1,2,x,4\n");
        const Outcome bad = run({"predict", "--model", file("fit_p.json"), "--input", file("text.csv")});
        CHECK(bad.code == 1);
        CHECK(bad.err.find("'p3'") != std::string::npos);
        write_text_file(file("not_a_model.json"), "{\"format\": \"melodic.scan/1\"}");
        CHECK(run({"predict", "--model", file("not_a_model.json"), "--input", file("data.csv")}).code == 1);
    }
}

TEST_CASE("biplot command") {
    write_fixture();
    SUBCASE("symmetric categories give the vertical axis as decision line") {
        const std::string model = write_hand_model();
        write_text_file(file("hand_points.csv"), "a,b\n0.5,0.25\n-1,2\n0.75,-0.5\n");
        const Outcome b = run({"biplot", "--model", model, "--data", file("hand_points.csv"), "--out", file("hand_geom.json"),
                               "--svg", file("hand.svg")});
        REQUIRE(b.code == 0);
        const Json g = read_json(file("hand_geom.json"));
        CHECK(cli::schema_violations(g, cli::schema("geometry")).empty());
        REQUIRE(g["decision_lines"].size() == 1);
        const Json& line = g["decision_lines"][0];
        CHECK(std::abs(line["midpoint"][0].get<double>()) < 1e-12);
        CHECK(std::abs(line["midpoint"][1].get<double>()) < 1e-12);
        CHECK(line["direction"][0].get<double>() == doctest::Approx(0.0));
        CHECK(std::abs(line["direction"][1].get<double>()) == doctest::Approx(1.0));
        for (const auto& end : line["segment"]) CHECK(std::abs(end[0].get<double>()) < 1e-12);
        CHECK(g["category_points"][0]["label"] == "resp0");
        CHECK(g["category_points"][1]["label"] == "resp1");

        // subject circles sit at the declared affine image of XB
        const std::string svg = read_text_file(file("hand.svg"));
        const Json& map = g["map"];
        const double raw[3][2] = {{0.5, 0.25}, {-1, 2}, {0.75, -0.5}};
        for (int s = 0; s < 3; ++s) {
            const std::regex re("id=\"subject-" + std::to_string(s + 1) + "\" cx=\"([-0-9.]+)\" cy=\"([-0-9.]+)\"");
            std::smatch m;
            REQUIRE(std::regex_search(svg, m, re));
            const double ex = map["x_offset"].get<double>() + map["scale"].get<double>() * raw[s][0];
            const double ey = map["y_offset"].get<double>() - map["scale"].get<double>() * raw[s][1];
            CHECK(std::stod(m[1]) == doctest::Approx(ex).epsilon(1e-6));
            CHECK(std::stod(m[2]) == doctest::Approx(ey).epsilon(1e-6));
        }
        CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") != std::string::npos);
        CHECK(svg.find(">resp1</text>") != std::string::npos);
    }
    SUBCASE("explicit window clips the decision line") {
        const std::string model = write_hand_model();
        const Outcome b = run({"biplot", "--model", model, "--window", "-2,2,-1,3", "--out", file("clip.json")});
        REQUIRE(b.code == 0);
        const Json g = read_json(file("clip.json"));
        const Json& seg = g["decision_lines"][0]["segment"];
        const double ya = seg[0][1].get<double>();
        const double yb = seg[1][1].get<double>();
        CHECK(std::min(ya, yb) == doctest::Approx(-1.0));
        CHECK(std::max(ya, yb) == doctest::Approx(3.0));
        CHECK(run({"biplot", "--model", model, "--window", "1,0,0,1"}).code == 1);
        CHECK(run({"biplot", "--model", model, "--window", "1,2"}).code == 1);
    }
    SUBCASE("fitted model: determinism, invariants and markers") {
        REQUIRE(run({"fit", "--data", file("data.csv"), "--config", file("config.json"), "--out", file("fit_b.json"), "--quiet"}).code == 0);
        const std::vector<std::string> args = {"biplot", "--model", file("fit_b.json"), "--data", file("data.csv"), "--svg", file("b.svg")};
        const Outcome a = run(args);
        const std::string svg_a = read_text_file(file("b.svg"));
        const Outcome b = run(args);
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(read_text_file(file("b.svg")) == svg_a);
        const Json g = Json::parse(a.out);
        CHECK(cli::schema_violations(g, cli::schema("geometry")).empty());
        CHECK(g["subject_points"].size() == 150);
        CHECK(g["decision_lines"].size() == 5);
        const cli::FittedModel model = cli::load_model(file("fit_b.json"));
        for (std::size_t p = 0; p < 4; ++p) {
            const Json& axis = g["variable_axes"][p];
            const double norm = std::hypot(model.params.B(static_cast<Index>(p), 0), model.params.B(static_cast<Index>(p), 1));
            // standardized predictors: one SD is one unit of the preprocessed value
            CHECK(axis["marker_spacing"].get<double>() == doctest::Approx(norm).epsilon(1e-12));
            const auto& markers = axis["markers"];
            REQUIRE(markers.size() >= 2);
            const double dx = markers[1]["position"][0].get<double>() - markers[0]["position"][0].get<double>();
            const double dy = markers[1]["position"][1].get<double>() - markers[0]["position"][1].get<double>();
            CHECK(std::hypot(dx, dy) == doctest::Approx(norm).epsilon(1e-9));
            // label sits on the positive side of the axis
            const double lx = axis["label_position"][0].get<double>();
            const double ly = axis["label_position"][1].get<double>();
            CHECK(lx * model.params.B(static_cast<Index>(p), 0) + ly * model.params.B(static_cast<Index>(p), 1) > 0.0);
        }
        for (const auto& line : g["decision_lines"]) {
            const std::string r = line["response"];
            Point v0, v1;
            for (const auto& c : g["category_points"]) {
                if (c["response"] != r) continue;
                const Point pos(c["position"][0].get<double>(), c["position"][1].get<double>());
                (c["category"] == 0 ? v0 : v1) = pos;
            }
            const Point dir(line["direction"][0].get<double>(), line["direction"][1].get<double>());
            const Point mid(line["midpoint"][0].get<double>(), line["midpoint"][1].get<double>());
            CHECK(std::abs(dir.dot(v1 - v0)) < 1e-9);
            CHECK((mid - 0.5 * (v0 + v1)).norm() < 1e-9);
        }
    }
    SUBCASE("decision lines default off for many responses") {
        cli::FittedModel model;
        const Index R = 7;
        for (Index r = 0; r < R; ++r) model.response_names.push_back("y" + std::to_string(r + 1));
        model.predictor_names = {"a", "b"};
        model.scaling = {Vector::Zero(2), Vector::Ones(2)};
        model.predictor_sd = Vector::Ones(2);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> normal;
        model.params.B = Matrix::Identity(2, 2);
        model.params.K = Matrix::NullaryExpr(R, 2, [&] { return normal(rng); });
        model.params.L = Matrix::Zero(R, 2);
        CHECK(cli::build_biplot(model, Matrix(0, 2), {}).decision_lines.empty());
        cli::BiplotOptions forced;
        forced.decision_lines = true;
        CHECK(cli::build_biplot(model, Matrix(0, 2), forced).decision_lines.size() == 7);
    }
    SUBCASE("one-dimensional models are rejected") {
        write_text_file(file("config_m1.json"),
                        R"({"dimensions": 1, "predictors": ["p1","p2","p3","p4"], "responses": ["r1","r2","r3","r4","r5"]})");
        REQUIRE(run({"fit", "--data", file("data.csv"), "--config", file("config_m1.json"), "--out", file("fit_m1.json"), "--quiet"}).code == 0);
        const Outcome b = run({"biplot", "--model", file("fit_m1.json")});
        CHECK(b.code == 1);
        CHECK(b.err.find("2 dimensions") != std::string::npos);
        CHECK(run({"biplot", "--model", file("fit_b.json"), "--dims", "1,1"}).code == 1);
    }
}

TEST_CASE("geometry helpers") {
    const cli::Window w{-1, 1, -1, 1};
    const auto s = cli::clip_line({0, 0}, {1, 1}, w);
    REQUIRE(s);
    CHECK(s->from.x() == doctest::Approx(-1.0));
    CHECK(s->to.y() == doctest::Approx(1.0));
    CHECK_FALSE(cli::clip_line({0, 5}, {1, 0}, w));

    cli::WindowMap map;
    map.scale = 10;
    map.x_offset = 3;
    map.y_offset = 7;
    const Point a = map.apply({0, 0});
    const Point b = map.apply({1, 2});
    const Point c = map.apply({2, 4});
    CHECK((c - a).norm() == doctest::Approx(2.0 * (b - a).norm()));
    CHECK((b - a).norm() == doctest::Approx(10.0 * std::sqrt(5.0)));
}

TEST_CASE("schema checker") {
    const Json s = Json::parse(R"({"type": "object", "required": ["a"], "additionalProperties": false,
        "properties": {"a": {"type": "integer", "minimum": 0}, "b": {"enum": ["x", "y"]}}})");
    CHECK(cli::schema_violations(Json::parse(R"({"a": 1})"), s).empty());
    CHECK(cli::schema_violations(Json::parse(R"({"a": 1, "b": "y"})"), s).empty());
    CHECK_FALSE(cli::schema_violations(Json::parse(R"({"b": "x"})"), s).empty());
    CHECK_FALSE(cli::schema_violations(Json::parse(R"({"a": -1})"), s).empty());
    CHECK_FALSE(cli::schema_violations(Json::parse(R"({"a": 1.5})"), s).empty());
    CHECK_FALSE(cli::schema_violations(Json::parse(R"({"a": 1, "c": 0})"), s).empty());
    CHECK_FALSE(cli::schema_violations(Json::parse(R"({"a": 1, "b": "z"})"), s).empty());
    const auto v = cli::schema_violations(Json::parse(R"({"a": "no"})"), s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rfind("$.a:", 0) == 0);
}

TEST_CASE("validate command") {
    const Outcome a = run({"validate", "--seed", "7"});
    const Outcome b = run({"validate", "--seed", "7"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("FAIL") == std::string::npos);
    const Outcome broken = run({"validate", "--majorization-constant", "0.125"});
    CHECK(broken.code == 3);
    CHECK(broken.out.find("violated: monotone descent") != std::string::npos);
}
