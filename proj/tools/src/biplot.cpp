#include "biplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace melodic::cli {

namespace {

constexpr double kInvariantTol = 1e-9;

Json point_json(const Point& p) { return Json::array({p.x(), p.y()}); }

Json segment_json(const std::optional<Segment>& s) {
    if (!s) return nullptr;
    return Json::array({point_json(s->from), point_json(s->to)});
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Window auto_window(const std::vector<Point>& points) {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;  // origin always inside
    for (const Point& p : points) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
    }
    double span = std::max(x1 - x0, y1 - y0);
    if (!(span > 1e-12)) span = 2.0;
    const double pad = 0.1 * span;
    return {x0 - pad, x1 + pad, y0 - pad, y1 + pad};
}

WindowMap window_map(const Window& w, double canvas, double margin) {
    const double xs = w.x1 - w.x0;
    const double ys = w.y1 - w.y0;
    WindowMap m;
    m.scale = canvas / std::max(xs, ys);
    m.x_offset = margin - m.scale * w.x0;
    m.y_offset = margin + m.scale * w.y1;
    m.width = m.scale * xs + 2.0 * margin;
    m.height = m.scale * ys + 2.0 * margin;
    return m;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Parameter range [t0, t1] of p + t d inside the window (Liang-Barsky).
bool clip_range(const Point& p, const Point& d, const Window& w, double& t0, double& t1) {
    t0 = -std::numeric_limits<double>::infinity();
    t1 = std::numeric_limits<double>::infinity();
    const double lo[2] = {w.x0, w.y0};
    const double hi[2] = {w.x1, w.y1};
    for (int k = 0; k < 2; ++k) {
        if (std::abs(d[k]) < 1e-300) {
            if (p[k] < lo[k] || p[k] > hi[k]) return false;
            continue;
        }
        double a = (lo[k] - p[k]) / d[k];
        double b = (hi[k] - p[k]) / d[k];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    return t0 < t1;
}

}  // namespace

std::optional<Segment> clip_line(const Point& p, const Point& d, const Window& w) {
    double t0, t1;
    if (!clip_range(p, d, w, t0, t1)) return std::nullopt;
    return Segment{p + t0 * d, p + t1 * d};
}

BiplotGeometry build_biplot(const FittedModel& model, const Matrix& x, const BiplotOptions& options) {
    const ModelParams& params = model.params;
    const Index M = params.dims();
    if (M < 2) throw InputError("a two-dimensional biplot needs a model with at least 2 dimensions");
    if (options.dim_x < 0 || options.dim_y < 0 || options.dim_x >= M || options.dim_y >= M ||
        options.dim_x == options.dim_y) {
        throw InputError("biplot dimensions must be two distinct values in 1.." + std::to_string(M));
    }
    if (x.rows() > 0 && x.cols() != params.num_predictors()) {
        throw InputError("subject data has the wrong number of predictors");
    }
    const Index i = options.dim_x;
    const Index j = options.dim_y;

    BiplotGeometry g;
    g.dim_x = i;
    g.dim_y = j;

    const Matrix V = category_coordinates(params);
    std::vector<Point> extent;
    for (Index r = 0; r < params.num_responses(); ++r) {
        const std::string& name = model.response_names[static_cast<std::size_t>(r)];
        for (int c = 0; c < 2; ++c) {
            const Point p(V(2 * r + c, i), V(2 * r + c, j));
            g.category_points.push_back({name + (c == 1 ? "1" : "0"), name, c, p});
            extent.push_back(p);
        }
    }
    if (x.rows() > 0) {
        const Matrix U = x * params.B;
        for (Index s = 0; s < U.rows(); ++s) {
            g.subject_points.emplace_back(U(s, i), U(s, j));
            extent.push_back(g.subject_points.back());
        }
    }
    g.window = options.window ? *options.window : auto_window(extent);
    if (!(g.window.x0 < g.window.x1 && g.window.y0 < g.window.y1)) {
        throw InputError("biplot window needs x0 < x1 and y0 < y1");
    }
    g.map = window_map(g.window, options.canvas, options.margin);

    const bool lines = options.decision_lines.value_or(params.num_responses() <= 6);
    if (lines) {
        for (Index r = 0; r < params.num_responses(); ++r) {
            const Point v0 = g.category_points[static_cast<std::size_t>(2 * r)].position;
            const Point v1 = g.category_points[static_cast<std::size_t>(2 * r + 1)].position;
            const Point diff = v1 - v0;
            const double len = diff.norm();
            if (len < 1e-12) continue;  // coincident in this plane: no boundary to draw
            Point dir(-diff.y() / len, diff.x() / len);
            if (dir.y() < 0.0 || (dir.y() == 0.0 && dir.x() < 0.0)) dir = -dir;
            DecisionLine line{g.category_points[static_cast<std::size_t>(2 * r)].response, 0.5 * (v0 + v1), dir, {}};
            line.segment = clip_line(line.midpoint, line.direction, g.window);
            g.decision_lines.push_back(line);
        }
    }

    for (Index p = 0; p < params.num_predictors(); ++p) {
        VariableAxis axis;
        axis.predictor = model.predictor_names[static_cast<std::size_t>(p)];
        axis.direction = Point(params.B(p, i), params.B(p, j));
        axis.sd = model.predictor_sd(p);
        // one raw-scale SD moves the preprocessed value by sd / scaling factor
        const double step = model.predictor_sd(p) / model.scaling.scaling_factors(p);
        axis.marker_spacing = step * axis.direction.norm();
        double t0, t1;
        if (axis.direction.norm() > 1e-12 && clip_range(Point::Zero(), axis.direction, g.window, t0, t1)) {
            axis.segment = Segment{t0 * axis.direction, t1 * axis.direction};
            axis.label_position = t1 * axis.direction;
            if (step > 0.0) {
                const int lo = std::max(-1000, static_cast<int>(std::ceil(t0 / step)));
                const int hi = std::min(1000, static_cast<int>(std::floor(t1 / step)));
                for (int k = lo; k <= hi; ++k) {
                    if (k != 0) axis.markers.push_back({k, (k * step) * axis.direction});
                }
            }
        }
        g.variable_axes.push_back(std::move(axis));
    }
    check_geometry(g);
    return g;
}

void check_geometry(const BiplotGeometry& g) {
    for (const DecisionLine& line : g.decision_lines) {
        const CategoryPoint* c0 = nullptr;
        const CategoryPoint* c1 = nullptr;
        for (const CategoryPoint& c : g.category_points) {
            if (c.response != line.response) continue;
            (c.category == 0 ? c0 : c1) = &c;
        }
        if (!c0 || !c1) throw Error("decision line for '" + line.response + "' has no category points");
        const Point diff = c1->position - c0->position;
        const double scale = std::max(1.0, diff.norm());
        const Point mid = 0.5 * (c0->position + c1->position);
        if (std::abs(line.direction.dot(diff)) > kInvariantTol * scale ||
            (line.midpoint - mid).norm() > kInvariantTol * std::max(1.0, mid.norm()) ||
            std::abs(line.direction.norm() - 1.0) > kInvariantTol) {
            throw Error("decision line for '" + line.response + "' is not the bisector of its categories");
        }
        if (line.segment) {
            for (const Point& end : {line.segment->from, line.segment->to}) {
                if (std::abs(cross(end - line.midpoint, line.direction)) > kInvariantTol * std::max(1.0, (end - mid).norm())) {
                    throw Error("clipped decision line for '" + line.response + "' leaves its line");
                }
            }
        }
    }
}

Json geometry_document(const BiplotGeometry& g) {
    Json doc;
    doc["format"] = "melodic.geometry/1";
    doc["dims"] = Json::array({g.dim_x + 1, g.dim_y + 1});
    doc["window"] = {{"x0", g.window.x0}, {"x1", g.window.x1}, {"y0", g.window.y0}, {"y1", g.window.y1}};
    doc["map"] = {{"scale", g.map.scale},
                  {"x_offset", g.map.x_offset},
                  {"y_offset", g.map.y_offset},
                  {"width", g.map.width},
                  {"height", g.map.height}};
    Json cats = Json::array();
    for (const CategoryPoint& c : g.category_points) {
        cats.push_back({{"label", c.label}, {"response", c.response}, {"category", c.category},
                        {"position", point_json(c.position)}});
    }
    doc["category_points"] = std::move(cats);
    Json lines = Json::array();
    for (const DecisionLine& l : g.decision_lines) {
        lines.push_back({{"response", l.response}, {"midpoint", point_json(l.midpoint)},
                         {"direction", point_json(l.direction)}, {"segment", segment_json(l.segment)}});
    }
    doc["decision_lines"] = std::move(lines);
    Json axes = Json::array();
    for (const VariableAxis& a : g.variable_axes) {
        Json markers = Json::array();
        for (const AxisMarker& m : a.markers) markers.push_back({{"step", m.step}, {"position", point_json(m.position)}});
        axes.push_back({{"predictor", a.predictor},
                        {"direction", point_json(a.direction)},
                        {"sd", a.sd},
                        {"marker_spacing", a.marker_spacing},
                        {"markers", std::move(markers)},
                        {"segment", segment_json(a.segment)},
                        {"label_position", a.label_position ? point_json(*a.label_position) : Json(nullptr)}});
    }
    doc["variable_axes"] = std::move(axes);
    Json subjects = Json::array();
    for (const Point& p : g.subject_points) subjects.push_back(point_json(p));
    doc["subject_points"] = std::move(subjects);
    return doc;
}

std::string render_svg(const BiplotGeometry& g) {
    const WindowMap& m = g.map;
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(m.width) + "\" height=\"" +
           num(m.height) + "\" viewBox=\"0 0 " + num(m.width) + " " + num(m.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const Point top_left = m.apply({g.window.x0, g.window.y1});
    out += "<rect class=\"window\" x=\"" + num(top_left.x()) + "\" y=\"" + num(top_left.y()) + "\" width=\"" +
           num(m.scale * (g.window.x1 - g.window.x0)) + "\" height=\"" + num(m.scale * (g.window.y1 - g.window.y0)) +
           "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

    auto line_elem = [&](const Segment& s, const std::string& attrs) {
        const Point a = m.apply(s.from);
        const Point b = m.apply(s.to);
        return "<line x1=\"" + num(a.x()) + "\" y1=\"" + num(a.y()) + "\" x2=\"" + num(b.x()) + "\" y2=\"" +
               num(b.y()) + "\" " + attrs + "/>\n";
    };

    // Axis labels sit on the window border; labels sharing a side are nudged
    // apart along it.
    struct Label {
        Point at;
        std::string text;
        std::string anchor;
        int side;
    };
    std::vector<Label> labels;
    out += "<g class=\"variable-axes\" stroke=\"#808080\" stroke-width=\"1\">\n";
    for (const VariableAxis& a : g.variable_axes) {
        if (!a.segment) continue;
        out += line_elem(*a.segment, "class=\"axis\"");
        for (const AxisMarker& mk : a.markers) {
            const Point p = m.apply(mk.position);
            out += "<circle class=\"marker\" cx=\"" + num(p.x()) + "\" cy=\"" + num(p.y()) + "\" r=\"1.5\" fill=\"#808080\"/>\n";
        }
        if (a.label_position) {
            const Point p = m.apply(*a.label_position);
            const Point& w = *a.label_position;
            const double eps = 1e-9 * (g.window.x1 - g.window.x0);
            int side = 0;  // 0 right, 1 left, 2 top, 3 bottom
            std::string anchor = "start";
            if (std::abs(w.x() - g.window.x0) < eps) {
                side = 1;
                anchor = "end";
            } else if (std::abs(w.y() - g.window.y1) < eps) {
                side = 2;
                anchor = "middle";
            } else if (std::abs(w.y() - g.window.y0) < eps) {
                side = 3;
                anchor = "middle";
            }
            labels.push_back({p, a.predictor, anchor, side});
        }
    }
    out += "</g>\n";

    for (int side = 0; side < 4; ++side) {
        std::vector<Label*> group;
        for (Label& l : labels)
            if (l.side == side) group.push_back(&l);
        const bool vertical = side < 2;
        std::sort(group.begin(), group.end(), [&](const Label* a, const Label* b) {
            return vertical ? a->at.y() < b->at.y() : a->at.x() < b->at.x();
        });
        const double gap = vertical ? 12.0 : 40.0;
        for (std::size_t k = 1; k < group.size(); ++k) {
            double& cur = vertical ? group[k]->at.y() : group[k]->at.x();
            const double prev = vertical ? group[k - 1]->at.y() : group[k - 1]->at.x();
            cur = std::max(cur, prev + gap);
        }
    }
    out += "<g class=\"axis-labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#404040\">\n";
    for (const Label& l : labels) {
        const double dx = l.side == 0 ? 4.0 : l.side == 1 ? -4.0 : 0.0;
        const double dy = l.side == 2 ? -4.0 : l.side == 3 ? 12.0 : 4.0;
        out += "<text x=\"" + num(l.at.x() + dx) + "\" y=\"" + num(l.at.y() + dy) + "\" text-anchor=\"" + l.anchor +
               "\">" + escape(l.text) + "</text>\n";
    }
    out += "</g>\n";

    if (!g.decision_lines.empty()) {
        out += "<g class=\"decision-lines\" stroke=\"#4060a0\" stroke-width=\"1\" stroke-dasharray=\"4 3\">\n";
        for (const DecisionLine& l : g.decision_lines) {
            if (l.segment) out += line_elem(*l.segment, "class=\"decision\" data-response=\"" + escape(l.response) + "\"");
        }
        out += "</g>\n";
    }

    if (!g.subject_points.empty()) {
        out += "<g class=\"subjects\" fill=\"#b0b0b0\">\n";
        for (std::size_t s = 0; s < g.subject_points.size(); ++s) {
            const Point p = m.apply(g.subject_points[s]);
            out += "<circle id=\"subject-" + std::to_string(s + 1) + "\" cx=\"" + num(p.x()) + "\" cy=\"" +
                   num(p.y()) + "\" r=\"2\"/>\n";
        }
        out += "</g>\n";
    }

    out += "<g class=\"categories\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const CategoryPoint& c : g.category_points) {
        const Point p = m.apply(c.position);
        const std::string fill = c.category == 1 ? "#c03030" : "#3060c0";
        out += "<circle class=\"category\" cx=\"" + num(p.x()) + "\" cy=\"" + num(p.y()) + "\" r=\"4\" fill=\"" + fill +
               "\"/>\n";
        out += "<text x=\"" + num(p.x() + 6.0) + "\" y=\"" + num(p.y() - 6.0) + "\" fill=\"" + fill + "\">" +
               escape(c.label) + "</text>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

}  // namespace melodic::cli
