#pragma once

// Two-dimensional biplot of a fitted model: category points, decision
// lines, variable axes with standard-deviation markers, and subject points.

#include "documents.hpp"

#include <optional>
#include <string>
#include <vector>

namespace melodic::cli {

using Point = Eigen::Vector2d;

struct Window {
    double x0 = -1.0;
    double x1 = 1.0;
    double y0 = -1.0;
    double y1 = 1.0;
};

// Model coordinates to SVG pixels, same scale on both axes:
// px = x_offset + scale * x, py = y_offset - scale * y.
struct WindowMap {
    double scale = 1.0;
    double x_offset = 0.0;
    double y_offset = 0.0;
    double width = 0.0;
    double height = 0.0;

    Point apply(const Point& p) const { return {x_offset + scale * p.x(), y_offset - scale * p.y()}; }
};

struct Segment {
    Point from;
    Point to;
};

struct CategoryPoint {
    std::string label;     // response name followed by 1 (yes) or 0 (no)
    std::string response;
    int category = 0;
    Point position;
};

struct DecisionLine {
    std::string response;
    Point midpoint;
    Point direction;                 // unit length, perpendicular to v_r1 - v_r0
    std::optional<Segment> segment;  // empty when the line misses the window
};

struct AxisMarker {
    int step = 0;
    Point position;
};

struct VariableAxis {
    std::string predictor;
    Point direction;        // (b_p,i, b_p,j)
    double sd = 0.0;        // raw-scale standard deviation of the predictor
    double marker_spacing = 0.0;
    std::vector<AxisMarker> markers;
    std::optional<Segment> segment;
    std::optional<Point> label_position;  // positive end of the clipped axis
};

struct BiplotGeometry {
    Index dim_x = 0;
    Index dim_y = 1;
    Window window;
    WindowMap map;
    std::vector<CategoryPoint> category_points;
    std::vector<DecisionLine> decision_lines;
    std::vector<VariableAxis> variable_axes;
    std::vector<Point> subject_points;
};

struct BiplotOptions {
    Index dim_x = 0;  // zero-based
    Index dim_y = 1;
    std::optional<Window> window;        // auto when empty
    std::optional<bool> decision_lines;  // default: on when R <= 6
    double canvas = 720.0;               // pixels along the longer window side
    double margin = 40.0;
};

/// `x` holds preprocessed predictor rows for the subject points; it may have
/// zero rows.
BiplotGeometry build_biplot(const FittedModel& model, const Matrix& x, const BiplotOptions& options);

/// Part of the infinite line through `p` with direction `d` inside the window.
std::optional<Segment> clip_line(const Point& p, const Point& d, const Window& w);

/// Throws melodic::Error when a decision line is not the perpendicular
/// bisector of its category points within 1e-9.
void check_geometry(const BiplotGeometry& g);

Json geometry_document(const BiplotGeometry& g);
std::string render_svg(const BiplotGeometry& g);

}  // namespace melodic::cli
