#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmfem {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2() = default;
    Point2(double x_, double y_) : x(x_), y(y_) {}

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline Point2 perp(const Point2& a) { return {-a.y, a.x}; }

inline Point2 normalized(const Point2& a) {
    double n = norm(a);
    return {a.x / n, a.y / n};
}

inline Point2 midpoint(const Point2& a, const Point2& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

/// Implicit interface description. Gamma = { gamma(x) = 0 }, with the
/// convention gamma < 0 on Omega_1 and gamma > 0 on Omega_2. The gradient
/// callable must be the exact analytic gradient of value.
struct LevelSetField {
    std::function<double(const Point2&)> value;
    std::function<Point2(const Point2&)> gradient;

    double operator()(const Point2& p) const { return value(p); }
};

/// Relative position of an interface crossing on a segment (a,b):
/// point = a + r*(b-a), r in [0,1]. r in {0,1} marks a node cut.
struct LineCut {
    double r = 0.0;
    Point2 point;
};

struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-iteration record of the safeguarded Newton solve, for instrumentation.
struct RootIterate {
    double r;
    bool newton_step;  // false: bisection fallback taken
};

/// Locates the zero of gamma along the segment a->b. Newton iteration started
/// at the bracket midpoint, safeguarded by bisection on the sign-change
/// bracket. Endpoints with |gamma| <= vertex_tol are reported as node cuts
/// (r = 0 or 1). Returns empty when the endpoint signs agree. A pre-scan with
/// 8 uniform sub-intervals guards against multiple crossings of one edge.
std::optional<LineCut> find_edge_cut(const LevelSetField& ls, const Point2& a, const Point2& b,
                                     double tol, double vertex_tol = 0.0,
                                     std::vector<RootIterate>* trace = nullptr);

/// Moves p onto the interface along the given unit direction: returns
/// q = p + t*dir with |gamma(q)| <= tol and |t| <= max_step. The sign-change
/// bracket closest to t = 0 is used; empty if no bracket exists within the
/// step bound.
std::optional<Point2> project_along_direction(const LevelSetField& ls, const Point2& p,
                                              const Point2& dir, double tol, double max_step);

}  // namespace lmfem
