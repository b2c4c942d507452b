#include "lmfem/geometry.hpp"

#include <algorithm>

namespace lmfem {

namespace {

constexpr int kMaxRootIterations = 50;
constexpr int kEdgePrescanIntervals = 8;

// Safeguarded Newton on g(t) over a sign-change bracket [lo, hi].
// g(lo) and g(hi) must have opposite (nonzero) signs.
template <class F, class DF>
double bracketed_newton(const F& g, const DF& dg, double lo, double hi, double glo, double tol,
                        std::vector<RootIterate>* trace) {
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxRootIterations; ++it) {
        double gt = g(t);
        if (std::abs(gt) <= tol) return t;
        // shrink the bracket
        if ((gt < 0.0) == (glo < 0.0)) {
            lo = t;
            glo = gt;
        } else {
            hi = t;
        }
        double d = dg(t);
        double tn = t - gt / d;
        bool newton_ok = std::isfinite(tn) && tn > lo && tn < hi;
        t = newton_ok ? tn : 0.5 * (lo + hi);
        if (trace) trace->push_back({t, newton_ok});
    }
    throw AssumptionViolation("root iteration did not converge (level set too coarse for this mesh)");
}

}  // namespace

std::optional<LineCut> find_edge_cut(const LevelSetField& ls, const Point2& a, const Point2& b,
                                     double tol, double vertex_tol,
                                     std::vector<RootIterate>* trace) {
    const Point2 d = b - a;
    auto at = [&](double r) { return Point2{a.x + r * d.x, a.y + r * d.y}; };
    auto g = [&](double r) { return ls.value(at(r)); };

    const double ga = g(0.0);
    const double gb = g(1.0);

    // Multiple sign changes along one edge violate Assumption 1; scan before
    // trusting the endpoint signs.
    {
        double prev = ga;
        int changes = 0;
        for (int k = 1; k <= kEdgePrescanIntervals; ++k) {
            double cur = (k == kEdgePrescanIntervals) ? gb : g(double(k) / kEdgePrescanIntervals);
            if (prev != 0.0 && cur != 0.0 && (prev < 0.0) != (cur < 0.0)) ++changes;
            if (cur != 0.0) prev = cur;
        }
        if (changes > 1)
            throw AssumptionViolation("interface crosses one edge more than once");
        if (changes == 1 && ga * gb > 0.0 && std::abs(ga) > vertex_tol && std::abs(gb) > vertex_tol)
            throw AssumptionViolation("interface enters and leaves through the same edge");
    }

    if (std::abs(ga) <= vertex_tol) return LineCut{0.0, a};
    if (std::abs(gb) <= vertex_tol) return LineCut{1.0, b};
    if (ga * gb > 0.0) return std::nullopt;

    auto dg = [&](double r) { return dot(ls.gradient(at(r)), d); };
    double r = bracketed_newton(g, dg, 0.0, 1.0, ga, tol, trace);
    return LineCut{r, at(r)};
}

std::optional<Point2> project_along_direction(const LevelSetField& ls, const Point2& p,
                                              const Point2& dir, double tol, double max_step) {
    auto at = [&](double t) { return Point2{p.x + t * dir.x, p.y + t * dir.y}; };
    auto g = [&](double t) { return ls.value(at(t)); };

    const double g0 = g(0.0);
    if (std::abs(g0) <= tol) return at(0.0);

    // Sample [-max_step, max_step] and take the sign-change bracket closest
    // to the start point.
    constexpr int kSamples = 16;  // per side
    double lo = 0.0, hi = 0.0, glo = 0.0;
    bool found = false;
    double prev_t[2] = {0.0, 0.0};
    double prev_g[2] = {g0, g0};
    for (int k = 1; k <= kSamples && !found; ++k) {
        for (int s = 0; s < 2; ++s) {
            double t = (s == 0 ? 1.0 : -1.0) * max_step * double(k) / kSamples;
            double gt = g(t);
            if ((gt < 0.0) != (prev_g[s] < 0.0) || gt == 0.0) {
                lo = std::min(prev_t[s], t);
                hi = std::max(prev_t[s], t);
                glo = g(lo);
                found = true;
                break;
            }
            prev_t[s] = t;
            prev_g[s] = gt;
        }
    }
    if (!found) return std::nullopt;
    if (std::abs(glo) <= tol) return at(lo);

    auto dg = [&](double t) { return dot(ls.gradient(at(t)), dir); };
    double t = bracketed_newton(g, dg, lo, hi, glo, tol, nullptr);
    return at(t);
}

}  // namespace lmfem
