#include "lmfem/patch_mesh.hpp"

#include <algorithm>
#include <cmath>

#include "lmfem/quadrature.hpp"

namespace lmfem {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline int slot(int i, int j) { return j * 5 + i; }
inline std::pair<int, int> slot_ij(int s) { return {s % 5, s / 5}; }

// lattice coordinates of the four local corners, counterclockwise from
// bottom-left
constexpr int kCornerIJ[4][2] = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};

// Canonical slot -> local slot under a square symmetry. The map is the
// lattice isometry sending canonical corner q to local corner sym.corner(q).
std::array<int, 25> canonical_slot_map(const SquareSymmetry& sym) {
    const int* o = kCornerIJ[sym.corner(0)];
    const int* u = kCornerIJ[sym.corner(1)];
    const int* v = kCornerIJ[sym.corner(3)];
    int ux = (u[0] - o[0]) / 4, uy = (u[1] - o[1]) / 4;
    int vx = (v[0] - o[0]) / 4, vy = (v[1] - o[1]) / 4;
    std::array<int, 25> map{};
    for (int j = 0; j <= 4; ++j)
        for (int i = 0; i <= 4; ++i)
            map[slot(i, j)] = slot(o[0] + i * ux + j * vx, o[1] + i * uy + j * vy);
    return map;
}

// canonical edge j (corner j -> j+1) under sym: local edge id and whether the
// local parameterization runs opposite to the canonical one
struct EdgeImage {
    int local_edge;
    bool reversed;
};

EdgeImage canonical_edge_image(const SquareSymmetry& sym, int j) {
    int a = sym.corner(j);
    int b = sym.corner((j + 1) % 4);
    if ((a + 1) % 4 == b) return {a, false};
    return {b, true};
}

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * cross(b - a, c - a);
}

Point2 line_intersection(const Point2& p, const Point2& q, const Point2& r, const Point2& s) {
    Point2 d1 = q - p, d2 = s - r;
    double den = cross(d1, d2);
    double scale = norm(d1) * norm(d2);
    if (std::abs(den) <= 1e-14 * scale)
        throw DegenerateGeometry("parallel lines in midpoint construction");
    double t = cross(r - p, d2) / den;
    return p + t * d1;
}

double interior_angle(const Point2& prev, const Point2& at, const Point2& next) {
    Point2 u = prev - at, v = next - at;
    double nu = norm(u), nv = norm(v);
    if (nu == 0.0 || nv == 0.0) throw DegenerateGeometry("zero-length edge");
    double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

struct LocalCuts {
    std::array<int, 4> corner_sign{};                   // -1, 0, +1 (snapped)
    std::array<std::optional<LineCut>, 4> edge;         // interior cuts, local orientation
};

// Predicate evaluation of one symmetry candidate against the canonical cut
// patterns. Returns the canonical cut parameter of edge j, if cut.
std::optional<double> canonical_param(const LocalCuts& lc, const SquareSymmetry& sym, int j) {
    EdgeImage e = canonical_edge_image(sym, j);
    if (!lc.edge[e.local_edge]) return std::nullopt;
    double r = lc.edge[e.local_edge]->r;
    return e.reversed ? 1.0 - r : r;
}

CutConfig classify_core(const LocalCuts& lc) {
    CutConfig cfg;

    bool pos = false, neg = false;
    for (int k = 0; k < 4; ++k) {
        pos = pos || lc.corner_sign[k] > 0;
        neg = neg || lc.corner_sign[k] < 0;
    }

    // An edge matched by the interface: both endpoints on Gamma.
    for (int e = 0; e < 4; ++e) {
        if (lc.corner_sign[e] == 0 && lc.corner_sign[(e + 1) % 4] == 0) {
            if (pos && neg)
                throw AssumptionViolation("interface matches an edge of a cut patch");
            return cfg;  // Uncut
        }
    }
    if (!(pos && neg)) return cfg;  // Uncut (includes corner tangencies)

    int nz = 0, z_corner = -1;
    for (int k = 0; k < 4; ++k)
        if (lc.corner_sign[k] == 0) {
            ++nz;
            z_corner = k;
        }
    int nc = 0;
    std::array<int, 2> cut_edges{-1, -1};
    for (int e = 0; e < 4; ++e)
        if (lc.edge[e]) {
            if (nc < 2) cut_edges[nc] = e;
            ++nc;
        }

    auto all_syms = [] {
        std::array<SquareSymmetry, 8> syms;
        int k = 0;
        for (int dir : {1, -1})
            for (int off = 0; off < 4; ++off) syms[k++] = {off, dir};
        return syms;
    }();

    if (nz == 2 && nc == 0) {
        // Configuration A: cut in two opposite nodes.
        for (const auto& sym : all_syms) {
            if (lc.corner_sign[sym.corner(1)] == 0 && lc.corner_sign[sym.corner(3)] == 0) {
                cfg.kind = CutKind::A;
                cfg.sym = sym;
                cfg.cuts = {CutRef{true, sym.corner(1)}, CutRef{true, sym.corner(3)}};
                return cfg;
            }
        }
        throw AssumptionViolation("two interface nodes on adjacent corners");
    }

    if (nz == 1 && nc == 1) {
        // Configuration B: one node and the interior of a non-incident edge.
        int ce = cut_edges[0];
        if (ce == z_corner || (ce + 1) % 4 == z_corner)
            throw AssumptionViolation("interface cuts a node and an incident edge");
        for (const auto& sym : all_syms) {
            if (sym.corner(0) != z_corner) continue;
            auto s = canonical_param(lc, sym, 1);
            if (!s) continue;
            cfg.kind = CutKind::B;
            cfg.sym = sym;
            cfg.s = *s;
            cfg.cuts = {CutRef{true, z_corner}, CutRef{false, ce}};
            return cfg;
        }
        throw AssumptionViolation("unclassifiable node+edge cut");
    }

    if (nz == 0 && nc == 2) {
        bool opposite = (cut_edges[0] + 2) % 4 == cut_edges[1];
        if (opposite) {
            for (const auto& sym : all_syms) {
                auto r = canonical_param(lc, sym, 0);
                auto s2 = canonical_param(lc, sym, 2);
                if (!r || !s2) continue;
                cfg.kind = CutKind::C;
                cfg.sym = sym;
                cfg.r = *r;
                cfg.s = 1.0 - *s2;  // measured in the same direction as r
                cfg.cuts = {CutRef{false, cut_edges[0]}, CutRef{false, cut_edges[1]}};
                return cfg;
            }
        } else {
            // adjacent edges: D when r <= 1/2 and s >= 1/2 in some canonical
            // frame, otherwise E
            for (bool want_d : {true, false}) {
                for (const auto& sym : all_syms) {
                    auto r = canonical_param(lc, sym, 0);
                    auto s = canonical_param(lc, sym, 1);
                    if (!r || !s) continue;
                    bool is_d = *r <= 0.5 && *s >= 0.5;
                    if (is_d != want_d) continue;
                    cfg.kind = want_d ? CutKind::D : CutKind::E;
                    cfg.sym = sym;
                    cfg.r = *r;
                    cfg.s = *s;
                    cfg.cuts = {CutRef{false, cut_edges[0]}, CutRef{false, cut_edges[1]}};
                    return cfg;
                }
            }
        }
        throw AssumptionViolation("unclassifiable two-edge cut");
    }

    throw AssumptionViolation("patch is not cut in exactly two points");
}

// ---------------------------------------------------------------------------
// layout construction (canonical space, physical coordinates)
// ---------------------------------------------------------------------------

struct CanonicalFrame {
    std::array<Point2, 4> X;  // canonical corners
    std::array<Point2, 4> E;  // canonical edge points
};

CanonicalFrame make_frame(const PatchContext& ctx, const CutConfig& cfg) {
    CanonicalFrame f;
    for (int q = 0; q < 4; ++q) f.X[q] = ctx.corners[cfg.sym.corner(q)];
    for (int j = 0; j < 4; ++j) f.E[j] = ctx.epoints[canonical_edge_image(cfg.sym, j).local_edge];
    return f;
}

struct CanonicalQuad {
    std::array<int, 4> cs;  // canonical corner slots, counterclockwise
};

const std::array<CanonicalQuad, 4> kQuads = {{
    {{slot(0, 0), slot(2, 0), slot(2, 2), slot(0, 2)}},
    {{slot(2, 0), slot(4, 0), slot(4, 2), slot(2, 2)}},
    {{slot(2, 2), slot(4, 2), slot(4, 4), slot(2, 4)}},
    {{slot(0, 2), slot(2, 2), slot(2, 4), slot(0, 4)}},
}};

int mid_slot(int a, int b) {
    auto [ia, ja] = slot_ij(a);
    auto [ib, jb] = slot_ij(b);
    return slot((ia + ib) / 2, (ja + jb) / 2);
}

// interface polyline of each configuration, as canonical slot pairs
std::vector<std::array<int, 2>> interface_segments(CutKind kind) {
    const int e0 = slot(2, 0), e1 = slot(4, 2), e2 = slot(2, 4);
    const int x1 = slot(4, 0), x3 = slot(0, 4), x0 = slot(0, 0), xm = slot(2, 2);
    switch (kind) {
        case CutKind::A: return {{x1, xm}, {xm, x3}};
        case CutKind::B: return {{x0, xm}, {xm, e1}};
        case CutKind::C: return {{e0, xm}, {xm, e2}};
        case CutKind::D: return {{e0, xm}, {xm, e1}};
        case CutKind::E: return {{e0, e1}};
        default: return {};
    }
}

// Which side of the canonical interface polyline a sub-triangle lies on,
// from its barycenter in canonical lattice coordinates. The polylines are
// fixed lattice paths, so the test is combinatorial.
bool on_first_region(CutKind kind, double bi, double bj) {
    switch (kind) {
        case CutKind::A: return bi + bj < 4.0;                      // contains corner X0
        case CutKind::B: return bi <= 2.0 ? bj < bi : bj < 2.0;     // contains corner X1
        case CutKind::C: return bi < 2.0;                           // contains corner X0
        case CutKind::D: return bi > 2.0 && bj < 2.0;               // contains corner X1
        case CutKind::E: return bj < bi - 2.0;                      // contains corner X1
        default: return true;
    }
}

// canonical corner whose level-set sign decides each region's side
std::pair<int, int> region_witness_corners(CutKind kind) {
    switch (kind) {
        case CutKind::A: return {0, 2};
        case CutKind::B: return {1, 3};
        case CutKind::C: return {0, 1};
        case CutKind::D: return {1, 0};
        case CutKind::E: return {1, 0};
        default: return {0, 0};
    }
}

// diagonal forced by the interface, per quad: -1 none, 0 diag v0-v2, 1 diag v1-v3
std::array<int, 4> forced_diagonals(CutKind kind) {
    switch (kind) {
        case CutKind::A: return {-1, 1, -1, 1};
        case CutKind::B: return {0, -1, -1, -1};
        case CutKind::C: return {-1, -1, -1, -1};
        case CutKind::D: return {-1, 1, -1, -1};
        case CutKind::E: return {-1, 0, -1, -1};
        default: return {-1, -1, -1, -1};
    }
}

}  // namespace

double check_max_angle(const std::array<Point2, 3>& c, const std::array<Point2, 3>& m) {
    // tangent of the edge (p, mid, q) at p
    auto tangent = [](const Point2& p, const Point2& mid, const Point2& q) {
        return 4.0 * mid - 3.0 * p - q;
    };
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Point2& p = c[k];
        Point2 t1 = tangent(p, m[k], c[(k + 1) % 3]);          // edge k: (k, k+1)
        Point2 t2 = tangent(p, m[(k + 2) % 3], c[(k + 2) % 3]);  // edge k+2: (k+2, k)
        double n1 = norm(t1), n2 = norm(t2);
        if (n1 == 0.0 || n2 == 0.0) throw DegenerateGeometry("zero-length edge");
        double cs = std::clamp(dot(t1, t2) / (n1 * n2), -1.0, 1.0);
        worst = std::max(worst, std::acos(cs) * 180.0 / kPi);
    }
    return worst;
}

namespace {

// P2 triangle geometry kernel: jacobian of the 6-node map at barycentric
// (l1, l2) with l0 = 1 - l1 - l2.
void p2_tri_jacobian(const std::array<Point2, 3>& c, const std::array<Point2, 3>& m, double l1,
                     double l2, double J[2][2]) {
    double l0 = 1.0 - l1 - l2;
    // d/d(l1), d/d(l2) of the shape functions, with l0 eliminated
    double g[6][2] = {
        {1.0 - 4.0 * l0, 1.0 - 4.0 * l0},          // v0: 2l0^2 - l0
        {4.0 * l1 - 1.0, 0.0},                     // v1
        {0.0, 4.0 * l2 - 1.0},                     // v2
        {4.0 * (l0 - l1), -4.0 * l1},              // m01
        {4.0 * l2, 4.0 * l1},                      // m12
        {-4.0 * l2, 4.0 * (l0 - l2)},              // m20
    };
    const Point2 pts[6] = {c[0], c[1], c[2], m[0], m[1], m[2]};
    J[0][0] = J[0][1] = J[1][0] = J[1][1] = 0.0;
    for (int k = 0; k < 6; ++k) {
        J[0][0] += pts[k].x * g[k][0];
        J[0][1] += pts[k].x * g[k][1];
        J[1][0] += pts[k].y * g[k][0];
        J[1][1] += pts[k].y * g[k][1];
    }
}

bool p2_tri_jacobian_positive(const std::array<Point2, 3>& c, const std::array<Point2, 3>& m) {
    static const QuadratureRule rule = triangle_rule(5);
    auto detj = [&](double l1, double l2) {
        double J[2][2];
        p2_tri_jacobian(c, m, l1, l2, J);
        return J[0][0] * J[1][1] - J[0][1] * J[1][0];
    };
    double scale = 2.0 * std::abs(signed_area(c[0], c[1], c[2]));
    for (const auto& qp : rule.points)
        if (detj(qp.p.x, qp.p.y) <= 1e-12 * scale) return false;
    static const double corners[3][2] = {{0, 0}, {1, 0}, {0, 1}};
    for (auto& lc : corners)
        if (detj(lc[0], lc[1]) <= 1e-12 * scale) return false;
    return true;
}

}  // namespace

double curved_tri_area(const std::array<Point2, 3>& c, const std::array<Point2, 3>& m) {
    static const QuadratureRule rule = triangle_rule(5);
    double area = 0.0;
    for (const auto& qp : rule.points) {
        double J[2][2];
        p2_tri_jacobian(c, m, qp.p.x, qp.p.y, J);
        area += qp.w * (J[0][0] * J[1][1] - J[0][1] * J[1][0]);
    }
    return area;
}

namespace {

// Does the quadratic arc through (P0, M, P1) cross the segment (S0, S1)?
// Exact quadratic-line intersection; contacts at the arc endpoints are not
// counted.
bool arc_crosses_segment(const Point2& P0, const Point2& M, const Point2& P1, const Point2& S0,
                         const Point2& S1) {
    const Point2 A = 2.0 * (P0 - 2.0 * M + P1);
    const Point2 B = 4.0 * M - 3.0 * P0 - P1;
    const Point2 D = S1 - S0;
    const Point2 n = perp(D);
    const double a = dot(n, A);
    const double b = dot(n, B);
    const double c = dot(n, P0 - S0);
    const double t_eps = 1e-9;

    double roots[2];
    int nroots = 0;
    double scale = std::abs(a) + std::abs(b) + std::abs(c);
    if (std::abs(a) <= 1e-14 * scale) {
        if (std::abs(b) > 1e-14 * scale) roots[nroots++] = -c / b;
    } else {
        double disc = b * b - 4.0 * a * c;
        if (disc > 0.0) {
            double sq = std::sqrt(disc);
            double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
            roots[nroots++] = q / a;
            if (q != 0.0) roots[nroots++] = c / q;
        }
    }
    const double dd = dot(D, D);
    for (int k = 0; k < nroots; ++k) {
        double t = roots[k];
        if (!(t > t_eps && t < 1.0 - t_eps)) continue;
        Point2 q = P0 + t * (B + t * A);
        double u = dot(q - S0, D) / dd;
        if (u > -1e-9 && u < 1.0 + 1e-9) return true;
    }
    return false;
}

void split_quad(const std::array<Point2, 25>& pos, const CanonicalQuad& quad, int forced_diag,
                std::vector<std::array<int, 3>>& tris) {
    int diag = forced_diag;
    if (diag < 0) {
        // split the largest interior angle
        double best = -1.0;
        int arg = 0;
        for (int k = 0; k < 4; ++k) {
            double ang = interior_angle(pos[quad.cs[(k + 3) % 4]], pos[quad.cs[k]],
                                        pos[quad.cs[(k + 1) % 4]]);
            if (ang > best) {
                best = ang;
                arg = k;
            }
        }
        diag = arg % 2;
    }
    const auto& cs = quad.cs;
    if (diag == 0) {
        tris.push_back({cs[0], cs[1], cs[2]});
        tris.push_back({cs[0], cs[2], cs[3]});
    } else {
        tris.push_back({cs[1], cs[2], cs[3]});
        tris.push_back({cs[1], cs[3], cs[0]});
    }
}

}  // namespace

CutConfig classify_patch(const LevelSetField& ls, const std::array<Point2, 4>& corners,
                         const MeshParams& params) {
    double h = norm(corners[1] - corners[0]);
    double vtol = params.vertex_tol_rel * h * std::sqrt(2.0);
    LocalCuts lc;
    for (int k = 0; k < 4; ++k) {
        double g = ls.value(corners[k]);
        lc.corner_sign[k] = std::abs(g) <= vtol ? 0 : (g < 0.0 ? -1 : 1);
    }
    for (int e = 0; e < 4; ++e) {
        if (lc.corner_sign[e] == 0 && lc.corner_sign[(e + 1) % 4] == 0) continue;
        auto cut = find_edge_cut(ls, corners[e], corners[(e + 1) % 4], params.root_tol, vtol);
        if (cut && cut->r > 0.0 && cut->r < 1.0) lc.edge[e] = cut;
    }
    return classify_core(lc);
}

PatchContext make_patch_context(const LevelSetField& ls, const std::array<Point2, 4>& corners,
                                const MeshParams& params) {
    PatchContext ctx;
    ctx.ls = &ls;
    ctx.params = params;
    ctx.corners = corners;
    ctx.patch_size = norm(corners[1] - corners[0]);
    double vtol = params.vertex_tol_rel * ctx.patch_size * std::sqrt(2.0);
    for (int e = 0; e < 4; ++e) {
        const Point2& a = corners[e];
        const Point2& b = corners[(e + 1) % 4];
        std::optional<LineCut> cut;
        if (!(std::abs(ls.value(a)) <= vtol && std::abs(ls.value(b)) <= vtol))
            cut = find_edge_cut(ls, a, b, params.root_tol, vtol);
        ctx.epoints[e] =
            (cut && cut->r > 0.0 && cut->r < 1.0) ? cut->point : midpoint(a, b);
    }
    return ctx;
}

PatchData build_node_layout(const PatchContext& ctx, const CutConfig& cfg) {
    PatchData patch;
    patch.config = cfg;
    const double h = ctx.patch_size > 0.0 ? ctx.patch_size : norm(ctx.corners[1] - ctx.corners[0]);
    const double area_tol = 1e-14 * h * h;

    if (cfg.kind == CutKind::Uncut) {
        // All nodes derive from corner/edge-point midpoints so that boundary
        // nodes agree bit-exactly with any neighbor, cut or not.
        auto& nodes = patch.layout.nodes;
        nodes[slot(0, 0)] = ctx.corners[0];
        nodes[slot(4, 0)] = ctx.corners[1];
        nodes[slot(4, 4)] = ctx.corners[2];
        nodes[slot(0, 4)] = ctx.corners[3];
        nodes[slot(2, 0)] = midpoint(ctx.corners[0], ctx.corners[1]);
        nodes[slot(4, 2)] = midpoint(ctx.corners[1], ctx.corners[2]);
        nodes[slot(2, 4)] = midpoint(ctx.corners[2], ctx.corners[3]);
        nodes[slot(0, 2)] = midpoint(ctx.corners[3], ctx.corners[0]);
        nodes[slot(2, 2)] = midpoint(nodes[slot(2, 0)], nodes[slot(2, 4)]);
        for (const auto& q : kQuads) {
            for (int k = 0; k < 4; ++k) {
                int a = q.cs[k], b = q.cs[(k + 1) % 4];
                nodes[mid_slot(a, b)] = midpoint(nodes[a], nodes[b]);
            }
            nodes[mid_slot(q.cs[0], q.cs[2])] = midpoint(nodes[q.cs[0]], nodes[q.cs[2]]);
        }
        double vtol = ctx.params.vertex_tol_rel * h * std::sqrt(2.0);
        double gc = ctx.ls->value(nodes[slot(2, 2)]);
        for (int k = 0; k < 4 && std::abs(gc) <= vtol; ++k) gc = ctx.ls->value(ctx.corners[k]);
        Side side = gc < 0.0 ? Side::Omega1 : Side::Omega2;
        for (const auto& q : kQuads) {
            SubElement el;
            el.shape = CellShape::Quad;
            el.side = side;
            for (int k = 0; k < 4; ++k) el.slots[k] = q.cs[k];
            for (int k = 0; k < 4; ++k) el.slots[4 + k] = mid_slot(q.cs[k], q.cs[(k + 1) % 4]);
            el.slots[8] = mid_slot(q.cs[0], q.cs[2]);
            patch.elems.push_back(el);
        }
        return patch;
    }

    CanonicalFrame f = make_frame(ctx, cfg);
    std::array<Point2, 25> pos{};
    pos[slot(0, 0)] = f.X[0];
    pos[slot(4, 0)] = f.X[1];
    pos[slot(4, 4)] = f.X[2];
    pos[slot(0, 4)] = f.X[3];
    pos[slot(2, 0)] = f.E[0];
    pos[slot(4, 2)] = f.E[1];
    pos[slot(2, 4)] = f.E[2];
    pos[slot(0, 2)] = f.E[3];

    switch (cfg.kind) {
        case CutKind::A:
        case CutKind::C:
        case CutKind::E:
            pos[slot(2, 2)] = line_intersection(f.E[0], f.E[2], f.E[1], f.E[3]);
            break;
        case CutKind::B:
            pos[slot(2, 2)] = line_intersection(f.E[0], f.E[2], f.X[0], f.E[1]);
            break;
        case CutKind::D:
            pos[slot(2, 2)] = midpoint(f.E[0], f.E[1]);
            break;
        default: break;
    }

    std::vector<std::array<int, 3>> tris;
    auto forced = forced_diagonals(cfg.kind);
    for (int k = 0; k < 4; ++k) split_quad(pos, kQuads[k], forced[k], tris);

    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k) {
            int ms = mid_slot(t[k], t[(k + 1) % 3]);
            pos[ms] = midpoint(pos[t[k]], pos[t[(k + 1) % 3]]);
        }

    // remap canonical slots to the local lattice
    auto map = canonical_slot_map(cfg.sym);
    for (int cs = 0; cs < 25; ++cs) patch.layout.nodes[map[cs]] = pos[cs];

    // sides of the two regions separated by the interface polyline, decided
    // by the level-set sign at one strictly signed corner per region
    auto [w1, w2] = region_witness_corners(cfg.kind);
    Side side_first = ctx.ls->value(f.X[w1]) < 0.0 ? Side::Omega1 : Side::Omega2;
    Side side_second = ctx.ls->value(f.X[w2]) < 0.0 ? Side::Omega1 : Side::Omega2;

    for (const auto& t : tris) {
        SubElement el;
        el.shape = CellShape::Tri;
        el.slots[0] = map[t[0]];
        el.slots[1] = map[t[1]];
        el.slots[2] = map[t[2]];
        double ar = signed_area(patch.layout.nodes[el.slots[0]], patch.layout.nodes[el.slots[1]],
                                patch.layout.nodes[el.slots[2]]);
        if (std::abs(ar) <= area_tol) throw DegenerateGeometry("zero-area sub-triangle");
        if (ar < 0.0) std::swap(el.slots[1], el.slots[2]);
        el.slots[3] = mid_slot(el.slots[0], el.slots[1]);
        el.slots[4] = mid_slot(el.slots[1], el.slots[2]);
        el.slots[5] = mid_slot(el.slots[2], el.slots[0]);
        double bi = 0.0, bj = 0.0;
        for (int k = 0; k < 3; ++k) {
            auto [ii, jj] = slot_ij(t[k]);
            bi += ii / 3.0;
            bj += jj / 3.0;
        }
        el.side = on_first_region(cfg.kind, bi, bj) ? side_first : side_second;
        patch.elems.push_back(el);
    }

    for (const auto& seg : interface_segments(cfg.kind))
        patch.interface_segments.push_back({map[seg[0]], map[seg[1]]});

    return patch;
}

namespace {

void refresh_straight_midpoints(PatchData& patch) {
    auto& nodes = patch.layout.nodes;
    for (const auto& el : patch.elems) {
        if (el.shape != CellShape::Tri) continue;
        for (int k = 0; k < 3; ++k) {
            int ms = el.slots[3 + k];
            if (patch.layout.moved[ms]) continue;
            nodes[ms] = midpoint(nodes[el.slots[k]], nodes[el.slots[(k + 1) % 3]]);
        }
    }
}

std::array<Point2, 3> tri_corners(const PatchData& p, const SubElement& el) {
    return {p.layout.nodes[el.slots[0]], p.layout.nodes[el.slots[1]], p.layout.nodes[el.slots[2]]};
}
std::array<Point2, 3> tri_mids(const PatchData& p, const SubElement& el) {
    return {p.layout.nodes[el.slots[3]], p.layout.nodes[el.slots[4]], p.layout.nodes[el.slots[5]]};
}

bool tri_has_edge(const SubElement& el, int u, int v, int& edge_index) {
    for (int k = 0; k < 3; ++k) {
        int a = el.slots[k], b = el.slots[(k + 1) % 3];
        if ((a == u && b == v) || (a == v && b == u)) {
            edge_index = k;
            return true;
        }
    }
    return false;
}

}  // namespace

bool apply_quadratic_rearrangement(PatchData& patch, const PatchContext& ctx) {
    if (patch.config.kind == CutKind::Uncut) return true;

    const auto saved_layout = patch.layout;
    auto fail = [&]() {
        patch.layout = saved_layout;
        patch.fallback = true;
        for (auto& el : patch.elems) el.curvature = Curvature::LinearFallback;
        return false;
    };

    const auto& params = ctx.params;
    const LevelSetField& ls = *ctx.ls;
    auto map = canonical_slot_map(patch.config.sym);
    auto& nodes = patch.layout.nodes;
    const int xm = map[slot(2, 2)];
    const CutKind kind = patch.config.kind;

    // Step 1: move the midpoint of the patch onto Gamma.
    if (kind != CutKind::E) {
        std::optional<Point2> target;
        if (kind == CutKind::A || kind == CutKind::D) {
            const auto& seg = patch.interface_segments;
            Point2 pa = nodes[seg[0][0]], pb = nodes[seg[1][1]];
            Point2 dir = normalized(perp(pb - pa));
            target = project_along_direction(ls, nodes[xm], dir, params.root_tol,
                                             0.5 * norm(pb - pa));
        } else {
            // B: along the segment joining the canonical bottom/top edge
            // points; C: along the one joining the right/left edge points.
            int u0 = kind == CutKind::B ? map[slot(2, 0)] : map[slot(4, 2)];
            int u1 = kind == CutKind::B ? map[slot(2, 4)] : map[slot(0, 2)];
            Point2 base = nodes[u0], d = nodes[u1] - base;
            double len = norm(d);
            target = project_along_direction(ls, nodes[xm], d * (1.0 / len), params.root_tol, len);
            if (target) {
                double dpos = dot(*target - base, d) / (len * len);
                if (!(dpos > params.eps_d && dpos < 1.0 - params.eps_d)) return fail();
            }
        }
        if (!target) return fail();
        nodes[xm] = *target;
        patch.layout.moved[xm] = true;
        refresh_straight_midpoints(patch);
        for (const auto& el : patch.elems)
            if (check_max_angle(tri_corners(patch, el), tri_mids(patch, el)) > params.alpha_max_deg)
                return fail();
    }

    // Step 2: move the midpoints of the interface segments onto Gamma along
    // the segment normals.
    for (const auto& seg : patch.interface_segments) {
        int ms = mid_slot(seg[0], seg[1]);
        Point2 u = nodes[seg[0]], v = nodes[seg[1]];
        Point2 dir = normalized(perp(v - u));
        auto target =
            project_along_direction(ls, nodes[ms], dir, params.root_tol, 0.5 * norm(v - u));
        if (!target) return fail();
        nodes[ms] = *target;
        patch.layout.moved[ms] = true;
    }

    // Acceptance checks on the curved triangles: maximum angle, no crossing
    // of the curved edge with any other edge, positive jacobian.
    std::vector<int> curved;
    for (const auto& seg : patch.interface_segments) {
        int ms = mid_slot(seg[0], seg[1]);
        for (size_t ei = 0; ei < patch.elems.size(); ++ei) {
            const auto& el = patch.elems[ei];
            int k;
            if (!tri_has_edge(el, seg[0], seg[1], k)) continue;
            curved.push_back(int(ei));
            auto c = tri_corners(patch, el);
            auto m = tri_mids(patch, el);
            if (check_max_angle(c, m) > params.alpha_max_deg) return fail();
            Point2 P0 = nodes[seg[0]], M = nodes[ms], P1 = nodes[seg[1]];
            for (int other = 0; other < 3; ++other) {
                if (other == k) continue;
                if (arc_crosses_segment(P0, M, P1, c[other], c[(other + 1) % 3])) return fail();
            }
            if (!p2_tri_jacobian_positive(c, m)) return fail();
        }
    }
    for (int ei : curved) patch.elems[ei].curvature = Curvature::QuadraticEdge;
    return true;
}

MeshModel build_mesh(const PatchGrid& grid, const LevelSetField& ls, const MeshParams& params_in) {
    MeshModel mesh;
    mesh.grid = grid;
    const int n = grid.n;
    const double hP = grid.patch_size;

    MeshParams params = params_in;
    const double vtol = params.vertex_tol_rel * hP * std::sqrt(2.0);

    // corner signs, snapped to Gamma within the vertex tolerance
    std::vector<int> sign((n + 1) * (n + 1));
    mesh.corner_on_gamma.assign((n + 1) * (n + 1), false);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            double g = ls.value(grid.corner(i, j));
            int s = std::abs(g) <= vtol ? 0 : (g < 0.0 ? -1 : 1);
            sign[j * (n + 1) + i] = s;
            mesh.corner_on_gamma[j * (n + 1) + i] = s == 0;
        }

    // one interface cut per global edge
    mesh.hcuts.assign(n * (n + 1), std::nullopt);
    mesh.vcuts.assign((n + 1) * n, std::nullopt);
    auto edge_cut = [&](const Point2& a, const Point2& b, int px, int py) {
        try {
            return find_edge_cut(ls, a, b, params.root_tol, vtol);
        } catch (const AssumptionViolation& e) {
            throw AssumptionViolation(std::string(e.what()) + " (near patch " +
                                      std::to_string(px) + "," + std::to_string(py) + ")");
        }
    };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < n; ++i) {
            auto cut = edge_cut(grid.corner(i, j), grid.corner(i + 1, j), i, std::min(j, n - 1));
            if (cut && cut->r > 0.0 && cut->r < 1.0) mesh.hcuts[mesh.hcut_index(i, j)] = cut;
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= n; ++i) {
            auto cut = edge_cut(grid.corner(i, j), grid.corner(i, j + 1), std::min(i, n - 1), j);
            if (cut && cut->r > 0.0 && cut->r < 1.0) mesh.vcuts[mesh.vcut_index(i, j)] = cut;
        }

    mesh.patches.reserve(n * n);
    for (int py = 0; py < n; ++py)
        for (int px = 0; px < n; ++px) {
            PatchContext ctx;
            ctx.ls = &ls;
            ctx.params = params;
            ctx.patch_size = hP;
            ctx.corners = {grid.corner(px, py), grid.corner(px + 1, py),
                           grid.corner(px + 1, py + 1), grid.corner(px, py + 1)};

            LocalCuts lc;
            lc.corner_sign = {sign[py * (n + 1) + px], sign[py * (n + 1) + px + 1],
                              sign[(py + 1) * (n + 1) + px + 1], sign[(py + 1) * (n + 1) + px]};
            // local edges 0..3 = bottom, right, top (reversed), left (reversed)
            const std::optional<LineCut>* g[4] = {
                &mesh.hcuts[mesh.hcut_index(px, py)], &mesh.vcuts[mesh.vcut_index(px + 1, py)],
                &mesh.hcuts[mesh.hcut_index(px, py + 1)], &mesh.vcuts[mesh.vcut_index(px, py)]};
            for (int e = 0; e < 4; ++e) {
                if (!g[e]->has_value()) continue;
                LineCut cut = **g[e];
                if (e >= 2) cut.r = 1.0 - cut.r;  // top/left run opposite to global
                lc.edge[e] = cut;
            }

            CutConfig cfg;
            try {
                cfg = classify_core(lc);
            } catch (const AssumptionViolation& e) {
                throw AssumptionViolation(std::string(e.what()) + " (patch " + std::to_string(px) +
                                          "," + std::to_string(py) + ")");
            }

            for (int e = 0; e < 4; ++e)
                ctx.epoints[e] = lc.edge[e] ? lc.edge[e]->point
                                            : midpoint(ctx.corners[e], ctx.corners[(e + 1) % 4]);

            PatchData patch = build_node_layout(ctx, cfg);
            if (cfg.kind != CutKind::Uncut) {
                ++mesh.PN;
                if (params.quadratic) apply_quadratic_rearrangement(patch, ctx);
            }
            for (const auto& el : patch.elems)
                if (el.curvature == Curvature::LinearFallback) ++mesh.n_l;
            mesh.patches.push_back(std::move(patch));
        }
    return mesh;
}

}  // namespace lmfem
