#include <doctest.h>

#include <cmath>
#include <random>

#include "lmfem/fe_space.hpp"

using namespace lmfem;

namespace {

LevelSetField line(double a, double b, double c) {
    return {[=](const Point2& p) { return a * p.x + b * p.y + c; },
            [=](const Point2&) { return Point2{a, b}; }};
}

LevelSetField circle(double x0, double y0, double r) {
    return {[=](const Point2& p) {
                return (p.x - x0) * (p.x - x0) + (p.y - y0) * (p.y - y0) - r * r;
            },
            [=](const Point2& p) {
                return Point2{2.0 * (p.x - x0), 2.0 * (p.y - y0)};
            }};
}

const std::array<Point2, 4> kUnitPatch = {Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}};

PatchData build_patch(const LevelSetField& ls, const std::array<Point2, 4>& corners) {
    PatchContext ctx = make_patch_context(ls, corners);
    PatchData p = build_node_layout(ctx, classify_patch(ls, corners));
    apply_quadratic_rearrangement(p, ctx);
    return p;
}

// containment of a reference point in a reference sub-element
bool contains(const SubElement& el, const Point2& xhat, double eps = 1e-12) {
    if (el.shape == CellShape::Quad) {
        double x0 = 2, y0 = 2;
        for (int k = 0; k < 4; ++k) {
            x0 = std::min(x0, reference_node(el.slots[k]).x);
            y0 = std::min(y0, reference_node(el.slots[k]).y);
        }
        return xhat.x >= x0 - eps && xhat.x <= x0 + 0.5 + eps && xhat.y >= y0 - eps &&
               xhat.y <= y0 + 0.5 + eps;
    }
    Point2 a = reference_node(el.slots[0]), b = reference_node(el.slots[1]),
           c = reference_node(el.slots[2]);
    double det = cross(b - a, c - a);
    double l1 = cross(xhat - a, c - a) / det;
    double l2 = cross(b - a, xhat - a) / det;
    return l1 >= -eps && l2 >= -eps && l1 + l2 <= 1.0 + eps;
}

const SubElement& element_at(const PatchData& p, const Point2& xhat) {
    for (const auto& el : p.elems)
        if (contains(el, xhat)) return el;
    REQUIRE(false);
    return p.elems.front();
}

}  // namespace

TEST_CASE("partition of unity at an interior point, both basis kinds") {
    for (const auto& p :
         {build_patch(line(1, 0, -2), kUnitPatch), build_patch(line(0, 1, -0.5), kUnitPatch)}) {
        Point2 xhat{0.37, 0.81};
        BasisEval be;
        eval_reference_basis(element_at(p, xhat), xhat, be);
        double sum = 0.0;
        Point2 gsum{0, 0};
        for (int s = 0; s < 25; ++s) {
            sum += be.values[s];
            gsum = gsum + be.gradients[s];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(gsum.x) <= 1e-12);
        CHECK(std::abs(gsum.y) <= 1e-12);
    }
}

TEST_CASE("nodal property over all 25x25 pairs, both basis kinds") {
    for (const auto& p :
         {build_patch(line(1, 0, -2), kUnitPatch), build_patch(line(0, 1, -0.4), kUnitPatch)}) {
        for (int j = 0; j < 25; ++j) {
            Point2 xj = reference_node(j);
            BasisEval be;
            eval_reference_basis(element_at(p, xj), xj, be);
            for (int i = 0; i < 25; ++i)
                CHECK(be.values[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("biquadratic tensor value matches the 1d product") {
    // center-node function at (0.125, 0.125): the 1d quadratic on nodes
    // {0, 1/4, 1/2} takes the value -0.125 at 0.125, squared by symmetry
    PatchData p = build_patch(line(1, 0, -2), kUnitPatch);
    Point2 xhat{0.125, 0.125};
    BasisEval be;
    eval_reference_basis(element_at(p, xhat), xhat, be);
    CHECK(be.values[12] == doctest::Approx(0.015625).epsilon(1e-13));
}

TEST_CASE("reference gradients match central finite differences") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.05, 0.45);
    for (const auto& p :
         {build_patch(line(1, 0, -2), kUnitPatch), build_patch(line(0, 1, -0.61), kUnitPatch)}) {
        for (const auto& el : p.elems) {
            Point2 xhat;
            if (el.shape == CellShape::Quad) {
                Point2 base = reference_node(el.slots[0]);
                xhat = {base.x + uni(rng), base.y + uni(rng)};
            } else {
                Point2 a = reference_node(el.slots[0]), b = reference_node(el.slots[1]),
                       c = reference_node(el.slots[2]);
                xhat = (1.0 / 3.0) * (a + b + c);
            }
            const double step = 1e-6;
            BasisEval b0, bx1, bx2, by1, by2;
            eval_reference_basis(el, xhat, b0);
            eval_reference_basis(el, {xhat.x - step, xhat.y}, bx1);
            eval_reference_basis(el, {xhat.x + step, xhat.y}, bx2);
            eval_reference_basis(el, {xhat.x, xhat.y - step}, by1);
            eval_reference_basis(el, {xhat.x, xhat.y + step}, by2);
            for (int s = 0; s < 25; ++s) {
                CHECK(std::abs((bx2.values[s] - bx1.values[s]) / (2 * step) -
                               b0.gradients[s].x) <= 1e-6);
                CHECK(std::abs((by2.values[s] - by1.values[s]) / (2 * step) -
                               b0.gradients[s].y) <= 1e-6);
            }
        }
    }
}

TEST_CASE("patch map: unmoved layout is the affine scaling") {
    std::array<Point2, 4> corners = {Point2{0.5, 0.25}, Point2{0.625, 0.25}, Point2{0.625, 0.375},
                                     Point2{0.5, 0.375}};
    PatchData p = build_patch(line(1, 0, -2), corners);
    for (const auto& el : p.elems) {
        Point2 base = reference_node(el.slots[0]);
        MapEval me = patch_map_eval(p, el, {base.x + 0.21, base.y + 0.17});
        CHECK(me.J[0][0] == doctest::Approx(0.125).epsilon(1e-13));
        CHECK(me.J[1][1] == doctest::Approx(0.125).epsilon(1e-13));
        CHECK(std::abs(me.J[0][1]) <= 1e-14);
        CHECK(std::abs(me.J[1][0]) <= 1e-14);
        CHECK(me.det == doctest::Approx(0.125 * 0.125).epsilon(1e-13));
    }
}

TEST_CASE("patch map interpolates the node positions") {
    PatchData p = build_patch(circle(0.2, -0.3, 1.0), kUnitPatch);
    REQUIRE(p.config.kind != CutKind::Uncut);
    for (const auto& el : p.elems)
        for (int k = 0; k < el.node_count(); ++k) {
            int s = el.slots[k];
            MapEval me = patch_map_eval(p, el, reference_node(s));
            CHECK(me.x.x == doctest::Approx(p.layout.nodes[s].x).epsilon(1e-13));
            CHECK(me.x.y == doctest::Approx(p.layout.nodes[s].y).epsilon(1e-13));
        }
}

TEST_CASE("patch map jacobian stays positive across admissible anisotropies") {
    const double vals[] = {1e-3, 0.05, 0.3, 0.5, 0.7, 0.95, 1.0 - 1e-3};
    for (double r : vals)
        for (double s : vals) {
            LevelSetField lc = line(1.0, -(s - r), -r);  // configuration C
            LevelSetField lde{[=](const Point2& p) { return (1.0 - r) * p.y - s * (p.x - r); },
                              [=](const Point2&) {
                                  return Point2{-s, 1.0 - r};
                              }};
            for (const auto* ls : {&lc, &lde}) {
                PatchData p = build_patch(*ls, kUnitPatch);
                for (const auto& el : p.elems) {
                    if (el.shape != CellShape::Tri) continue;
                    Point2 a = reference_node(el.slots[0]), b = reference_node(el.slots[1]),
                           c = reference_node(el.slots[2]);
                    for (const auto& xhat :
                         {(1.0 / 3.0) * (a + b + c), midpoint(a, b), midpoint(b, c)}) {
                        MapEval me = patch_map_eval(p, el, xhat);
                        CHECK(me.det > 0.0);
                    }
                }
            }
        }
}

TEST_CASE("dof map: counts, sharing and boundary set") {
    LevelSetField far = line(1, 0, -100);
    for (int n : {1, 2, 3}) {
        MeshModel mesh = build_mesh(PatchGrid{{0, 0}, 1.0 / n, n}, far);
        DoFMap dm = build_dof_map(mesh);
        CHECK(dm.total_dofs == (4 * n + 1) * (4 * n + 1));
        if (n >= 2) {
            // the right edge of patch (0,0) and the left edge of patch (1,0)
            // carry the same five global dofs
            for (int j = 0; j <= 4; ++j)
                CHECK(dm.global_index(0, 0, j * 5 + 4) == dm.global_index(1, 0, j * 5 + 0));
        }
        CHECK(int(dm.boundary_dofs.size()) == 4 * (4 * n + 1) - 4);
        for (int bd : dm.boundary_dofs) {
            const Point2& p = dm.positions[bd];
            bool on = p.x == 0.0 || p.y == 0.0 || p.x == 1.0 || p.y == 1.0;
            CHECK(on);
        }
    }
}

TEST_CASE("global continuity across shared edges for random coefficients") {
    LevelSetField ls = circle(1.0, 1.2, 0.3);
    MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 0.25, 16}, ls);
    DoFMap dm = build_dof_map(mesh);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> uni(-1, 1);
    Eigen::VectorXd coef(dm.total_dofs);
    for (int k = 0; k < dm.total_dofs; ++k) coef[k] = uni(rng);

    auto eval_at = [&](int px, int py, const Point2& xhat) {
        const PatchData& p = mesh.patch(px, py);
        const SubElement& el = element_at(p, xhat);
        BasisEval be;
        eval_reference_basis(el, xhat, be);
        double u = 0.0;
        for (int k = 0; k < el.node_count(); ++k)
            u += coef[dm.global_index(px, py, el.slots[k])] * be.values[el.slots[k]];
        return u;
    };

    const double ts[] = {0.08, 0.21, 0.37, 0.5, 0.63, 0.79, 0.92};
    for (int py = 0; py < 16; ++py)
        for (int px = 0; px + 1 < 16; ++px)
            for (double t : ts) {
                double ul = eval_at(px, py, {1.0, t});
                double ur = eval_at(px + 1, py, {0.0, t});
                CHECK(std::abs(ul - ur) <= 1e-12);
            }
}

TEST_CASE("nodal interpolation reproduces linear functions on cut meshes") {
    LevelSetField ls = circle(1.0, 1.2, 0.3);
    MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 0.25, 16}, ls);
    DoFMap dm = build_dof_map(mesh);
    auto u = [](const Point2& p) { return 0.7 + 1.3 * p.x - 2.1 * p.y; };
    Eigen::VectorXd coef(dm.total_dofs);
    for (int k = 0; k < dm.total_dofs; ++k) coef[k] = u(dm.positions[k]);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(0.1, 0.9);
    for (int py = 0; py < 16; py += 3)
        for (int px = 0; px < 16; px += 3) {
            const PatchData& p = mesh.patch(px, py);
            for (const auto& el : p.elems) {
                for (int rep = 0; rep < 5; ++rep) {
                    Point2 xhat;
                    if (el.shape == CellShape::Quad) {
                        Point2 base = reference_node(el.slots[0]);
                        xhat = {base.x + 0.5 * uni(rng), base.y + 0.5 * uni(rng)};
                    } else {
                        Point2 a = reference_node(el.slots[0]), b = reference_node(el.slots[1]),
                               c = reference_node(el.slots[2]);
                        double l1 = uni(rng), l2 = uni(rng) * (1.0 - l1);
                        xhat = a + l1 * (b - a) + l2 * (c - a);
                    }
                    BasisEval be;
                    eval_reference_basis(el, xhat, be);
                    MapEval me = patch_map_eval(p, el, xhat);
                    double uh = 0.0;
                    for (int k = 0; k < el.node_count(); ++k)
                        uh += coef[dm.global_index(px, py, el.slots[k])] * be.values[el.slots[k]];
                    CHECK(std::abs(uh - u(me.x)) <= 1e-12);
                }
            }
        }
}

TEST_CASE("hierarchical transform: identity for Lagrange, exact inverse otherwise") {
    LevelSetField ls = circle(1.0, 1.2, 0.3);
    MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 0.25, 16}, ls);
    DoFMap dm = build_dof_map(mesh);

    // a cheap SPD stand-in for the scaling source
    SpMat A(dm.total_dofs, dm.total_dofs);
    A.setIdentity();
    A *= 2.0;

    SpMat I = hierarchical_transform(mesh, dm, A, BasisKind::Lagrange);
    CHECK(I.nonZeros() == dm.total_dofs);
    CHECK(I.diagonal().minCoeff() == 1.0);

    SpMat S = hierarchical_transform(mesh, dm, A, BasisKind::HierarchicalScaled);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(-1, 1);
    Eigen::VectorXd y(dm.total_dofs);
    for (int k = 0; k < dm.total_dofs; ++k) y[k] = uni(rng);
    Eigen::VectorXd z = S * hierarchical_solve(S, y);
    CHECK((z - y).lpNorm<Eigen::Infinity>() <= 1e-10);
    Eigen::VectorXd z2 = hierarchical_solve(S, Eigen::VectorXd(S * y));
    CHECK((z2 - y).lpNorm<Eigen::Infinity>() <= 1e-10);
}
