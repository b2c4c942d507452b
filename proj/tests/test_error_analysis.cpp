#include <doctest.h>

#include <cmath>

#include "lmfem/error_analysis.hpp"
#include "lmfem/experiments.hpp"

using namespace lmfem;

namespace {

LevelSetField constant_ls(double v) {
    return {[v](const Point2&) { return v; }, [](const Point2&) { return Point2{0, 0}; }};
}

}  // namespace

TEST_CASE("zero solution and zero data give zero errors") {
    MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 0.5, 8}, constant_ls(1.0));
    DoFMap dofs = build_dof_map(mesh);
    ProblemSpec spec;
    spec.u1 = spec.u2 = [](const Point2&) { return 0.0; };
    spec.grad_u1 = spec.grad_u2 = [](const Point2&) { return Point2{0, 0}; };
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(dofs.total_dofs);
    CHECK(l2_error(mesh, dofs, zero, spec, constant_ls(1.0)) == 0.0);
    CHECK(modified_energy_error(mesh, dofs, zero, spec) == 0.0);
}

TEST_CASE("interpolant of a smooth function converges with third order in L2") {
    ProblemSpec spec;
    auto u = [](const Point2& p) { return std::sin(p.x + 0.5 * p.y); };
    spec.u1 = spec.u2 = u;
    spec.grad_u1 = spec.grad_u2 = [](const Point2& p) {
        return Point2{std::cos(p.x + 0.5 * p.y), 0.5 * std::cos(p.x + 0.5 * p.y)};
    };
    LevelSetField ls = constant_ls(1.0);
    double prev = 0.0;
    for (int n : {8, 16, 32}) {
        MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 4.0 / n, n}, ls);
        DoFMap dofs = build_dof_map(mesh);
        Eigen::VectorXd coef(dofs.total_dofs);
        for (int k = 0; k < dofs.total_dofs; ++k) coef[k] = u(dofs.positions[k]);
        double err = l2_error(mesh, dofs, coef, spec, ls);
        if (prev > 0.0) {
            double ratio = prev / err;
            CHECK(ratio > 7.0);
            CHECK(ratio < 9.0);
        }
        prev = err;
    }
}

TEST_CASE("energy error vanishes for the interpolant of a piecewise-linear extension") {
    // straight interface resolved exactly by the cut patches
    LevelSetField ls{[](const Point2& p) { return p.y - 0.5; },
                     [](const Point2&) { return Point2{0, 1}; }};
    MeshModel mesh = build_mesh(PatchGrid{{-2, -2}, 0.5, 8}, ls);
    DoFMap dofs = build_dof_map(mesh);
    ProblemSpec spec;
    spec.nu1 = 4.0;
    spec.nu2 = 1.0;
    spec.u1 = [](const Point2& p) { return 2.0 * (p.y - 0.5); };
    spec.u2 = [](const Point2& p) { return 0.5 * (p.y - 0.5); };
    spec.grad_u1 = [](const Point2&) { return Point2{0, 2.0}; };
    spec.grad_u2 = [](const Point2&) { return Point2{0, 0.5}; };
    Eigen::VectorXd coef(dofs.total_dofs);
    for (int k = 0; k < dofs.total_dofs; ++k) {
        const Point2& p = dofs.positions[k];
        coef[k] = ls.value(p) < 0.0 ? spec.u1(p) : spec.u2(p);
    }
    CHECK(modified_energy_error(mesh, dofs, coef, spec) <= 1e-12);
}

TEST_CASE("estimated order of convergence") {
    CHECK(compute_eoc(1.74e-4, 2.13e-5) == doctest::Approx(3.0304).epsilon(1e-3));
    CHECK(compute_eoc(5.0e-3, 5.0e-3) == 0.0);
    CHECK(compute_eoc(8.0, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)compute_eoc(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)compute_eoc(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("branch selection is immaterial for a globally smooth solution") {
    ProblemSpec spec;
    spec.nu1 = spec.nu2 = 2.0;
    auto u = [](const Point2& p) { return std::cos(0.7 * p.x) * std::sin(0.3 * p.y); };
    spec.u1 = spec.u2 = u;
    spec.grad_u1 = spec.grad_u2 = [](const Point2& p) {
        return Point2{-0.7 * std::sin(0.7 * p.x) * std::sin(0.3 * p.y),
                      0.3 * std::cos(0.7 * p.x) * std::cos(0.3 * p.y)};
    };
    // the two constant level sets put the whole mesh on opposite sides
    MeshModel mesh_pos = build_mesh(PatchGrid{{-2, -2}, 0.5, 8}, constant_ls(1.0));
    MeshModel mesh_neg = build_mesh(PatchGrid{{-2, -2}, 0.5, 8}, constant_ls(-1.0));
    DoFMap dofs = build_dof_map(mesh_pos);
    Eigen::VectorXd coef(dofs.total_dofs);
    for (int k = 0; k < dofs.total_dofs; ++k) coef[k] = u(dofs.positions[k]);
    double l2p = l2_error(mesh_pos, dofs, coef, spec, constant_ls(1.0));
    double l2n = l2_error(mesh_neg, dofs, coef, spec, constant_ls(-1.0));
    double enp = modified_energy_error(mesh_pos, dofs, coef, spec);
    double enn = modified_energy_error(mesh_neg, dofs, coef, spec);
    CHECK(std::abs(l2p - l2n) <= 1e-12 * l2p);
    CHECK(std::abs(enp - enn) <= 1e-12 * enp);
}

TEST_CASE("errors are stable under a quadrature-degree upgrade") {
    ExperimentConfig cfg;
    cfg.example = ExampleKind::Parabola;
    cfg.h_list = {1.0 / 32};
    ExampleDefinition ex = make_example(ExampleKind::Parabola, 0.0);
    SolveOutput so = solve_one(ex, 1.0 / 32, cfg);
    double l2_8 = l2_error(so.mesh, so.dofs, so.u, ex.problem, ex.level_set, 8);
    double l2_10 = l2_error(so.mesh, so.dofs, so.u, ex.problem, ex.level_set, 10);
    double en_8 = modified_energy_error(so.mesh, so.dofs, so.u, ex.problem, 8);
    double en_10 = modified_energy_error(so.mesh, so.dofs, so.u, ex.problem, 10);
    CHECK(std::abs(l2_8 - l2_10) < 0.01 * l2_10);
    CHECK(std::abs(en_8 - en_10) < 0.01 * en_10);
}
