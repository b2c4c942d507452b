#include "lmfem/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lmfem/vtk_writer.hpp"

namespace lmfem {

ExampleDefinition make_example(ExampleKind kind, double shift) {
    ExampleDefinition ex;
    std::function<double(const Point2&)> l;
    std::function<Point2(const Point2&)> grad_l;
    std::function<double(const Point2&)> f;

    if (kind == ExampleKind::Parabola) {
        l = [shift](const Point2& p) { return p.y - 2.0 * (p.x + shift) * (p.x + shift) + 0.5; };
        grad_l = [shift](const Point2& p) { return Point2{-4.0 * (p.x + shift), 1.0}; };
        f = [l, shift](const Point2& p) {
            double lv = l(p);
            double xs = p.x + shift;
            return 4.0 * std::cos(lv) + std::sin(lv) * (16.0 * xs * xs + 1.0);
        };
    } else {
        const double x0 = 1.0 + shift, y0 = 1.2, r2 = 0.09;
        l = [x0, y0, r2](const Point2& p) {
            return (p.x - x0) * (p.x - x0) + (p.y - y0) * (p.y - y0) - r2;
        };
        grad_l = [x0, y0](const Point2& p) {
            return Point2{2.0 * (p.x - x0), 2.0 * (p.y - y0)};
        };
        f = [l, x0, y0](const Point2& p) {
            double lv = l(p);
            double q = (p.x - x0) * (p.x - x0) + (p.y - y0) * (p.y - y0);
            return -4.0 * std::cos(lv) + 4.0 * std::sin(lv) * q;
        };
    }

    ex.level_set.value = l;
    ex.level_set.gradient = grad_l;

    ProblemSpec& ps = ex.problem;
    ps.nu1 = 4.0;
    ps.nu2 = 1.0;
    ps.u1 = [l](const Point2& p) { return std::sin(l(p)) / 4.0; };
    ps.u2 = [l](const Point2& p) { return std::sin(l(p)); };
    ps.grad_u1 = [l, grad_l](const Point2& p) { return (std::cos(l(p)) / 4.0) * grad_l(p); };
    ps.grad_u2 = [l, grad_l](const Point2& p) { return std::cos(l(p)) * grad_l(p); };
    ps.f1 = f;
    ps.f2 = f;
    ps.g = [l](const Point2& p) {
        double lv = l(p);
        return lv < 0.0 ? std::sin(lv) / 4.0 : std::sin(lv);
    };
    return ex;
}

PatchGrid example_grid(double h) {
    double inv = 1.0 / h;
    int n = int(std::lround(inv));
    if (n < 1 || std::abs(inv - n) > 1e-9 * inv)
        throw std::invalid_argument("1/h must be a positive integer");
    PatchGrid grid;
    grid.origin = {-2.0, -2.0};
    grid.n = n;
    grid.patch_size = 4.0 / n;
    return grid;
}

namespace {

double resolve_shift(const ExperimentConfig& cfg, double delta, double h, bool convergence) {
    DeltaUnit unit = cfg.delta_unit;
    if (unit == DeltaUnit::Auto)
        unit = (convergence && cfg.example == ExampleKind::Circle) ? DeltaUnit::Fixed64
                                                                   : DeltaUnit::MeshH;
    return unit == DeltaUnit::Fixed64 ? delta / 64.0 : delta * h;
}

std::string example_name(ExampleKind k) {
    return k == ExampleKind::Parabola ? "parabola" : "circle";
}

}  // namespace

SolveOutput solve_one(const ExampleDefinition& ex, double h, const ExperimentConfig& cfg) {
    SolveOutput out;
    out.mesh = build_mesh(example_grid(h), ex.level_set, cfg.mesh_params);
    out.dofs = build_dof_map(out.mesh);

    LinearSystem sys;
    sys.A = assemble_stiffness(out.mesh, out.dofs, ex.problem);
    sys.b = assemble_load(out.mesh, out.dofs, ex.problem);
    apply_dirichlet(sys, ex.problem.g, out.dofs);

    if (cfg.basis == BasisKind::HierarchicalScaled) {
        SpMat S = hierarchical_transform(out.mesh, out.dofs, sys.A, cfg.basis);
        CgResult res = cg_solve(sys.A, sys.b, cfg.solver_tol, cfg.solver_max_iter, &S);
        out.u = res.x;
        out.cg_iters = res.iterations;
    } else {
        CgResult res = cg_solve(sys.A, sys.b, cfg.solver_tol, cfg.solver_max_iter);
        out.u = res.x;
        out.cg_iters = res.iterations;
    }
    return out;
}

namespace {

ErrorReport make_report(const ExperimentConfig& cfg, const ExampleDefinition& ex, double h,
                        double delta, const SolveOutput& so) {
    ErrorReport row;
    row.h = h;
    row.delta = delta;
    row.l2_error = l2_error(so.mesh, so.dofs, so.u, ex.problem, ex.level_set);
    row.energy_error = modified_energy_error(so.mesh, so.dofs, so.u, ex.problem);
    row.PN = so.mesh.PN;
    row.n_l = so.mesh.n_l;
    row.cg_iters = so.cg_iters;

    if (cfg.condition) {
        LinearSystem sys;
        sys.A = assemble_stiffness(so.mesh, so.dofs, ex.problem);
        sys.b = Eigen::VectorXd::Zero(so.dofs.total_dofs);
        apply_dirichlet(sys, ex.problem.g, so.dofs);
        SpMat Aff = free_submatrix(sys.A, sys.is_constrained);
        try {
            row.cond_lagrange = estimate_condition(Aff, cfg.condition_params).cond;
        } catch (const SolveError&) {
        }
        try {
            SpMat S = hierarchical_transform(so.mesh, so.dofs, sys.A,
                                             BasisKind::HierarchicalScaled);
            SpMat Ah = SpMat(S.transpose()) * sys.A * S;
            SpMat Ahff = free_submatrix(Ah, sys.is_constrained);
            row.cond_hier = estimate_condition(Ahff, cfg.condition_params).cond;
        } catch (const SolveError&) {
        }
    }
    return row;
}

}  // namespace

std::vector<ErrorReport> run_example(const ExperimentConfig& cfg) {
    std::vector<ErrorReport> rows;
    for (double h : cfg.h_list) {
        double shift = resolve_shift(cfg, cfg.delta, h, true);
        ExampleDefinition ex = make_example(cfg.example, shift);
        SolveOutput so = solve_one(ex, h, cfg);
        ErrorReport row = make_report(cfg, ex, h, cfg.delta, so);
        if (!rows.empty()) {
            row.eoc_l2 = compute_eoc(rows.back().l2_error, row.l2_error);
            row.eoc_energy = compute_eoc(rows.back().energy_error, row.energy_error);
        }
        rows.push_back(row);

        if (!cfg.out_dir.empty()) {
            std::string tag = example_name(cfg.example) + "_n" + std::to_string(so.mesh.grid.n);
            if (cfg.write_vtk)
                export_vtk(so.mesh, so.dofs, so.u, cfg.out_dir + "/" + tag + ".vtk");
            if (cfg.write_matrix) {
                LinearSystem sys;
                sys.A = assemble_stiffness(so.mesh, so.dofs, ex.problem);
                sys.b = assemble_load(so.mesh, so.dofs, ex.problem);
                apply_dirichlet(sys, ex.problem.g, so.dofs);
                write_matrix_market(sys.A, cfg.out_dir + "/" + tag + ".mtx");
            }
        }
    }
    if (!cfg.out_dir.empty()) write_error_csv(cfg.out_dir + "/convergence.csv", rows);
    return rows;
}

std::vector<ErrorReport> sweep_delta(const ExperimentConfig& cfg) {
    std::vector<ErrorReport> rows;
    for (double h : cfg.h_list)
        for (int k = 0; k < cfg.delta_steps; ++k) {
            double delta = cfg.delta_steps == 1
                               ? cfg.delta_start
                               : cfg.delta_start + (cfg.delta_end - cfg.delta_start) * k /
                                                       (cfg.delta_steps - 1);
            ExampleDefinition ex = make_example(cfg.example, resolve_shift(cfg, delta, h, false));
            SolveOutput so = solve_one(ex, h, cfg);
            rows.push_back(make_report(cfg, ex, h, delta, so));
        }
    if (!cfg.out_dir.empty()) write_error_csv(cfg.out_dir + "/sweep.csv", rows);
    return rows;
}

std::vector<ConditionRow> condition_study(const ExperimentConfig& cfg) {
    std::vector<ConditionRow> rows;
    double h = cfg.h_list.at(0);
    for (int k = 0; k < cfg.delta_steps; ++k) {
        double delta = cfg.delta_steps == 1 ? cfg.delta_start
                                             : cfg.delta_start + (cfg.delta_end - cfg.delta_start) *
                                                                     k / (cfg.delta_steps - 1);
        ExampleDefinition ex = make_example(cfg.example, resolve_shift(cfg, delta, h, false));
        MeshModel mesh = build_mesh(example_grid(h), ex.level_set, cfg.mesh_params);
        DoFMap dofs = build_dof_map(mesh);
        LinearSystem sys;
        sys.A = assemble_stiffness(mesh, dofs, ex.problem);
        sys.b = Eigen::VectorXd::Zero(dofs.total_dofs);
        apply_dirichlet(sys, ex.problem.g, dofs);

        ConditionRow row;
        row.h = h;
        row.delta = delta;
        SpMat Aff = free_submatrix(sys.A, sys.is_constrained);
        try {
            row.cond_lagrange = estimate_condition(Aff, cfg.condition_params).cond;
        } catch (const SolveError&) {
        }
        try {
            SpMat S = hierarchical_transform(mesh, dofs, sys.A, BasisKind::HierarchicalScaled);
            SpMat Ahff = free_submatrix(SpMat(SpMat(S.transpose()) * sys.A * S),
                                        sys.is_constrained);
            row.cond_hier = estimate_condition(Ahff, cfg.condition_params).cond;
        } catch (const SolveError&) {
        }
        rows.push_back(row);
    }
    if (!cfg.out_dir.empty()) write_condition_csv(cfg.out_dir + "/condition.csv", rows);
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

void write_error_csv(const std::string& path, const std::vector<ErrorReport>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "h,delta,l2_error,energy_error,eoc_l2,eoc_energy,PN,n_l,cond_lagrange,cond_hier,"
           "cg_iters\n";
    for (const auto& r : rows)
        out << fmt(r.h) << ',' << fmt(r.delta) << ',' << fmt(r.l2_error) << ','
            << fmt(r.energy_error) << ',' << fmt_opt(r.eoc_l2) << ',' << fmt_opt(r.eoc_energy)
            << ',' << r.PN << ',' << r.n_l << ',' << fmt_opt(r.cond_lagrange) << ','
            << fmt_opt(r.cond_hier) << ',' << r.cg_iters << '\n';
    if (!out) throw std::runtime_error("write failure on " + path);
}

void write_condition_csv(const std::string& path, const std::vector<ConditionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "h,delta,cond_lagrange,cond_hier\n";
    for (const auto& r : rows)
        out << fmt(r.h) << ',' << fmt(r.delta) << ',' << fmt_opt(r.cond_lagrange) << ','
            << fmt_opt(r.cond_hier) << '\n';
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace lmfem
