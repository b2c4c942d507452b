#include <CLI11.hpp>
#include <fstream>
#include <sstream>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "lmfem/experiments.hpp"
#include "lmfem/vtk_writer.hpp"

namespace {

using namespace lmfem;

double parse_h(const std::string& tok) {
    auto slash = tok.find('/');
    if (slash == std::string::npos) return std::stod(tok);
    return std::stod(tok.substr(0, slash)) / std::stod(tok.substr(slash + 1));
}

struct CliOptions {
    std::string example = "parabola";
    std::vector<std::string> h_tokens;
    double delta = 0.0;
    std::string delta_range;
    std::string basis = "lagrange";
    double tol = 1e-10;
    std::string out = "out";
    bool vtk = false;
    bool matrix = false;
    std::string delta_unit = "auto";
    std::string config_file;
};

// plain-text key=value configuration; command-line flags take precedence
void apply_config_file(CLI::App* cmd, CliOptions& o) {
    if (o.config_file.empty()) return;
    std::ifstream in(o.config_file);
    if (!in) throw CLI::ValidationError("cannot open config file " + o.config_file);
    auto seen = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "example" && !seen("--example")) o.example = val;
        else if (key == "h" && !seen("--h")) {
            o.h_tokens.clear();
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) o.h_tokens.push_back(tok);
        } else if (key == "delta" && !seen("--delta")) o.delta = std::stod(val);
        else if (key == "delta-range" && !seen("--delta-range")) o.delta_range = val;
        else if (key == "basis" && !seen("--basis")) o.basis = val;
        else if (key == "tol" && !seen("--tol")) o.tol = std::stod(val);
        else if (key == "out" && !seen("--out")) o.out = val;
        else if (key == "delta-unit" && !seen("--delta-unit")) o.delta_unit = val;
        else if (key == "vtk" && !seen("--vtk")) o.vtk = val == "true" || val == "1";
        else if (key == "matrix" && !seen("--matrix")) o.matrix = val == "true" || val == "1";
        else if (key != "example" && key != "h" && key != "delta" && key != "delta-range" &&
                 key != "basis" && key != "tol" && key != "out" && key != "delta-unit" &&
                 key != "vtk" && key != "matrix")
            throw CLI::ValidationError("unknown config key: " + key);
    }
}

ExperimentConfig to_config(const CliOptions& o) {
    ExperimentConfig cfg;
    if (o.example == "parabola")
        cfg.example = ExampleKind::Parabola;
    else if (o.example == "circle")
        cfg.example = ExampleKind::Circle;
    else
        throw CLI::ValidationError("--example must be parabola or circle");

    for (const auto& tok : o.h_tokens) cfg.h_list.push_back(parse_h(tok));
    if (cfg.h_list.empty()) cfg.h_list = {1.0 / 32, 1.0 / 64, 1.0 / 128};

    cfg.delta = o.delta;
    if (!o.delta_range.empty()) {
        double a, b;
        int steps;
        if (std::sscanf(o.delta_range.c_str(), "%lf:%lf:%d", &a, &b, &steps) != 3)
            throw CLI::ValidationError("--delta-range expects a:b:n");
        cfg.delta_start = a;
        cfg.delta_end = b;
        cfg.delta_steps = steps;
    }
    if (o.basis == "hierarchical")
        cfg.basis = BasisKind::HierarchicalScaled;
    else if (o.basis != "lagrange")
        throw CLI::ValidationError("--basis must be lagrange or hierarchical");
    if (o.delta_unit == "h")
        cfg.delta_unit = DeltaUnit::MeshH;
    else if (o.delta_unit == "1/64")
        cfg.delta_unit = DeltaUnit::Fixed64;
    else if (o.delta_unit != "auto")
        throw CLI::ValidationError("--delta-unit must be auto, h or 1/64");

    cfg.solver_tol = o.tol;
    cfg.out_dir = o.out;
    cfg.write_vtk = o.vtk;
    cfg.write_matrix = o.matrix;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

void add_common(CLI::App* cmd, CliOptions& o) {
    cmd->set_help_flag("--help", "print help");
    cmd->add_option("--example", o.example, "parabola or circle");
    cmd->add_option("--h", o.h_tokens, "mesh sizes, e.g. 1/32,1/64")->delimiter(',');
    cmd->add_option("--delta", o.delta, "interface displacement parameter in [0,1]");
    cmd->add_option("--delta-range", o.delta_range, "sweep range a:b:n");
    cmd->add_option("--basis", o.basis, "lagrange or hierarchical");
    cmd->add_option("--tol", o.tol, "CG relative residual tolerance");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--delta-unit", o.delta_unit, "delta scaling: auto, h or 1/64");
    cmd->add_flag("--vtk", o.vtk, "write VTK mesh/solution files");
    cmd->add_flag("--matrix", o.matrix, "write MatrixMarket stiffness dumps");
    cmd->add_option("--config", o.config_file, "plain-text key=value configuration file");
}

void print_rows(const std::vector<ErrorReport>& rows) {
    std::printf("%10s %8s %12s %8s %12s %8s %6s %6s %8s\n", "h", "delta", "l2_error", "eoc",
                "energy", "eoc", "PN", "n_l", "cg_iters");
    for (const auto& r : rows)
        std::printf("%10.6g %8.4g %12.4e %8s %12.4e %8s %6d %6d %8d\n", r.h, r.delta, r.l2_error,
                    r.eoc_l2 ? std::to_string(*r.eoc_l2).substr(0, 5).c_str() : "-",
                    r.energy_error,
                    r.eoc_energy ? std::to_string(*r.eoc_energy).substr(0, 5).c_str() : "-", r.PN,
                    r.n_l, r.cg_iters);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locally modified second-order finite elements for interface problems"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    CliOptions o;
    auto* conv = app.add_subcommand("convergence", "mesh refinement study at fixed delta");
    add_common(conv, o);
    auto* sweep = app.add_subcommand("sweep", "error study over a delta range");
    add_common(sweep, o);
    auto* cond = app.add_subcommand("condition", "condition numbers for both bases over delta");
    add_common(cond, o);
    auto* meshcmd = app.add_subcommand("mesh", "build one mesh and export it as VTK");
    add_common(meshcmd, o);

    CLI11_PARSE(app, argc, argv);

    try {
        for (CLI::App* cmd : {conv, sweep, cond, meshcmd})
            if (cmd->parsed()) apply_config_file(cmd, o);
        if (conv->parsed()) {
            auto rows = run_example(to_config(o));
            print_rows(rows);
        } else if (sweep->parsed()) {
            ExperimentConfig cfg = to_config(o);
            if (o.delta_range.empty()) {
                cfg.delta_start = 0.0;
                cfg.delta_end = 1.0;
                cfg.delta_steps = 11;
            }
            auto rows = sweep_delta(cfg);
            print_rows(rows);
        } else if (cond->parsed()) {
            ExperimentConfig cfg = to_config(o);
            if (cfg.h_list.size() > 1) cfg.h_list.resize(1);
            if (o.h_tokens.empty()) cfg.h_list = {1.0 / 16};
            if (o.delta_range.empty()) {
                cfg.delta_start = 0.0;
                cfg.delta_end = 1.0;
                cfg.delta_steps = 51;
            }
            auto rows = condition_study(cfg);
            std::printf("%10s %8s %14s %14s\n", "h", "delta", "cond_lagrange", "cond_hier");
            for (const auto& r : rows)
                std::printf("%10.6g %8.4g %14.6e %14.6e\n", r.h, r.delta,
                            r.cond_lagrange.value_or(-1.0), r.cond_hier.value_or(-1.0));
        } else if (meshcmd->parsed()) {
            ExperimentConfig cfg = to_config(o);
            double h = cfg.h_list.at(0);
            double shift = cfg.example == ExampleKind::Circle && cfg.delta_unit != DeltaUnit::MeshH
                               ? cfg.delta / 64.0
                               : cfg.delta * h;
            ExampleDefinition ex = make_example(cfg.example, shift);
            SolveOutput so = solve_one(ex, h, cfg);
            std::string path = cfg.out_dir + "/mesh.vtk";
            export_vtk(so.mesh, so.dofs, so.u, path);
            std::printf("PN=%d n_l=%d dofs=%d -> %s\n", so.mesh.PN, so.mesh.n_l,
                        so.dofs.total_dofs, path.c_str());
        }
    } catch (const lmfem::AssumptionViolation& e) {
        std::cerr << "assumption violation: " << e.what()
                  << "\nThe interface is not resolved at this mesh size; refine h.\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
