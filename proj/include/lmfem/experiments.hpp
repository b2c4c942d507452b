#pragma once

#include <string>
#include <vector>

#include "lmfem/error_analysis.hpp"

namespace lmfem {

enum class ExampleKind { Parabola, Circle };

/// A complete benchmark instance: level set plus manufactured problem data.
/// `shift` is the absolute horizontal displacement of the interface.
struct ExampleDefinition {
    LevelSetField level_set;
    ProblemSpec problem;
};

ExampleDefinition make_example(ExampleKind kind, double shift);

/// How the dimensionless delta translates into the level-set shift.
/// MeshH: shift = delta * h (h of the current run). Fixed64: shift =
/// delta / 64, the fixed placement used for the circle convergence tables.
/// Auto resolves to MeshH for the parabola and Fixed64 for circle
/// convergence runs; sweeps always use MeshH.
enum class DeltaUnit { Auto, MeshH, Fixed64 };

struct ExperimentConfig {
    ExampleKind example = ExampleKind::Parabola;
    std::vector<double> h_list;  // node spacing; the domain (-2,2)^2 uses 1/h patches per side
    double delta = 0.0;
    DeltaUnit delta_unit = DeltaUnit::Auto;
    BasisKind basis = BasisKind::Lagrange;
    double solver_tol = 1e-10;
    int solver_max_iter = 400000;
    bool condition = false;
    ConditionParams condition_params;
    double delta_start = 0.0, delta_end = 1.0;
    int delta_steps = 11;
    MeshParams mesh_params;
    std::string out_dir;
    bool write_vtk = false;
    bool write_matrix = false;
};

/// Grid for the (-2,2)^2 examples at node spacing h (1/h must be integral).
PatchGrid example_grid(double h);

struct SolveOutput {
    MeshModel mesh;
    DoFMap dofs;
    Eigen::VectorXd u;
    int cg_iters = 0;
};

/// Builds, assembles and solves one configuration.
SolveOutput solve_one(const ExampleDefinition& ex, double h, const ExperimentConfig& cfg);

/// Convergence study over cfg.h_list at fixed delta; EOC between consecutive
/// rows. Writes <out_dir>/convergence.csv (plus optional VTK / matrix dumps)
/// when out_dir is set.
std::vector<ErrorReport> run_example(const ExperimentConfig& cfg);

/// One run per delta step per h; writes <out_dir>/sweep.csv when out_dir set.
std::vector<ErrorReport> sweep_delta(const ExperimentConfig& cfg);

struct ConditionRow {
    double h = 0.0;
    double delta = 0.0;
    std::optional<double> cond_lagrange;
    std::optional<double> cond_hier;
};

/// Condition estimates for both bases over the delta sweep at h = h_list[0];
/// writes <out_dir>/condition.csv when out_dir is set. Rows whose inner
/// solver exceeds its budget are marked unavailable.
std::vector<ConditionRow> condition_study(const ExperimentConfig& cfg);

void write_error_csv(const std::string& path, const std::vector<ErrorReport>& rows);
void write_condition_csv(const std::string& path, const std::vector<ConditionRow>& rows);

}  // namespace lmfem
