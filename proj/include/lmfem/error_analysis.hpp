#pragma once

#include <optional>

#include "lmfem/assembly.hpp"

namespace lmfem {

struct ErrorReport {
    double h = 0.0;  // mesh size (node spacing, h_P / 4)
    double delta = 0.0;
    double l2_error = 0.0;
    double energy_error = 0.0;
    std::optional<double> eoc_l2;
    std::optional<double> eoc_energy;
    int PN = 0;
    int n_l = 0;
    std::optional<double> cond_lagrange;
    std::optional<double> cond_hier;
    int cg_iters = 0;
};

/// ||u - u_h||_L2 with the exact solution evaluated branch-wise by the sign
/// of the continuous level set at each quadrature point.
double l2_error(const MeshModel& mesh, const DoFMap& dofs, const Eigen::VectorXd& u_h,
                const ProblemSpec& spec, const LevelSetField& ls, int quad_degree = 8);

/// Modified energy norm ||nu_h^{1/2} grad(pi(u) - u_h)||: the branch is
/// selected by the sub-element's discrete side, realizing nu_h and the
/// smooth extension of the exact solution.
double modified_energy_error(const MeshModel& mesh, const DoFMap& dofs,
                             const Eigen::VectorXd& u_h, const ProblemSpec& spec,
                             int quad_degree = 8);

/// Estimated order of convergence between two meshes with size ratio 2.
double compute_eoc(double e_coarse, double e_fine);

}  // namespace lmfem
