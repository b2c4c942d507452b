#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>

#include "lmfem/fe_space.hpp"
#include "lmfem/patch_mesh.hpp"

namespace lmfem {

/// Interface problem data: diffusion per subdomain, smooth branch extensions
/// of the source and the exact solution, Dirichlet boundary data.
struct ProblemSpec {
    double nu1 = 1.0;  // on Omega_h^1 (gamma < 0)
    double nu2 = 1.0;  // on Omega_h^2
    std::function<double(const Point2&)> f1, f2;
    std::function<double(const Point2&)> g;
    std::function<double(const Point2&)> u1, u2;          // exact branches (errors)
    std::function<Point2(const Point2&)> grad_u1, grad_u2;

    double nu(Side s) const { return s == Side::Omega1 ? nu1 : nu2; }
    double f(Side s, const Point2& p) const { return s == Side::Omega1 ? f1(p) : f2(p); }
};

struct LinearSystem {
    SpMat A;
    Eigen::VectorXd b;
    std::vector<char> is_constrained;  // per dof
};

struct SolveError : std::runtime_error {
    double residual;
    int iterations;
    SolveError(const std::string& msg, double res, int it)
        : std::runtime_error(msg), residual(res), iterations(it) {}
};

/// A[i][j] = sum over sub-elements of nu_side * int grad(phi_j).grad(phi_i),
/// gradients mapped through the isoparametric jacobian. Quadrature: degree 4
/// on straight triangles, degree 5 on curved ones, 3x3 Gauss on quads.
/// Assembled on the upper triangle and mirrored.
SpMat assemble_stiffness(const MeshModel& mesh, const DoFMap& dofs, const ProblemSpec& spec);

/// b[i] = sum over sub-elements of int f_side * phi_i.
Eigen::VectorXd assemble_load(const MeshModel& mesh, const DoFMap& dofs, const ProblemSpec& spec);

/// Symmetric elimination of the Dirichlet constraints: boundary rows and
/// columns are replaced by the identity and known values move to the
/// right-hand side.
void apply_dirichlet(LinearSystem& sys, const std::function<double(const Point2&)>& g,
                     const DoFMap& dofs);

struct CgResult {
    Eigen::VectorXd x;
    int iterations = 0;
};

/// Jacobi-preconditioned conjugate gradients; stops when the true residual
/// satisfies ||b - Ax|| <= tol * ||b||. When a basis transform S is given,
/// solves (S^T A S) y = S^T b and returns x = S y. The optional trace
/// records the energy 1/2 x^T A x - b^T x once per iteration.
CgResult cg_solve(const SpMat& A, const Eigen::VectorXd& b, double tol, int max_iter,
                  const SpMat* basis_transform = nullptr,
                  std::vector<double>* energy_trace = nullptr);

struct ConditionEstimate {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double cond = 0.0;
};

struct ConditionParams {
    double tol = 1e-6;       // relative change of the eigenvalue estimates
    int max_outer = 20000;   // power-iteration steps
    int max_inverse = 200;   // inverse-iteration steps
    double cg_tol = 1e-8;
    int cg_max_iter = 200000;
};

/// lambda_max by power iteration, lambda_min by inverse iteration with
/// cg_solve as the inner solver. Inner-solver failures propagate.
ConditionEstimate estimate_condition(const SpMat& A, const ConditionParams& params = {});

/// Extracts the submatrix of unconstrained dofs (condition studies run on
/// the free-free block).
SpMat free_submatrix(const SpMat& A, const std::vector<char>& is_constrained);

/// MatrixMarket coordinate output, symmetric (lower triangle stored).
void write_matrix_market(const SpMat& A, const std::string& path);

}  // namespace lmfem
