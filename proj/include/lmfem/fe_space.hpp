#pragma once

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "lmfem/patch_mesh.hpp"

namespace lmfem {

using SpMat = Eigen::SparseMatrix<double>;

struct NonPositiveJacobian : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BasisKind { Lagrange, HierarchicalScaled };

/// Reference coordinates of patch slot k on the unit patch (uniform 5x5
/// lattice; the physical layout enters only through the map coefficients).
Point2 reference_node(int slot);

struct BasisEval {
    std::array<double, 25> values{};
    std::array<Point2, 25> gradients{};  // with respect to reference coordinates
};

/// Values and reference gradients of the 25 patch shape functions at a point
/// of the given reference sub-element. Functions not supported on the
/// sub-element are zero. The point must lie inside the sub-element.
void eval_reference_basis(const SubElement& el, const Point2& xhat, BasisEval& out);

struct MapEval {
    Point2 x;
    double J[2][2];
    double det;
};

/// Isoparametric patch map x = sum_j nodes[j] phi_j(xhat) with jacobian.
/// Throws NonPositiveJacobian when det <= 0.
MapEval patch_map_eval(const PatchData& patch, const SubElement& el, const Point2& xhat);

/// Global continuous numbering: one degree of freedom per fine-lattice node,
/// (4n+1)^2 in total; nodes shared by neighboring patches coincide.
struct DoFMap {
    int n = 0;            // patches per side
    int per_side = 0;     // 4n+1
    int total_dofs = 0;
    std::vector<Point2> positions;
    std::vector<int> boundary_dofs;  // sorted global indices on the domain boundary

    int global_index(int px, int py, int slot) const {
        int i = slot % 5, j = slot / 5;
        return (4 * py + j) * per_side + (4 * px + i);
    }
    bool is_boundary(int g) const {
        int i = g % per_side, j = g / per_side;
        return i == 0 || i == per_side - 1 || j == 0 || j == per_side - 1;
    }
};

DoFMap build_dof_map(const MeshModel& mesh);

/// Change of basis S such that the scaled hierarchical system is S^T A S with
/// solution transported back by x = S x_hier. Vertex nodes keep their nodal
/// values; each midpoint node carries the deviation from the linear
/// interpolant of its sub-edge endpoints; columns are scaled to unit diagonal
/// of the transformed matrix. For BasisKind::Lagrange, S is the identity.
SpMat hierarchical_transform(const MeshModel& mesh, const DoFMap& dofs, const SpMat& A,
                             BasisKind kind);

/// Applies S^-1 (exact, using the two-level structure plus the stored column
/// scaling). Used by tests and by the solution transport.
Eigen::VectorXd hierarchical_solve(const SpMat& S, const Eigen::VectorXd& y);

}  // namespace lmfem
