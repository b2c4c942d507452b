#pragma once

#include <string>

#include <Eigen/Dense>

#include "lmfem/fe_space.hpp"
#include "lmfem/patch_mesh.hpp"

namespace lmfem {

/// Legacy ASCII VTK unstructured grid: straight triangles as cell type 5,
/// curved triangles as quadratic-triangle type 22, quadrilaterals as type 9.
/// Cell data "side" (1/2) and "curvature" (0 straight, 1 quadratic,
/// 2 fallback), point data "u_h".
void export_vtk(const MeshModel& mesh, const DoFMap& dofs, const Eigen::VectorXd& u,
                const std::string& path);

}  // namespace lmfem
