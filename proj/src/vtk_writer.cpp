#include "lmfem/vtk_writer.hpp"

#include <fstream>

namespace lmfem {

void export_vtk(const MeshModel& mesh, const DoFMap& dofs, const Eigen::VectorXd& u,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.precision(17);

    out << "# vtk DataFile Version 3.0\n";
    out << "locally modified fem mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << dofs.total_dofs << " double\n";
    for (const auto& p : dofs.positions) out << p.x << " " << p.y << " 0\n";

    int ncells = 0, list_size = 0;
    const int n = mesh.grid.n;
    for (const auto& patch : mesh.patches)
        for (const auto& el : patch.elems) {
            ++ncells;
            int nn = el.shape == CellShape::Quad ? 4
                     : el.curvature == Curvature::QuadraticEdge ? 6
                                                                : 3;
            list_size += nn + 1;
        }

    out << "CELLS " << ncells << " " << list_size << "\n";
    for (int py = 0; py < n; ++py)
        for (int px = 0; px < n; ++px)
            for (const auto& el : mesh.patch(px, py).elems) {
                int nn = el.shape == CellShape::Quad ? 4
                         : el.curvature == Curvature::QuadraticEdge ? 6
                                                                    : 3;
                out << nn;
                for (int k = 0; k < nn; ++k)
                    out << " " << dofs.global_index(px, py, el.slots[k]);
                out << "\n";
            }

    out << "CELL_TYPES " << ncells << "\n";
    for (const auto& patch : mesh.patches)
        for (const auto& el : patch.elems)
            out << (el.shape == CellShape::Quad ? 9
                    : el.curvature == Curvature::QuadraticEdge ? 22
                                                               : 5)
                << "\n";

    out << "CELL_DATA " << ncells << "\n";
    out << "SCALARS side int 1\nLOOKUP_TABLE default\n";
    for (const auto& patch : mesh.patches)
        for (const auto& el : patch.elems) out << (el.side == Side::Omega1 ? 1 : 2) << "\n";
    out << "SCALARS curvature int 1\nLOOKUP_TABLE default\n";
    for (const auto& patch : mesh.patches)
        for (const auto& el : patch.elems) {
            int c = el.curvature == Curvature::Straight ? 0
                    : el.curvature == Curvature::QuadraticEdge ? 1
                                                               : 2;
            out << c << "\n";
        }

    out << "POINT_DATA " << dofs.total_dofs << "\n";
    out << "SCALARS u_h double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < dofs.total_dofs; ++k)
        out << (k < u.size() ? u[k] : 0.0) << "\n";
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace lmfem
