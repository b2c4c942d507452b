#include "lmfem/error_analysis.hpp"

#include <cmath>

#include "lmfem/quadrature.hpp"

namespace lmfem {

namespace {

// shared integration loop: calls fn(element, physical point, weight*det,
// u_h value, physical gradient of u_h)
template <class F>
void integrate(const MeshModel& mesh, const DoFMap& dofs, const Eigen::VectorXd& u_h,
               int quad_degree, const F& fn) {
    const QuadratureRule tri = triangle_rule(quad_degree);
    const QuadratureRule quad = quad_rule(quad_degree + 1);
    BasisEval basis;
    const int n = mesh.grid.n;
    for (int py = 0; py < n; ++py)
        for (int px = 0; px < n; ++px) {
            const PatchData& patch = mesh.patch(px, py);
            for (const auto& el : patch.elems) {
                // quadrature points in reference-patch coordinates
                std::vector<std::pair<Point2, double>> pts;
                if (el.shape == CellShape::Tri) {
                    Point2 a = reference_node(el.slots[0]);
                    Point2 b = reference_node(el.slots[1]);
                    Point2 c = reference_node(el.slots[2]);
                    double det = std::abs(cross(b - a, c - a));
                    for (const auto& qp : tri.points)
                        pts.push_back({a + qp.p.x * (b - a) + qp.p.y * (c - a), qp.w * det});
                } else {
                    int i0 = 4, j0 = 4;
                    for (int k = 0; k < 4; ++k) {
                        i0 = std::min(i0, el.slots[k] % 5);
                        j0 = std::min(j0, el.slots[k] / 5);
                    }
                    Point2 base{0.25 * i0, 0.25 * j0};
                    for (const auto& qp : quad.points)
                        pts.push_back({base + 0.5 * qp.p, qp.w * 0.25});
                }
                for (const auto& [xhat, w] : pts) {
                    eval_reference_basis(el, xhat, basis);
                    Point2 x{0, 0}, gref{0, 0};
                    double J[2][2] = {{0, 0}, {0, 0}};
                    double uh = 0.0;
                    for (int k = 0; k < el.node_count(); ++k) {
                        int s = el.slots[k];
                        const Point2& p = patch.layout.nodes[s];
                        double coef = u_h[dofs.global_index(px, py, s)];
                        uh += coef * basis.values[s];
                        gref = gref + coef * basis.gradients[s];
                        J[0][0] += p.x * basis.gradients[s].x;
                        J[0][1] += p.x * basis.gradients[s].y;
                        J[1][0] += p.y * basis.gradients[s].x;
                        J[1][1] += p.y * basis.gradients[s].y;
                        x = x + basis.values[s] * p;
                    }
                    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                    Point2 guh{(J[1][1] * gref.x - J[1][0] * gref.y) / det,
                               (-J[0][1] * gref.x + J[0][0] * gref.y) / det};
                    fn(el, x, w * det, uh, guh);
                }
            }
        }
}

}  // namespace

double l2_error(const MeshModel& mesh, const DoFMap& dofs, const Eigen::VectorXd& u_h,
                const ProblemSpec& spec, const LevelSetField& ls, int quad_degree) {
    double acc = 0.0;
    integrate(mesh, dofs, u_h, quad_degree,
              [&](const SubElement&, const Point2& x, double wdet, double uh, const Point2&) {
                  double u = ls.value(x) < 0.0 ? spec.u1(x) : spec.u2(x);
                  acc += wdet * (u - uh) * (u - uh);
              });
    return std::sqrt(acc);
}

double modified_energy_error(const MeshModel& mesh, const DoFMap& dofs,
                             const Eigen::VectorXd& u_h, const ProblemSpec& spec,
                             int quad_degree) {
    double acc = 0.0;
    integrate(mesh, dofs, u_h, quad_degree,
              [&](const SubElement& el, const Point2& x, double wdet, double,
                  const Point2& guh) {
                  Point2 gu = el.side == Side::Omega1 ? spec.grad_u1(x) : spec.grad_u2(x);
                  Point2 d = gu - guh;
                  acc += wdet * spec.nu(el.side) * dot(d, d);
              });
    return std::sqrt(acc);
}

double compute_eoc(double e_coarse, double e_fine) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0))
        throw std::invalid_argument("EOC requires positive errors");
    return std::log2(e_coarse / e_fine);
}

}  // namespace lmfem
