#include "lmfem/fe_space.hpp"

#include <cmath>

namespace lmfem {

Point2 reference_node(int slot) { return {0.25 * (slot % 5), 0.25 * (slot / 5)}; }

namespace {

// 1D quadratic Lagrange basis on nodes {t0, t0+d, t0+2d}
inline void lagrange1d(double t0, double d, double t, double v[3], double dv[3]) {
    double a = t - t0, b = t - (t0 + d), c = t - (t0 + 2.0 * d);
    double inv = 1.0 / (d * d);
    v[0] = 0.5 * b * c * inv;
    v[1] = -a * c * inv;
    v[2] = 0.5 * a * b * inv;
    dv[0] = 0.5 * (b + c) * inv;
    dv[1] = -(a + c) * inv;
    dv[2] = 0.5 * (a + b) * inv;
}

}  // namespace

void eval_reference_basis(const SubElement& el, const Point2& xhat, BasisEval& out) {
    out.values.fill(0.0);
    out.gradients.fill(Point2{0.0, 0.0});

    if (el.shape == CellShape::Tri) {
        Point2 a = reference_node(el.slots[0]);
        Point2 b = reference_node(el.slots[1]);
        Point2 c = reference_node(el.slots[2]);
        double m11 = b.x - a.x, m12 = c.x - a.x, m21 = b.y - a.y, m22 = c.y - a.y;
        double det = m11 * m22 - m12 * m21;
        double dx = xhat.x - a.x, dy = xhat.y - a.y;
        double l1 = (m22 * dx - m12 * dy) / det;
        double l2 = (-m21 * dx + m11 * dy) / det;
        double l0 = 1.0 - l1 - l2;
        Point2 g1{m22 / det, -m12 / det};
        Point2 g2{-m21 / det, m11 / det};
        Point2 g0 = (-1.0) * (g1 + g2);

        const double vals[6] = {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0),
                                l2 * (2.0 * l2 - 1.0), 4.0 * l0 * l1, 4.0 * l1 * l2,
                                4.0 * l2 * l0};
        const Point2 grads[6] = {(4.0 * l0 - 1.0) * g0,
                                 (4.0 * l1 - 1.0) * g1,
                                 (4.0 * l2 - 1.0) * g2,
                                 4.0 * (l1 * g0 + l0 * g1),
                                 4.0 * (l2 * g1 + l1 * g2),
                                 4.0 * (l0 * g2 + l2 * g0)};
        for (int k = 0; k < 6; ++k) {
            out.values[el.slots[k]] = vals[k];
            out.gradients[el.slots[k]] = grads[k];
        }
        return;
    }

    // tensor-product biquadratic on a sub-quadrilateral
    int i0 = 4, j0 = 4;
    for (int k = 0; k < 4; ++k) {
        i0 = std::min(i0, el.slots[k] % 5);
        j0 = std::min(j0, el.slots[k] / 5);
    }
    double vx[3], dvx[3], vy[3], dvy[3];
    lagrange1d(0.25 * i0, 0.25, xhat.x, vx, dvx);
    lagrange1d(0.25 * j0, 0.25, xhat.y, vy, dvy);
    for (int dj = 0; dj < 3; ++dj)
        for (int di = 0; di < 3; ++di) {
            int s = (j0 + dj) * 5 + (i0 + di);
            out.values[s] = vx[di] * vy[dj];
            out.gradients[s] = {dvx[di] * vy[dj], vx[di] * dvy[dj]};
        }
}

MapEval patch_map_eval(const PatchData& patch, const SubElement& el, const Point2& xhat) {
    BasisEval basis;
    eval_reference_basis(el, xhat, basis);
    MapEval me{};
    me.J[0][0] = me.J[0][1] = me.J[1][0] = me.J[1][1] = 0.0;
    for (int k = 0; k < el.node_count(); ++k) {
        int s = el.slots[k];
        const Point2& p = patch.layout.nodes[s];
        me.x.x += p.x * basis.values[s];
        me.x.y += p.y * basis.values[s];
        me.J[0][0] += p.x * basis.gradients[s].x;
        me.J[0][1] += p.x * basis.gradients[s].y;
        me.J[1][0] += p.y * basis.gradients[s].x;
        me.J[1][1] += p.y * basis.gradients[s].y;
    }
    me.det = me.J[0][0] * me.J[1][1] - me.J[0][1] * me.J[1][0];
    if (me.det <= 0.0) throw NonPositiveJacobian("non-positive jacobian in patch map");
    return me;
}

DoFMap build_dof_map(const MeshModel& mesh) {
    DoFMap dm;
    dm.n = mesh.grid.n;
    dm.per_side = 4 * dm.n + 1;
    dm.total_dofs = dm.per_side * dm.per_side;
    dm.positions.assign(dm.total_dofs, Point2{});
    for (int py = 0; py < dm.n; ++py)
        for (int px = 0; px < dm.n; ++px) {
            const auto& nodes = mesh.patch(px, py).layout.nodes;
            for (int s = 0; s < 25; ++s) dm.positions[dm.global_index(px, py, s)] = nodes[s];
        }
    for (int g = 0; g < dm.total_dofs; ++g)
        if (dm.is_boundary(g)) dm.boundary_dofs.push_back(g);
    return dm;
}

SpMat hierarchical_transform(const MeshModel& mesh, const DoFMap& dofs, const SpMat& A,
                             BasisKind kind) {
    const int N = dofs.total_dofs;
    SpMat S(N, N);
    if (kind == BasisKind::Lagrange) {
        S.setIdentity();
        return S;
    }

    // parents of each midpoint node: the endpoints of its sub-edge
    std::vector<std::array<int, 2>> parents(N, {-1, -1});
    for (int py = 0; py < dofs.n; ++py)
        for (int px = 0; px < dofs.n; ++px) {
            const auto& patch = mesh.patch(px, py);
            auto g = [&](int s) { return dofs.global_index(px, py, s); };
            for (const auto& el : patch.elems) {
                if (el.shape == CellShape::Tri) {
                    for (int k = 0; k < 3; ++k)
                        parents[g(el.slots[3 + k])] = {g(el.slots[k]), g(el.slots[(k + 1) % 3])};
                } else {
                    for (int k = 0; k < 4; ++k)
                        parents[g(el.slots[4 + k])] = {g(el.slots[k]), g(el.slots[(k + 1) % 4])};
                    parents[g(el.slots[8])] = {g(el.slots[0]), g(el.slots[2])};
                }
            }
        }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * N);
    for (int m = 0; m < N; ++m) {
        trip.emplace_back(m, m, 1.0);
        if (parents[m][0] >= 0) {
            trip.emplace_back(m, parents[m][0], 0.5);
            trip.emplace_back(m, parents[m][1], 0.5);
        }
    }
    SpMat H(N, N);
    H.setFromTriplets(trip.begin(), trip.end());

    SpMat Ah = SpMat(H.transpose()) * A * H;
    Eigen::VectorXd d = Ah.diagonal();
    for (int k = 0; k < N; ++k) {
        if (!(d[k] > 0.0))
            throw std::runtime_error("non-positive diagonal in hierarchical scaling");
        d[k] = 1.0 / std::sqrt(d[k]);
    }
    S = H * d.asDiagonal();
    return S;
}

Eigen::VectorXd hierarchical_solve(const SpMat& S, const Eigen::VectorXd& y) {
    // S = (I + P) * D^{-1/2} with P strictly two-level (parents are kept
    // nodes), so S^{-1} = D^{1/2} (I - P).
    const int N = int(S.rows());
    Eigen::VectorXd diag(N);
    for (int k = 0; k < N; ++k) diag[k] = S.coeff(k, k);
    Eigen::VectorXd t = y;
    for (int col = 0; col < S.outerSize(); ++col)
        for (SpMat::InnerIterator it(S, col); it; ++it) {
            if (it.row() == it.col()) continue;
            // P[row][col] = S[row][col] / S[col][col]
            t[it.row()] -= it.value() / diag[it.col()] * y[it.col()];
        }
    Eigen::VectorXd x(N);
    for (int k = 0; k < N; ++k) x[k] = t[k] / diag[k];
    return x;
}

}  // namespace lmfem
