#include "lmfem/assembly.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "lmfem/quadrature.hpp"

namespace lmfem {

namespace {

// quadrature points of a sub-element mapped into reference-patch coordinates
struct RefQuadPoint {
    Point2 xhat;
    double w;  // includes the reference sub-element measure
};

std::vector<RefQuadPoint> subelement_points(const SubElement& el, const QuadratureRule& tri_rule,
                                            const QuadratureRule& quad_rule_) {
    std::vector<RefQuadPoint> pts;
    if (el.shape == CellShape::Tri) {
        Point2 a = reference_node(el.slots[0]);
        Point2 b = reference_node(el.slots[1]);
        Point2 c = reference_node(el.slots[2]);
        double det = cross(b - a, c - a);  // twice the reference area
        pts.reserve(tri_rule.points.size());
        for (const auto& qp : tri_rule.points)
            pts.push_back({a + qp.p.x * (b - a) + qp.p.y * (c - a), qp.w * std::abs(det)});
    } else {
        int i0 = 4, j0 = 4;
        for (int k = 0; k < 4; ++k) {
            i0 = std::min(i0, el.slots[k] % 5);
            j0 = std::min(j0, el.slots[k] / 5);
        }
        Point2 base{0.25 * i0, 0.25 * j0};
        pts.reserve(quad_rule_.points.size());
        for (const auto& qp : quad_rule_.points)
            pts.push_back({base + 0.5 * qp.p, qp.w * 0.25});
    }
    return pts;
}

const QuadratureRule& tri_rule_straight() {
    static const QuadratureRule r = triangle_rule(4);
    return r;
}
const QuadratureRule& tri_rule_curved() {
    static const QuadratureRule r = triangle_rule(5);
    return r;
}
const QuadratureRule& quad_rule_assembly() {
    static const QuadratureRule r = quad_rule(5);  // 3x3 Gauss
    return r;
}

const QuadratureRule& rule_for(const SubElement& el) {
    if (el.shape == CellShape::Quad) return quad_rule_assembly();
    return el.curvature == Curvature::QuadraticEdge ? tri_rule_curved() : tri_rule_straight();
}

}  // namespace

SpMat assemble_stiffness(const MeshModel& mesh, const DoFMap& dofs, const ProblemSpec& spec) {
    std::vector<Eigen::Triplet<double>> trip;
    const int n = mesh.grid.n;
    trip.reserve(size_t(n) * n * 330);

    Eigen::Matrix<double, 25, 25> local;
    BasisEval basis;
    for (int py = 0; py < n; ++py)
        for (int px = 0; px < n; ++px) {
            const PatchData& patch = mesh.patch(px, py);
            local.setZero();
            for (const auto& el : patch.elems) {
                const double nu = spec.nu(el.side);
                for (const auto& rq : subelement_points(el, rule_for(el), quad_rule_assembly())) {
                    eval_reference_basis(el, rq.xhat, basis);
                    double J[2][2] = {{0, 0}, {0, 0}};
                    for (int k = 0; k < el.node_count(); ++k) {
                        const Point2& p = patch.layout.nodes[el.slots[k]];
                        const Point2& g = basis.gradients[el.slots[k]];
                        J[0][0] += p.x * g.x;
                        J[0][1] += p.x * g.y;
                        J[1][0] += p.y * g.x;
                        J[1][1] += p.y * g.y;
                    }
                    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                    if (det <= 0.0)
                        throw NonPositiveJacobian("non-positive jacobian during assembly");
                    // physical gradients J^{-T} grad_ref
                    Point2 gp[9];
                    for (int k = 0; k < el.node_count(); ++k) {
                        const Point2& g = basis.gradients[el.slots[k]];
                        gp[k] = {(J[1][1] * g.x - J[1][0] * g.y) / det,
                                 (-J[0][1] * g.x + J[0][0] * g.y) / det};
                    }
                    double wdet = rq.w * det * nu;
                    for (int a = 0; a < el.node_count(); ++a)
                        for (int b = 0; b <= a; ++b) {
                            double v = wdet * dot(gp[a], gp[b]);
                            local(el.slots[a], el.slots[b]) += v;
                            if (a != b) local(el.slots[b], el.slots[a]) += v;
                        }
                }
            }
            for (int sa = 0; sa < 25; ++sa)
                for (int sb = 0; sb < 25; ++sb) {
                    if (local(sa, sb) == 0.0) continue;
                    int ga = dofs.global_index(px, py, sa);
                    int gb = dofs.global_index(px, py, sb);
                    if (ga <= gb) trip.emplace_back(ga, gb, local(sa, sb));
                }
        }

    SpMat upper(dofs.total_dofs, dofs.total_dofs);
    upper.setFromTriplets(trip.begin(), trip.end());
    SpMat A;
    A = upper.selfadjointView<Eigen::Upper>();
    return A;
}

Eigen::VectorXd assemble_load(const MeshModel& mesh, const DoFMap& dofs, const ProblemSpec& spec) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs.total_dofs);
    BasisEval basis;
    const int n = mesh.grid.n;
    for (int py = 0; py < n; ++py)
        for (int px = 0; px < n; ++px) {
            const PatchData& patch = mesh.patch(px, py);
            for (const auto& el : patch.elems) {
                for (const auto& rq : subelement_points(el, rule_for(el), quad_rule_assembly())) {
                    eval_reference_basis(el, rq.xhat, basis);
                    Point2 x{0, 0};
                    double J[2][2] = {{0, 0}, {0, 0}};
                    for (int k = 0; k < el.node_count(); ++k) {
                        const Point2& p = patch.layout.nodes[el.slots[k]];
                        const Point2& g = basis.gradients[el.slots[k]];
                        x = x + basis.values[el.slots[k]] * p;
                        J[0][0] += p.x * g.x;
                        J[0][1] += p.x * g.y;
                        J[1][0] += p.y * g.x;
                        J[1][1] += p.y * g.y;
                    }
                    double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                    double wf = rq.w * det * spec.f(el.side, x);
                    for (int k = 0; k < el.node_count(); ++k)
                        b[dofs.global_index(px, py, el.slots[k])] +=
                            wf * basis.values[el.slots[k]];
                }
            }
        }
    return b;
}

void apply_dirichlet(LinearSystem& sys, const std::function<double(const Point2&)>& g,
                     const DoFMap& dofs) {
    const int N = int(sys.A.rows());
    sys.is_constrained.assign(N, 0);
    Eigen::VectorXd gval = Eigen::VectorXd::Zero(N);
    for (int bd : dofs.boundary_dofs) {
        sys.is_constrained[bd] = 1;
        gval[bd] = g(dofs.positions[bd]);
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(sys.A.nonZeros());
    for (int col = 0; col < sys.A.outerSize(); ++col)
        for (SpMat::InnerIterator it(sys.A, col); it; ++it) {
            int r = int(it.row()), c = int(it.col());
            if (sys.is_constrained[r] && r == c) {
                trip.emplace_back(r, c, 1.0);
            } else if (!sys.is_constrained[r] && sys.is_constrained[c]) {
                sys.b[r] -= it.value() * gval[c];
            } else if (!sys.is_constrained[r] && !sys.is_constrained[c]) {
                trip.emplace_back(r, c, it.value());
            }
        }
    SpMat Ac(N, N);
    Ac.setFromTriplets(trip.begin(), trip.end());
    sys.A.swap(Ac);
    for (int bd : dofs.boundary_dofs) sys.b[bd] = gval[bd];
}

CgResult cg_solve(const SpMat& A, const Eigen::VectorXd& b, double tol, int max_iter,
                  const SpMat* basis_transform, std::vector<double>* energy_trace) {
    if (basis_transform) {
        const SpMat& S = *basis_transform;
        SpMat At = SpMat(S.transpose()) * A * S;
        Eigen::VectorXd bt = S.transpose() * b;
        CgResult res = cg_solve(At, bt, tol, max_iter, nullptr, energy_trace);
        res.x = S * res.x;
        return res;
    }

    const int N = int(A.rows());
    CgResult res;
    res.x = Eigen::VectorXd::Zero(N);
    double bnorm = b.norm();
    if (bnorm == 0.0) return res;

    Eigen::VectorXd dinv = A.diagonal();
    for (int k = 0; k < N; ++k) dinv[k] = dinv[k] != 0.0 ? 1.0 / dinv[k] : 1.0;

    Eigen::VectorXd r = b;
    Eigen::VectorXd z = dinv.asDiagonal() * r;
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd q = A * p;
        double pq = p.dot(q);
        if (pq <= 0.0) throw SolveError("matrix not positive definite in CG", r.norm() / bnorm, it);
        double alpha = rz / pq;
        res.x += alpha * p;
        r -= alpha * q;
        res.iterations = it;
        if (energy_trace)
            energy_trace->push_back(0.5 * res.x.dot(A * res.x) - b.dot(res.x));
        if (r.norm() <= tol * bnorm) return res;
        z = dinv.asDiagonal() * r;
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolveError("CG reached the iteration limit", r.norm() / bnorm, max_iter);
}

ConditionEstimate estimate_condition(const SpMat& A, const ConditionParams& params) {
    const int N = int(A.rows());
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto random_vec = [&] {
        Eigen::VectorXd v(N);
        for (int k = 0; k < N; ++k) v[k] = uni(rng);
        return v;
    };

    ConditionEstimate est;

    Eigen::VectorXd v = random_vec();
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < params.max_outer; ++it) {
        Eigen::VectorXd w = A * v;
        double lam_new = v.dot(w);
        v = w.normalized();
        if (it > 0 && std::abs(lam_new - lam) <= params.tol * std::abs(lam_new)) {
            lam = lam_new;
            break;
        }
        lam = lam_new;
    }
    est.lambda_max = lam;

    Eigen::VectorXd u = random_vec();
    u.normalize();
    double mu = 0.0;
    for (int it = 0; it < params.max_inverse; ++it) {
        u = cg_solve(A, u, params.cg_tol, params.cg_max_iter).x;
        u.normalize();
        double mu_new = u.dot(A * u);
        if (it > 0 && std::abs(mu_new - mu) <= params.tol * std::abs(mu_new)) {
            mu = mu_new;
            break;
        }
        mu = mu_new;
    }
    est.lambda_min = mu;
    est.cond = est.lambda_max / est.lambda_min;
    return est;
}

SpMat free_submatrix(const SpMat& A, const std::vector<char>& is_constrained) {
    const int N = int(A.rows());
    std::vector<int> remap(N, -1);
    int nf = 0;
    for (int k = 0; k < N; ++k)
        if (!is_constrained[k]) remap[k] = nf++;
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it) {
            int r = remap[it.row()], c = remap[it.col()];
            if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
        }
    SpMat F(nf, nf);
    F.setFromTriplets(trip.begin(), trip.end());
    return F;
}

void write_matrix_market(const SpMat& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    int nnz_lower = 0;
    for (int col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            if (it.row() >= it.col()) ++nnz_lower;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << A.rows() << " " << A.cols() << " " << nnz_lower << "\n";
    out.precision(17);
    for (int col = 0; col < A.outerSize(); ++col)
        for (SpMat::InnerIterator it(A, col); it; ++it)
            if (it.row() >= it.col())
                out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace lmfem
