#pragma once

#include <vector>

#include "lmfem/geometry.hpp"

namespace lmfem {

struct QuadPoint {
    Point2 p;
    double w;
};

/// Quadrature rule on a reference element: the unit triangle
/// {(x,y): x,y >= 0, x+y <= 1} or the unit square [0,1]^2.
/// Weights sum to the reference element area and are all positive.
struct QuadratureRule {
    std::vector<QuadPoint> points;
    int degree = 0;  // polynomial exactness
};

/// Gauss-Legendre nodes/weights on [0,1], exact to degree 2n-1.
std::vector<std::pair<double, double>> gauss_legendre(int n);

/// Rule on the unit triangle exact to at least the requested degree.
/// Degrees 4 and 5 use the classic 6- and 7-point symmetric rules; higher
/// degrees fall back to a collapsed tensor Gauss rule.
QuadratureRule triangle_rule(int degree);

/// Tensor Gauss rule on the unit square exact to at least the given degree.
QuadratureRule quad_rule(int degree);

}  // namespace lmfem
