#include "lmfem/quadrature.hpp"

#include <cmath>

namespace lmfem {

// Nodes and weights for Gauss-Legendre quadrature on [0,1], computed by
// Newton iteration on the Legendre polynomial.
std::vector<std::pair<double, double>> gauss_legendre(int n) {
    std::vector<std::pair<double, double>> pw(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double r = std::cos(pi * (4 * i + 3) / (4 * n + 2));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p2 = 0.0, p3 = 1.0;
            for (int j = 0; j < n; ++j) {
                double p1 = p2;
                p2 = p3;
                p3 = ((2 * j + 1) * r * p2 - j * p1) / (j + 1);
            }
            dp = n * (r * p3 - p2) / (r * r - 1.0);
            double dr = p3 / dp;
            r -= dr;
            if (std::abs(dr) < 1e-16 * (1.0 + std::abs(r))) break;
        }
        double w = 1.0 / ((1.0 - r * r) * dp * dp);
        pw[i] = {0.5 - r / 2.0, w};
        pw[n - 1 - i] = {0.5 + r / 2.0, w};
    }
    return pw;
}

namespace {

void push_sym3(QuadratureRule& rule, double l1, double l23, double w) {
    // w given relative to unit total; reference triangle area is 1/2
    rule.points.push_back({{l23, l23}, 0.5 * w});
    rule.points.push_back({{l1, l23}, 0.5 * w});
    rule.points.push_back({{l23, l1}, 0.5 * w});
}

// Collapsed (Duffy) tensor Gauss rule on the unit triangle.
// For total degree d the collapsed integrand has 1D degree d+1, so an
// n-point rule with 2n-1 >= d+1 suffices.
QuadratureRule duffy_triangle(int degree) {
    int n = (degree + 3) / 2;
    auto gl = gauss_legendre(n);
    QuadratureRule rule;
    rule.degree = degree;
    for (auto [xi, wx] : gl)
        for (auto [eta, we] : gl)
            rule.points.push_back({{xi * (1.0 - eta), eta}, wx * we * (1.0 - eta)});
    return rule;
}

}  // namespace

QuadratureRule triangle_rule(int degree) {
    QuadratureRule rule;
    if (degree <= 4) {
        rule.degree = 4;
        push_sym3(rule, 0.108103018168070, 0.445948490915965, 0.223381589678011);
        push_sym3(rule, 0.816847572980459, 0.091576213509771, 0.109951743655322);
        return rule;
    }
    if (degree <= 5) {
        rule.degree = 5;
        rule.points.push_back({{1.0 / 3.0, 1.0 / 3.0}, 0.5 * 0.225});
        push_sym3(rule, 0.059715871789770, 0.470142064105115, 0.132394152788506);
        push_sym3(rule, 0.797426985353087, 0.101286507323456, 0.125939180544827);
        return rule;
    }
    return duffy_triangle(degree);
}

QuadratureRule quad_rule(int degree) {
    int n = degree / 2 + 1;
    auto gl = gauss_legendre(n);
    QuadratureRule rule;
    rule.degree = 2 * n - 1;
    for (auto [x, wx] : gl)
        for (auto [y, wy] : gl) rule.points.push_back({{x, y}, wx * wy});
    return rule;
}

}  // namespace lmfem
