#pragma once

#include "mjs/core.hpp"

#include <cmath>
#include <vector>

namespace mjs {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline Rule1D gauss_legendre(int n)
{
    if (n < 1)
        throw Error(Errc::InvalidArgument, "quadrature", "Gauss-Legendre needs n >= 1");
    Rule1D rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    if (n == 1) {
        rule.weights[0] = 2.0;
        return rule;
    }
    // P_n(x) and P_n'(x) by the three-term recurrence
    auto legendre = [n](double x, double& dp) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        return p1;
    };
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            const double dx = legendre(x, dp) / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        legendre(x, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
inline Rule1D gauss_legendre(int n, double a, double b, int panels = 1)
{
    const Rule1D ref = gauss_legendre(n);
    Rule1D out;
    out.nodes.reserve(static_cast<std::size_t>(n) * panels);
    out.weights.reserve(static_cast<std::size_t>(n) * panels);
    const double step = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * step;
        const double half = 0.5 * step;
        for (int k = 0; k < n; ++k) {
            out.nodes.push_back(lo + half * (ref.nodes[k] + 1.0));
            out.weights.push_back(half * ref.weights[k]);
        }
    }
    return out;
}

/// Trapezoid rule for a periodic integrand on [a, b): n equispaced nodes.
inline Rule1D periodic_trapezoid(int n, double a, double b)
{
    if (n < 1)
        throw Error(Errc::InvalidArgument, "quadrature", "trapezoid needs n >= 1");
    Rule1D out;
    const double h = (b - a) / n;
    for (int k = 0; k < n; ++k) {
        out.nodes.push_back(a + (k + 0.5) * h);
        out.weights.push_back(h);
    }
    return out;
}

/// Tensor quadrature resolution for one patch.
struct QuadratureSpec {
    int n_u = 32;
    int n_v = 32;
    int panels_u = 1;
    int panels_v = 1;

    QuadratureSpec doubled() const { return {2 * n_u, 2 * n_v, panels_u, panels_v}; }
};

} // namespace mjs
