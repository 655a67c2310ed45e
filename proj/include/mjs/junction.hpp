#pragma once

#include "mjs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace mjs {

/// The shared boundary curve Γ.
struct JunctionCurve {
    enum class Topology { closed, line };

    Topology topology = Topology::closed;
    double t0 = 0.0;
    double t1 = 2 * kPi;
    std::function<Vec3(double)> gamma;
    std::function<Vec3(double)> d1; ///< optional analytic derivative
    std::function<Vec3(double)> d2; ///< optional analytic second derivative

    double length_param() const { return t1 - t0; }

    Vec3 derivative(double t) const
    {
        if (d1)
            return d1(t);
        const double h = 1e-4 * length_param();
        if (topology == Topology::closed)
            return derivative_1d(gamma, t, h, -1e300, 1e300);
        return derivative_1d(gamma, t, h, t0, t1);
    }

    Vec3 second_derivative(double t) const
    {
        if (d2)
            return d2(t);
        const double h = 1e-4 * length_param();
        auto first = [this](double s) { return derivative(s); };
        if (topology == Topology::closed)
            return derivative_1d(first, t, h, -1e300, 1e300);
        return derivative_1d(first, t, h, t0, t1);
    }

    Vec3 tangent(double t) const { return derivative(t).normalized(); }

    /// Curvature vector: normal part of γ'' divided by |γ'|².
    Vec3 curvature_vector(double t) const
    {
        const Vec3 g1 = derivative(t);
        const Vec3 g2 = second_derivative(t);
        const double s2 = g1.squaredNorm();
        const Vec3 eta = g1 / std::sqrt(s2);
        return (g2 - g2.dot(eta) * eta) / s2;
    }

    double speed(double t) const { return derivative(t).norm(); }
};

/// Sample parameters along Γ with arclength weights: uniform trapezoid on
/// closed curves, Gauss-Legendre on open segments.
struct GammaRule {
    std::vector<double> t;
    std::vector<double> weight; ///< includes |γ'(t)|
};

inline GammaRule gamma_rule(const JunctionCurve& curve, int samples)
{
    GammaRule rule;
    if (curve.topology == JunctionCurve::Topology::closed) {
        const double h = curve.length_param() / samples;
        for (int k = 0; k < samples; ++k) {
            const double t = curve.t0 + k * h;
            rule.t.push_back(t);
            rule.weight.push_back(h * curve.speed(t));
        }
    } else {
        const Rule1D r = gauss_legendre(samples, curve.t0, curve.t1);
        for (std::size_t k = 0; k < r.size(); ++k) {
            rule.t.push_back(r.nodes[k]);
            rule.weight.push_back(r.weights[k] * curve.speed(r.nodes[k]));
        }
    }
    return rule;
}

/// Affine identification: along-edge coordinate of sheet i = scale * t + offset.
struct Identification {
    double scale = 1.0;
    double offset = 0.0;

    double to_edge(double t) const { return scale * t + offset; }
    double to_curve(double s) const { return (s - offset) / scale; }
};

struct MultiJunctionSurface {
    std::string label;
    std::vector<ParametricPatch> sheets;
    std::vector<double> densities;
    JunctionCurve curve;
    std::vector<Identification> ids;

    std::size_t q() const { return sheets.size(); }

    ParamPoint edge_point(std::size_t i, double t) const
    {
        return sheets[i].at(ids[i].to_edge(t), 0.0);
    }

    /// Γ parameter of the foot point of p (along the transverse coordinate line).
    double foot_parameter(std::size_t i, const ParamPoint& p) const
    {
        return ids[i].to_curve(sheets[i].along(p));
    }
};

/// Unit tangent of sheet i at Γ(t), normal to Γ, pointing into the sheet.
inline Vec3 inward_direction(const MultiJunctionSurface& m, std::size_t i, double t)
{
    const ParametricPatch& sheet = m.sheets[i];
    const Jet j = jet_at(sheet, m.edge_point(i, t));
    const Vec3 n = unit_normal_from(sheet, j.xu, j.xv);
    const Vec3 eta = m.curve.tangent(t);
    Vec3 d = n.cross(eta);
    d.normalize();
    const Vec3 x_depth = sheet.depth_sign() * (sheet.along_u() ? j.xv : j.xu);
    if (d.dot(x_depth) < 0.0)
        d = -d;
    return d;
}

/// Outer conormal τ_i at Γ(t).
inline Vec3 conormal(const MultiJunctionSurface& m, std::size_t i, double t)
{
    return -inward_direction(m, i, t);
}

inline Vec3 sheet_normal_at_gamma(const MultiJunctionSurface& m, std::size_t i, double t)
{
    const Jet j = jet_at(m.sheets[i], m.edge_point(i, t));
    return unit_normal_from(m.sheets[i], j.xu, j.xv);
}

inline Vec3 gamma_curvature(const MultiJunctionSurface& m, double t)
{
    return m.curve.curvature_vector(t);
}

/// Chooses each orientation sign so that ν_i = η × (inward direction) along Γ.
/// With balanced conormals this makes the normals balanced too.
inline void orient_consistently(MultiJunctionSurface& m)
{
    const double t = m.curve.t0 + 0.25 * m.curve.length_param();
    for (std::size_t i = 0; i < m.q(); ++i) {
        const Vec3 target = m.curve.tangent(t).cross(inward_direction(m, i, t));
        if (sheet_normal_at_gamma(m, i, t).dot(target) < 0.0)
            m.sheets[i].orientation_sign = -m.sheets[i].orientation_sign;
    }
}

/// Validates densities and that every junction edge traces Γ.
inline MultiJunctionSurface assemble(std::string label, std::vector<ParametricPatch> sheets,
                                     std::vector<double> densities, JunctionCurve curve,
                                     std::vector<Identification> ids, double tolerance = 1e-8)
{
    if (sheets.empty() || sheets.size() != densities.size() || sheets.size() != ids.size())
        throw Error(Errc::InvalidArgument, "junction_assembly", "sheet/density/identification count mismatch");
    for (double th : densities)
        if (!(th > 0.0))
            throw Error(Errc::InvalidArgument, "junction_assembly", "densities must be positive");
    MultiJunctionSurface m{std::move(label), std::move(sheets), std::move(densities), std::move(curve),
                           std::move(ids)};
    const int checks = 64;
    for (std::size_t i = 0; i < m.q(); ++i) {
        for (int k = 0; k <= checks; ++k) {
            const double t = m.curve.t0 + m.curve.length_param() * k / checks;
            const ParamPoint p = m.edge_point(i, t);
            const double gap = (m.sheets[i].immersion(p.u, p.v) - m.curve.gamma(t)).norm();
            if (gap > tolerance)
                throw Error(Errc::JunctionMismatch, "junction_assembly",
                            "sheet '" + m.sheets[i].name + "' misses Γ by " + std::to_string(gap));
        }
    }
    return m;
}

struct AngleStats {
    Eigen::MatrixXd mean;          ///< mean pairwise angle ∠(τ_i, τ_j)
    Eigen::MatrixXd max_deviation; ///< max |angle - mean| over samples
    double worst = 0.0;
};

inline AngleStats conormal_angles(const MultiJunctionSurface& m, int samples)
{
    const std::size_t q = m.q();
    const GammaRule rule = gamma_rule(m.curve, samples);
    std::vector<std::vector<Vec3>> tau(rule.t.size(), std::vector<Vec3>(q));
    for (std::size_t k = 0; k < rule.t.size(); ++k)
        for (std::size_t i = 0; i < q; ++i)
            tau[k][i] = conormal(m, i, rule.t[k]);
    AngleStats st;
    st.mean = Eigen::MatrixXd::Zero(q, q);
    st.max_deviation = Eigen::MatrixXd::Zero(q, q);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            std::vector<double> ang(rule.t.size());
            double mean = 0.0;
            for (std::size_t k = 0; k < rule.t.size(); ++k) {
                ang[k] = std::acos(std::clamp(tau[k][i].dot(tau[k][j]), -1.0, 1.0));
                mean += ang[k];
            }
            mean /= static_cast<double>(ang.size());
            double dev = 0.0;
            for (double a : ang)
                dev = std::max(dev, std::abs(a - mean));
            st.mean(i, j) = st.mean(j, i) = mean;
            st.max_deviation(i, j) = st.max_deviation(j, i) = dev;
            st.worst = std::max(st.worst, dev);
        }
    }
    return st;
}

struct DiagnosticsReport {
    std::vector<double> max_mean_curvature; ///< per sheet, over interior quadrature nodes
    double max_conormal_sum = 0.0;          ///< max_t |Σ θ_i τ_i|
    double max_weighted_curvature_sum = 0.0; ///< max_t |Σ θ_i H_Γ·τ_i|
    AngleStats angles;
    long clamp_count = 0;
    bool minimal = false;
};

inline DiagnosticsReport minimality_residual(const MultiJunctionSurface& m, const QuadratureSpec& spec = {},
                                             int samples = 256, double tolerance = 1e-8)
{
    DiagnosticsReport r;
    for (const auto& sheet : m.sheets) {
        const SheetGrid grid = build_grid(sheet, spec);
        double mx = 0.0;
        for (const auto& node : grid.nodes)
            mx = std::max(mx, node.shape.mean_curv.norm());
        r.max_mean_curvature.push_back(mx);
    }
    const GammaRule rule = gamma_rule(m.curve, samples);
    for (double t : rule.t) {
        Vec3 sum = Vec3::Zero();
        double hsum = 0.0;
        const Vec3 h = gamma_curvature(m, t);
        for (std::size_t i = 0; i < m.q(); ++i) {
            const Vec3 tau = conormal(m, i, t);
            sum += m.densities[i] * tau;
            hsum += m.densities[i] * h.dot(tau);
        }
        r.max_conormal_sum = std::max(r.max_conormal_sum, sum.norm());
        r.max_weighted_curvature_sum = std::max(r.max_weighted_curvature_sum, std::abs(hsum));
    }
    r.angles = conormal_angles(m, samples);
    r.minimal = r.max_conormal_sum <= tolerance &&
                std::all_of(r.max_mean_curvature.begin(), r.max_mean_curvature.end(),
                            [&](double h) { return h <= tolerance; });
    return r;
}

struct EquilibriumCheck {
    bool is_equilibrium = false;
    Eigen::MatrixXd angles;
    double max_deviation = 0.0;
};

inline EquilibriumCheck equilibrium_angles_check(const MultiJunctionSurface& m, int samples = 256,
                                                 double tolerance = 1e-6)
{
    const AngleStats st = conormal_angles(m, samples);
    return {st.worst <= tolerance, st.mean, st.worst};
}

/// d_Γ on sheet i: closed form when the sheet provides one, otherwise the
/// arclength of the transverse coordinate line.
inline double distance_to_gamma(const MultiJunctionSurface& m, std::size_t i, const ParamPoint& p)
{
    const ParametricPatch& sheet = m.sheets[i];
    if (sheet.distance)
        return sheet.distance(p.u, p.v);
    return meridian_arclength(sheet, p);
}

/// Shortest path from the junction edge through an (n+1)x(n+1) parameter grid
/// with 8-neighbour edges measured along the surface. Returns the value at
/// the grid node nearest to p. An upper bound that decreases under refinement
/// by grid doubling.
inline double grid_distance(const MultiJunctionSurface& m, std::size_t i, const ParamPoint& p, int n = 64)
{
    const ParametricPatch& sheet = m.sheets[i];
    const Rect& d = sheet.domain;
    const int N = n + 1;
    auto idx = [N](int a, int b) { return a * N + b; };
    std::vector<Vec3> pos(static_cast<std::size_t>(N) * N);
    auto param = [&](int a, int b) {
        return ParamPoint{d.u0 + d.width() * a / n, d.v0 + d.height() * b / n};
    };
    const Rule1D seg = gauss_legendre(3, 0.0, 1.0);
    auto edge_length = [&](const ParamPoint& a, const ParamPoint& b) {
        double len = 0.0;
        const double du = b.u - a.u, dv = b.v - a.v;
        for (std::size_t k = 0; k < seg.size(); ++k) {
            const double s = seg.nodes[k];
            const Jet j = jet_at(sheet, {a.u + s * du, a.v + s * dv});
            len += seg.weights[k] * (du * j.xu + dv * j.xv).norm();
        }
        return len;
    };
    std::vector<double> dist(static_cast<std::size_t>(N) * N, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            if (sheet.depth(param(a, b)) <= 1e-14 * sheet.depth_extent()) {
                dist[idx(a, b)] = 0.0;
                pq.push({0.0, idx(a, b)});
            }
        }
    }
    const int da[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int db[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!pq.empty()) {
        const auto [dcur, k] = pq.top();
        pq.pop();
        if (dcur > dist[k])
            continue;
        const int a = k / N, b = k % N;
        for (int e = 0; e < 8; ++e) {
            int a2 = a + da[e];
            const int b2 = b + db[e];
            if (b2 < 0 || b2 >= N)
                continue;
            ParamPoint from = param(a, b);
            ParamPoint to;
            if (a2 < 0 || a2 >= N) {
                if (!sheet.u_periodic)
                    continue;
                // wrap across the seam; measure the step on the near side
                to = {from.u + da[e] * d.width() / n, d.v0 + d.height() * b2 / n};
                a2 = (a2 + n) % n;
            } else {
                to = param(a2, b2);
            }
            const double nd = dcur + edge_length(from, to);
            const int k2 = idx(a2, b2);
            if (nd < dist[k2]) {
                dist[k2] = nd;
                pq.push({nd, k2});
            }
        }
    }
    const int a = std::clamp(static_cast<int>(std::lround((p.u - d.u0) / d.width() * n)), 0, n);
    const int b = std::clamp(static_cast<int>(std::lround((p.v - d.v0) / d.height() * n)), 0, n);
    return dist[idx(a, b)];
}

} // namespace mjs
