#pragma once

#include "mjs/core.hpp"
#include "mjs/quadrature.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mjs {

/// Immersion value and its coordinate derivatives up to order two.
struct Jet {
    Vec3 x = Vec3::Zero();
    Vec3 xu = Vec3::Zero();
    Vec3 xv = Vec3::Zero();
    Vec3 xuu = Vec3::Zero();
    Vec3 xuv = Vec3::Zero();
    Vec3 xvv = Vec3::Zero();
};

/// Which side of the parameter rectangle maps onto the junction curve.
enum class Edge { v_min, v_max, u_min, u_max };

/// One immersed sheet over a parameter rectangle.
struct ParametricPatch {
    std::string name;
    Rect domain;
    std::function<Vec3(double, double)> immersion;
    std::function<Jet(double, double)> analytic_jet; ///< empty: finite differences
    Edge junction_edge = Edge::v_min;
    int orientation_sign = 1;
    bool u_periodic = false;       ///< u is an angle; the u-edges are glued
    bool far_edge_is_pole = false; ///< the edge opposite Γ collapses to a point
    /// Closed-form distance to the junction edge; empty: meridian arclength.
    std::function<double(double, double)> distance;
    double eps_imm = 1e-12;

    bool along_u() const { return junction_edge == Edge::v_min || junction_edge == Edge::v_max; }

    /// Coordinate running along the junction edge.
    double along(const ParamPoint& p) const { return along_u() ? p.u : p.v; }

    /// Parameter distance from the junction edge (>= 0 inside the domain).
    double depth(const ParamPoint& p) const
    {
        switch (junction_edge) {
        case Edge::v_min: return p.v - domain.v0;
        case Edge::v_max: return domain.v1 - p.v;
        case Edge::u_min: return p.u - domain.u0;
        case Edge::u_max: return domain.u1 - p.u;
        }
        return 0.0;
    }

    /// Extent of the depth coordinate.
    double depth_extent() const { return along_u() ? domain.height() : domain.width(); }

    /// Range of the along-edge coordinate.
    std::pair<double, double> along_range() const
    {
        return along_u() ? std::pair{domain.u0, domain.u1} : std::pair{domain.v0, domain.v1};
    }

    /// Point at along-edge coordinate s and depth d.
    ParamPoint at(double s, double d) const
    {
        switch (junction_edge) {
        case Edge::v_min: return {s, domain.v0 + d};
        case Edge::v_max: return {s, domain.v1 - d};
        case Edge::u_min: return {domain.u0 + d, s};
        case Edge::u_max: return {domain.u1 - d, s};
        }
        return {};
    }

    /// +1 when increasing depth means increasing the raw coordinate.
    double depth_sign() const
    {
        return (junction_edge == Edge::v_min || junction_edge == Edge::u_min) ? 1.0 : -1.0;
    }

    ParametricPatch flipped() const
    {
        ParametricPatch out = *this;
        out.orientation_sign = -orientation_sign;
        return out;
    }
};

struct Frame {
    Vec3 position;
    Vec3 xu;
    Vec3 xv;
    Vec3 normal;
};

struct ShapeData {
    Vec3 position = Vec3::Zero();
    Vec3 xu = Vec3::Zero();
    Vec3 xv = Vec3::Zero();
    Mat2 metric = Mat2::Identity();
    Mat2 metric_inv = Mat2::Identity();
    Vec3 normal = Vec3::UnitZ();
    Mat2 second_form = Mat2::Zero();
    double norm_a2 = 0.0; ///< |A|^2
    Vec3 mean_curv = Vec3::Zero();
    double gauss_curv = 0.0;

    double area_element() const { return std::sqrt(metric.determinant()); }
    double norm_a() const { return std::sqrt(std::max(norm_a2, 0.0)); }
};

namespace detail {

inline std::vector<double> fd_nodes(double x, double h, double lo, double hi)
{
    return stencil_offsets(x, h, lo, hi);
}

/// Jet from five-point stencils at step h; stencils shift to stay inside the domain.
inline Jet fd_jet_at_step(const ParametricPatch& patch, const ParamPoint& p, double h)
{
    const Rect& d = patch.domain;
    const auto ou = fd_nodes(p.u, h, d.u0, d.u1);
    const auto ov = fd_nodes(p.v, h, d.v0, d.v1);
    const auto wu1 = fornberg_weights(0.0, ou, 1);
    const auto wu2 = fornberg_weights(0.0, ou, 2);
    const auto wv1 = fornberg_weights(0.0, ov, 1);
    const auto wv2 = fornberg_weights(0.0, ov, 2);

    Jet j;
    j.x = patch.immersion(p.u, p.v);
    for (std::size_t a = 0; a < ou.size(); ++a) {
        const Vec3 f = patch.immersion(p.u + ou[a] * h, p.v);
        j.xu += wu1[a] * f;
        j.xuu += wu2[a] * f;
    }
    for (std::size_t b = 0; b < ov.size(); ++b) {
        const Vec3 f = patch.immersion(p.u, p.v + ov[b] * h);
        j.xv += wv1[b] * f;
        j.xvv += wv2[b] * f;
    }
    for (std::size_t a = 0; a < ou.size(); ++a)
        for (std::size_t b = 0; b < ov.size(); ++b)
            j.xuv += wu1[a] * wv1[b] * patch.immersion(p.u + ou[a] * h, p.v + ov[b] * h);
    j.xu /= h;
    j.xv /= h;
    j.xuu /= h * h;
    j.xvv /= h * h;
    j.xuv /= h * h;
    return j;
}

inline double jet_distance(const Jet& a, const Jet& b)
{
    double m = 0.0;
    m = std::max(m, (a.xu - b.xu).cwiseAbs().maxCoeff());
    m = std::max(m, (a.xv - b.xv).cwiseAbs().maxCoeff());
    m = std::max(m, (a.xuu - b.xuu).cwiseAbs().maxCoeff());
    m = std::max(m, (a.xuv - b.xuv).cwiseAbs().maxCoeff());
    m = std::max(m, (a.xvv - b.xvv).cwiseAbs().maxCoeff());
    return m;
}

} // namespace detail

struct FdJetResult {
    Jet jet;
    double error_estimate = 0.0;
};

/// Finite-difference jet with a step-halving error estimate. Throws
/// StepTooLarge when the estimate exceeds `tolerance`.
inline FdJetResult fd_jet(const ParametricPatch& patch, const ParamPoint& p, double h,
                          double tolerance = 1e-6)
{
    if (!(h > 0.0))
        throw Error(Errc::InvalidArgument, "geometry_kernel", "fd_jet step must be positive");
    const Jet fine = detail::fd_jet_at_step(patch, p, h);
    const Jet coarse = detail::fd_jet_at_step(patch, p, 2.0 * h);
    // fourth-order stencils: error(h) ~ |J(h) - J(2h)| / (2^4 - 1)
    const double err = detail::jet_distance(fine, coarse) / 15.0;
    if (err > tolerance)
        throw Error(Errc::StepTooLarge, "geometry_kernel",
                    "truncation estimate " + std::to_string(err) + " exceeds " +
                        std::to_string(tolerance));
    return {fine, err};
}

inline double default_fd_step(const ParametricPatch& patch) { return 1e-3 * patch.domain.diameter(); }

inline Jet jet_at(const ParametricPatch& patch, const ParamPoint& p)
{
    if (patch.analytic_jet)
        return patch.analytic_jet(p.u, p.v);
    return detail::fd_jet_at_step(patch, p, default_fd_step(patch));
}

inline Vec3 unit_normal_from(const ParametricPatch& patch, const Vec3& xu, const Vec3& xv)
{
    const Vec3 n = xu.cross(xv);
    const double len = n.norm();
    if (!(len >= patch.eps_imm))
        throw Error(Errc::DegenerateImmersion, "geometry_kernel",
                    "|X_u x X_v| = " + std::to_string(len) + " on sheet '" + patch.name + "'");
    return patch.orientation_sign * n / len;
}

inline Frame evaluate_frame(const ParametricPatch& patch, const ParamPoint& p)
{
    if (!patch.domain.contains(p, 1e-9))
        throw Error(Errc::InvalidArgument, "geometry_kernel", "point outside patch domain");
    Frame f;
    if (patch.analytic_jet) {
        const Jet j = patch.analytic_jet(p.u, p.v);
        f.position = j.x;
        f.xu = j.xu;
        f.xv = j.xv;
    } else {
        const Jet j = jet_at(patch, p);
        f.position = j.x;
        f.xu = j.xu;
        f.xv = j.xv;
    }
    f.normal = unit_normal_from(patch, f.xu, f.xv);
    return f;
}

inline ShapeData shape_from_jet(const ParametricPatch& patch, const Jet& j)
{
    ShapeData s;
    s.position = j.x;
    s.xu = j.xu;
    s.xv = j.xv;
    s.normal = unit_normal_from(patch, j.xu, j.xv);
    s.metric << j.xu.dot(j.xu), j.xu.dot(j.xv), j.xv.dot(j.xu), j.xv.dot(j.xv);
    s.metric_inv = s.metric.inverse();
    const double a11 = j.xuu.dot(s.normal);
    const double a12 = j.xuv.dot(s.normal);
    const double a22 = j.xvv.dot(s.normal);
    s.second_form << a11, a12, a12, a22;
    const Mat2 shape_op = s.metric_inv * s.second_form;
    s.norm_a2 = (shape_op * shape_op).trace();
    s.mean_curv = shape_op.trace() * s.normal;
    s.gauss_curv = s.second_form.determinant() / s.metric.determinant();
    return s;
}

inline ShapeData shape_quantities(const ParametricPatch& patch, const ParamPoint& p)
{
    if (!patch.domain.contains(p, 1e-9))
        throw Error(Errc::InvalidArgument, "geometry_kernel", "point outside patch domain");
    return shape_from_jet(patch, jet_at(patch, p));
}

using SheetScalar = std::function<double(double, double)>;

/// Parameter-space partial derivatives of a scalar on the patch.
inline Eigen::Vector2d param_gradient(const ParametricPatch& patch, const SheetScalar& f,
                                      const ParamPoint& p)
{
    const Rect& d = patch.domain;
    const double hu = 5e-4 * d.width();
    const double hv = 5e-4 * d.height();
    const double fu = derivative_1d([&](double u) { return f(u, p.v); }, p.u, hu, d.u0, d.u1);
    const double fv = derivative_1d([&](double v) { return f(p.u, v); }, p.v, hv, d.v0, d.v1);
    return {fu, fv};
}

/// grad_Σ f = g^{ab} ∂_a f X_b, given precomputed shape data.
inline Vec3 surface_gradient(const ShapeData& s, const Eigen::Vector2d& df)
{
    const Eigen::Vector2d c = s.metric_inv * df;
    return c[0] * s.xu + c[1] * s.xv;
}

inline Vec3 surface_gradient(const ParametricPatch& patch, const SheetScalar& f, const ParamPoint& p)
{
    const ShapeData s = shape_quantities(patch, p);
    return surface_gradient(s, param_gradient(patch, f, p));
}

/// Quadrature nodes on a patch with shape data and area-weighted weights.
struct SheetNode {
    ParamPoint p;
    ShapeData shape;
    double weight = 0.0; ///< tensor weight times sqrt(det g)
};

struct SheetGrid {
    std::vector<SheetNode> nodes;
    Rule1D rule_u;
    Rule1D rule_v;
};

inline Rule1D rule_u_for(const ParametricPatch& patch, const QuadratureSpec& spec)
{
    if (patch.u_periodic)
        return periodic_trapezoid(spec.n_u * spec.panels_u, patch.domain.u0, patch.domain.u1);
    return gauss_legendre(spec.n_u, patch.domain.u0, patch.domain.u1, spec.panels_u);
}

inline Rule1D rule_v_for(const ParametricPatch& patch, const QuadratureSpec& spec)
{
    return gauss_legendre(spec.n_v, patch.domain.v0, patch.domain.v1, spec.panels_v);
}

inline SheetGrid build_grid(const ParametricPatch& patch, const QuadratureSpec& spec)
{
    SheetGrid g;
    g.rule_u = rule_u_for(patch, spec);
    g.rule_v = rule_v_for(patch, spec);
    const std::size_t nu = g.rule_u.size();
    const std::size_t nv = g.rule_v.size();
    g.nodes.resize(nu * nv);
    parallel_for(nu * nv, [&](std::size_t k) {
        const std::size_t i = k / nv;
        const std::size_t j = k % nv;
        SheetNode& node = g.nodes[k];
        node.p = {g.rule_u.nodes[i], g.rule_v.nodes[j]};
        node.shape = shape_from_jet(patch, jet_at(patch, node.p));
        node.weight = g.rule_u.weights[i] * g.rule_v.weights[j] * node.shape.area_element();
    });
    return g;
}

using PatchIntegrand = std::function<double(const ParamPoint&, const ShapeData&)>;

inline double integrate_grid(const SheetGrid& grid, const PatchIntegrand& integrand,
                             const std::string& what = "integrand")
{
    std::vector<double> values(grid.nodes.size());
    parallel_for(grid.nodes.size(), [&](std::size_t k) {
        values[k] = integrand(grid.nodes[k].p, grid.nodes[k].shape);
    });
    double sum = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]))
            throw Error(Errc::NonFiniteIntegrand, "geometry_kernel",
                        what + " is not finite at (" + std::to_string(grid.nodes[k].p.u) + ", " +
                            std::to_string(grid.nodes[k].p.v) + ")");
        sum += grid.nodes[k].weight * values[k];
    }
    return sum;
}

/// ∫_Σ f dA by tensor quadrature (Gauss-Legendre; trapezoid in periodic u).
inline double integrate_patch(const ParametricPatch& patch, const PatchIntegrand& integrand,
                              const QuadratureSpec& spec = {})
{
    return integrate_grid(build_grid(patch, spec), integrand);
}

/// Length of the transverse coordinate line from the junction edge to p.
inline double meridian_arclength(const ParametricPatch& patch, const ParamPoint& p, int n = 24)
{
    const double s = patch.along(p);
    const double depth = patch.depth(p);
    if (depth <= 0.0)
        return 0.0;
    const Rule1D rule = gauss_legendre(n, 0.0, depth);
    double len = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const ParamPoint q = patch.at(s, rule.nodes[k]);
        const Jet j = jet_at(patch, q);
        len += rule.weights[k] * (patch.along_u() ? j.xv.norm() : j.xu.norm());
    }
    return len;
}

} // namespace mjs
