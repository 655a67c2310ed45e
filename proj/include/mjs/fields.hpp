#pragma once

#include "mjs/junction.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace mjs {

using SheetGradient = std::function<Eigen::Vector2d(double, double)>;

/// φ = (φ_1, ..., φ_q), one scalar per sheet. Parameter gradients are optional;
/// without them derivatives come from finite differences.
struct JunctionScalarField {
    std::vector<SheetScalar> phi;
    std::vector<SheetGradient> dphi;
    std::string smoothness = "C1";

    double value(std::size_t i, const ParamPoint& p) const { return phi[i](p.u, p.v); }

    Eigen::Vector2d param_grad(const ParametricPatch& sheet, std::size_t i, const ParamPoint& p) const
    {
        if (i < dphi.size() && dphi[i])
            return dphi[i](p.u, p.v);
        return param_gradient(sheet, phi[i], p);
    }

    static JunctionScalarField zero(std::size_t q)
    {
        JunctionScalarField f;
        f.phi.assign(q, [](double, double) { return 0.0; });
        f.dphi.assign(q, [](double, double) { return Eigen::Vector2d::Zero().eval(); });
        return f;
    }

    static JunctionScalarField constant(const std::vector<double>& values)
    {
        JunctionScalarField f;
        for (double c : values) {
            f.phi.push_back([c](double, double) { return c; });
            f.dphi.push_back([](double, double) { return Eigen::Vector2d::Zero().eval(); });
        }
        return f;
    }
};

/// Vector field on M: evaluated per sheet at a parameter point and its image.
using VectorField = std::function<Vec3(std::size_t, const ParamPoint&, const Vec3&)>;

inline VectorField ambient_field(std::function<Vec3(const Vec3&)> f)
{
    return [f = std::move(f)](std::size_t, const ParamPoint&, const Vec3& x) { return f(x); };
}

/// φ_i(p_i(t)).
inline double boundary_trace(const MultiJunctionSurface& m, const JunctionScalarField& phi, std::size_t i, double t)
{
    if (i >= phi.phi.size() || !phi.phi[i])
        throw Error(Errc::InvalidArgument, "junction_fields", "no scalar attached to sheet " + std::to_string(i));
    const double val = phi.value(i, m.edge_point(i, t));
    if (!std::isfinite(val))
        throw Error(Errc::NonFiniteIntegrand, "junction_fields",
                    "trace on sheet '" + m.sheets[i].name + "' is not finite at t = " + std::to_string(t));
    return val;
}

/// Orthonormal basis of the normal plane of Γ at t.
inline std::pair<Vec3, Vec3> normal_plane_basis(const JunctionCurve& curve, double t)
{
    const Vec3 eta = curve.tangent(t);
    Vec3 seed = std::abs(eta.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 a = (seed - seed.dot(eta) * eta).normalized();
    return {a, eta.cross(a)};
}

/// Rows ν_i(t).
inline Eigen::MatrixXd normal_matrix(const MultiJunctionSurface& m, double t)
{
    Eigen::MatrixXd n(m.q(), 3);
    for (std::size_t i = 0; i < m.q(); ++i)
        n.row(i) = sheet_normal_at_gamma(m, i, t).transpose();
    return n;
}

struct CompatibilityResult {
    double residual = 0.0; ///< max_t ‖N(t) W(t) − φ(t)‖
    bool compatible = false;
    bool rank_deficient = false;
    std::vector<double> t;
    std::vector<Vec3> w;
    std::vector<std::vector<double>> traces; ///< traces[k][i] = φ_i(t_k)
};

/// Pointwise least squares for W with W·ν_i = φ_i on Γ samples.
inline CompatibilityResult compatibility_solve(const MultiJunctionSurface& m, const JunctionScalarField& phi,
                                               int samples = 256, bool normal_plane = false,
                                               double tolerance = 1e-8)
{
    const GammaRule rule = gamma_rule(m.curve, samples);
    const std::size_t q = m.q();
    const std::size_t n = rule.t.size();
    CompatibilityResult out;
    out.t = rule.t;
    out.w.resize(n);
    out.traces.assign(n, std::vector<double>(q));
    std::vector<double> misfit(n);
    std::vector<char> deficient(n, 0);
    parallel_for(n, [&](std::size_t k) {
        const double t = rule.t[k];
        Eigen::VectorXd f(q);
        for (std::size_t i = 0; i < q; ++i)
            f[i] = out.traces[k][i] = boundary_trace(m, phi, i, t);
        Eigen::MatrixXd nm = normal_matrix(m, t);
        Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(3, 3);
        if (normal_plane) {
            const auto [a, b] = normal_plane_basis(m.curve, t);
            basis.resize(3, 2);
            basis.col(0) = a;
            basis.col(1) = b;
        }
        const Eigen::MatrixXd sys = nm * basis;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        const Eigen::VectorXd c = svd.solve(f);
        out.w[k] = basis * c;
        misfit[k] = (sys * c - f).norm();
        const long need = std::min<long>(2, static_cast<long>(q));
        deficient[k] = svd.rank() < need;
    });
    for (std::size_t k = 0; k < n; ++k) {
        out.residual = std::max(out.residual, misfit[k]);
        out.rank_deficient = out.rank_deficient || deficient[k];
    }
    out.compatible = out.residual <= tolerance;
    return out;
}

/// φ_i = V·ν_i.
inline JunctionScalarField field_from_vector(const MultiJunctionSurface& m, const VectorField& v)
{
    JunctionScalarField f;
    for (std::size_t i = 0; i < m.q(); ++i) {
        f.phi.push_back([sheet = m.sheets[i], v, i](double a, double b) {
            const ParamPoint p{a, b};
            const Frame fr = evaluate_frame(sheet, p);
            return v(i, p, fr.position).dot(fr.normal);
        });
    }
    return f;
}

/// ρ_r = η(d_Γ / r).
inline double cutoff_rho(const MultiJunctionSurface& m, std::size_t i, const ParamPoint& p, double r)
{
    if (!(r > 0.0))
        throw Error(Errc::InvalidArgument, "junction_fields", "cutoff radius must be positive");
    return cutoff_profile(distance_to_gamma(m, i, p) / r);
}

/// Parameter gradient of ρ_r through the chain rule η'(d/r) ∇d / r.
inline Eigen::Vector2d cutoff_rho_param_grad(const MultiJunctionSurface& m, std::size_t i, const ParamPoint& p,
                                             double r)
{
    const double d = distance_to_gamma(m, i, p);
    const double slope = cutoff_profile_derivative(d / r) / r;
    if (slope == 0.0)
        return Eigen::Vector2d::Zero();
    const auto& sheet = m.sheets[i];
    return slope * param_gradient(sheet, [&](double a, double b) { return distance_to_gamma(m, i, {a, b}); }, p);
}

} // namespace mjs
