#pragma once

#include "mjs/fields.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace mjs {

/// Deformation velocity with a description of how its support is cut off.
struct VariationField {
    VectorField v;
    std::string support = "window";
};

/// Sides of sheet i other than the junction edge, glued seams and poles.
inline std::vector<Edge> outer_edges(const ParametricPatch& sheet)
{
    std::vector<Edge> out;
    const Edge far = sheet.junction_edge == Edge::v_min   ? Edge::v_max
                     : sheet.junction_edge == Edge::v_max ? Edge::v_min
                     : sheet.junction_edge == Edge::u_min ? Edge::u_max
                                                          : Edge::u_min;
    if (!sheet.far_edge_is_pole)
        out.push_back(far);
    const bool side_periodic = sheet.along_u() && sheet.u_periodic;
    if (!side_periodic) {
        if (sheet.along_u()) {
            out.push_back(Edge::u_min);
            out.push_back(Edge::u_max);
        } else {
            out.push_back(Edge::v_min);
            out.push_back(Edge::v_max);
        }
    }
    return out;
}

inline std::vector<ParamPoint> edge_samples(const ParametricPatch& sheet, Edge e, int n)
{
    const Rect& d = sheet.domain;
    std::vector<ParamPoint> pts;
    for (int k = 0; k <= n; ++k) {
        const double s = static_cast<double>(k) / n;
        switch (e) {
        case Edge::v_min: pts.push_back({d.u0 + s * d.width(), d.v0}); break;
        case Edge::v_max: pts.push_back({d.u0 + s * d.width(), d.v1}); break;
        case Edge::u_min: pts.push_back({d.u0, d.v0 + s * d.height()}); break;
        case Edge::u_max: pts.push_back({d.u1, d.v0 + s * d.height()}); break;
        }
    }
    return pts;
}

/// Throws NotCompactlySupported when V does not vanish on the outer edges.
inline void require_compact_support(const MultiJunctionSurface& m, const VectorField& v, double tolerance = 1e-9)
{
    for (std::size_t i = 0; i < m.q(); ++i) {
        for (Edge e : outer_edges(m.sheets[i])) {
            for (const ParamPoint& p : edge_samples(m.sheets[i], e, 32)) {
                const double mag = v(i, p, m.sheets[i].immersion(p.u, p.v)).norm();
                if (mag > tolerance)
                    throw Error(Errc::NotCompactlySupported, "stability_analysis",
                                "variation field is " + std::to_string(mag) + " on an outer edge of sheet '" +
                                    m.sheets[i].name + "'");
            }
        }
    }
}

inline void require_compact_support(const MultiJunctionSurface& m, const JunctionScalarField& phi,
                                    double tolerance = 1e-9)
{
    for (std::size_t i = 0; i < m.q(); ++i) {
        for (Edge e : outer_edges(m.sheets[i])) {
            for (const ParamPoint& p : edge_samples(m.sheets[i], e, 32)) {
                const double mag = std::abs(phi.value(i, p));
                if (mag > tolerance)
                    throw Error(Errc::NotCompactlySupported, "stability_analysis",
                                "field is " + std::to_string(mag) + " on an outer edge of sheet '" +
                                    m.sheets[i].name + "'");
            }
        }
    }
}

/// Per-node data for x -> x + tV, independent of t.
struct VariationCache {
    struct Node {
        Vec3 xu, xv, vu, vv;
        double weight; ///< θ_i times the tensor quadrature weight
    };
    std::vector<Node> nodes;
    std::vector<std::string> sheet_of;
};

inline VariationCache build_variation_cache(const MultiJunctionSurface& m, const VectorField& v,
                                            const QuadratureSpec& spec)
{
    VariationCache cache;
    for (std::size_t i = 0; i < m.q(); ++i) {
        const ParametricPatch& sheet = m.sheets[i];
        const Rule1D ru = rule_u_for(sheet, spec);
        const Rule1D rv = rule_v_for(sheet, spec);
        const std::size_t nu = ru.size(), nv = rv.size();
        std::vector<VariationCache::Node> nodes(nu * nv);
        const Rect& d = sheet.domain;
        const double hu = 2e-4 * d.width(), hv = 2e-4 * d.height();
        auto field = [&](double u, double w) -> Vec3 { return v(i, {u, w}, sheet.immersion(u, w)); };
        parallel_for(nu * nv, [&](std::size_t k) {
            const double u = ru.nodes[k / nv], w = rv.nodes[k % nv];
            const Jet j = jet_at(sheet, {u, w});
            auto& n = nodes[k];
            n.xu = j.xu;
            n.xv = j.xv;
            n.vu = derivative_1d([&](double a) { return field(a, w); }, u, hu, d.u0, d.u1);
            n.vv = derivative_1d([&](double b) { return field(u, b); }, w, hv, d.v0, d.v1);
            n.weight = m.densities[i] * ru.weights[k / nv] * rv.weights[k % nv];
        });
        cache.nodes.insert(cache.nodes.end(), nodes.begin(), nodes.end());
        cache.sheet_of.insert(cache.sheet_of.end(), nodes.size(), sheet.name);
    }
    return cache;
}

inline double deformed_area(const VariationCache& cache, double t, double eps_imm = 1e-12)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < cache.nodes.size(); ++k) {
        const auto& n = cache.nodes[k];
        const double len = (n.xu + t * n.vu).cross(n.xv + t * n.vv).norm();
        if (!(len >= eps_imm))
            throw Error(Errc::DegenerateImmersion, "stability_analysis",
                        "deformation collapses sheet '" + cache.sheet_of[k] + "' at t = " + std::to_string(t));
        sum += n.weight * len;
    }
    return sum;
}

/// Σ θ_i Area(Σ_i + tV).
inline double area_under_variation(const MultiJunctionSurface& m, const VectorField& v, double t,
                                   const QuadratureSpec& spec = {})
{
    return deformed_area(build_variation_cache(m, v, spec), t);
}

/// −Σθ_i ∫ V·H_i + Σθ_i ∫_Γ V·τ_i.
inline double first_variation(const MultiJunctionSurface& m, const VectorField& v, const QuadratureSpec& spec = {},
                              int gamma_samples = 256)
{
    double interior = 0.0;
    for (std::size_t i = 0; i < m.q(); ++i) {
        interior -= m.densities[i] * integrate_patch(
                                         m.sheets[i],
                                         [&](const ParamPoint& p, const ShapeData& s) {
                                             return v(i, p, s.position).dot(s.mean_curv);
                                         },
                                         spec);
    }
    const GammaRule rule = gamma_rule(m.curve, gamma_samples);
    double boundary = 0.0;
    for (std::size_t k = 0; k < rule.t.size(); ++k) {
        const double t = rule.t[k];
        for (std::size_t i = 0; i < m.q(); ++i) {
            const Vec3 val = v(i, m.edge_point(i, t), m.curve.gamma(t));
            boundary += rule.weight[k] * m.densities[i] * val.dot(conormal(m, i, t));
        }
    }
    return interior + boundary;
}

/// The three integrals making up Q(φ).
struct QBreakdown {
    double dirichlet = 0.0; ///< Σθ ∫ |∇φ|²
    double potential = 0.0; ///< Σθ ∫ |A|² φ²
    double boundary = 0.0;  ///< Σθ ∫_Γ φ² H_Γ·τ
    double total = 0.0;
};

inline QBreakdown stability_terms(const MultiJunctionSurface& m, const JunctionScalarField& phi,
                                  const QuadratureSpec& spec = {}, int gamma_samples = 256)
{
    QBreakdown q;
    for (std::size_t i = 0; i < m.q(); ++i) {
        const ParametricPatch& sheet = m.sheets[i];
        const SheetGrid grid = build_grid(sheet, spec);
        const double th = m.densities[i];
        q.dirichlet += th * integrate_grid(grid, [&](const ParamPoint& p, const ShapeData& s) {
            const Eigen::Vector2d df = phi.param_grad(sheet, i, p);
            return df.dot(s.metric_inv * df);
        }, "|grad phi|^2");
        q.potential += th * integrate_grid(grid, [&](const ParamPoint& p, const ShapeData& s) {
            const double f = phi.value(i, p);
            return s.norm_a2 * f * f;
        }, "|A|^2 phi^2");
    }
    const GammaRule rule = gamma_rule(m.curve, gamma_samples);
    for (std::size_t k = 0; k < rule.t.size(); ++k) {
        const double t = rule.t[k];
        const Vec3 h = gamma_curvature(m, t);
        for (std::size_t i = 0; i < m.q(); ++i) {
            const double f = boundary_trace(m, phi, i, t);
            q.boundary += rule.weight[k] * m.densities[i] * f * f * h.dot(conormal(m, i, t));
        }
    }
    q.total = q.dirichlet - q.potential - q.boundary;
    return q;
}

struct StabilityOptions {
    QuadratureSpec quad;
    int gamma_samples = 256;
    double eps_comp = 1e-8;
    double minimal_tolerance = 1e-8;
    bool require_support = true;
};

/// Q(φ) after checking minimality, compatibility and support.
inline double stability_form(const MultiJunctionSurface& m, const JunctionScalarField& phi,
                             const StabilityOptions& opt = {})
{
    const DiagnosticsReport diag = minimality_residual(m, opt.quad, opt.gamma_samples, opt.minimal_tolerance);
    if (!diag.minimal)
        throw Error(Errc::NotMinimal, "stability_analysis",
                    "conormal residual " + std::to_string(diag.max_conormal_sum) + " on '" + m.label + "'");
    const CompatibilityResult comp = compatibility_solve(m, phi, opt.gamma_samples, false, opt.eps_comp);
    if (!comp.compatible)
        throw Error(Errc::IncompatibleField, "stability_analysis",
                    "compatibility residual " + std::to_string(comp.residual));
    if (opt.require_support)
        require_compact_support(m, phi);
    return stability_terms(m, phi, opt.quad, opt.gamma_samples).total;
}

/// Removes the Γ-tangential part of V near Γ, blended out over depth 0.1 r.
inline VectorField project_normal_to_gamma(const MultiJunctionSurface& m, const VectorField& v, double r)
{
    const double width = 0.1 * r;
    return [&m, v, width](std::size_t i, const ParamPoint& p, const Vec3& x) -> Vec3 {
        const Vec3 val = v(i, p, x);
        const double d = distance_to_gamma(m, i, p);
        const double blend = cutoff_profile(1.0 + d / width);
        if (blend == 0.0)
            return val;
        const Vec3 eta = m.curve.tangent(m.foot_parameter(i, p));
        return val - blend * val.dot(eta) * eta;
    };
}

struct FdOracleResult {
    double value = 0.0;
    double richardson_error = 0.0;
    std::vector<double> raw; ///< plain central differences per step
};

/// d²/dt² Σθ Area(Σ_i + tV) at t = 0 by central differences at h, h/2, h/4
/// with two Richardson levels.
inline FdOracleResult second_variation_fd_oracle(const MultiJunctionSurface& m, const VectorField& v,
                                                 double r = 1.0, double h = 0.04, const QuadratureSpec& spec = {},
                                                 double minimal_tolerance = 1e-8)
{
    const DiagnosticsReport diag = minimality_residual(m, spec, 256, minimal_tolerance);
    if (!diag.minimal)
        throw Error(Errc::NotMinimal, "stability_analysis", "oracle needs a minimal junction");
    require_compact_support(m, v);
    const VectorField w = project_normal_to_gamma(m, v, r);
    const VariationCache cache = build_variation_cache(m, w, spec);
    const double a0 = deformed_area(cache, 0.0);
    FdOracleResult out;
    for (int k = 0; k < 3; ++k) {
        const double s = h / std::pow(2.0, k);
        out.raw.push_back((deformed_area(cache, s) - 2 * a0 + deformed_area(cache, -s)) / (s * s));
    }
    const double r1 = (4 * out.raw[1] - out.raw[0]) / 3;
    const double r2 = (4 * out.raw[2] - out.raw[1]) / 3;
    out.value = (16 * r2 - r1) / 15;
    out.richardson_error = std::abs(out.value - r2);
    if (out.richardson_error > 1e-3 * std::abs(out.value) && out.richardson_error > 1e-12)
        throw Error(Errc::StepTooLarge, "stability_analysis",
                    "Richardson error " + std::to_string(out.richardson_error) + " for value " +
                        std::to_string(out.value));
    return out;
}

/// 1 on Γ and vanishing to fourth order at the outer edges; 1 on pole sheets.
inline double collar_window(const ParametricPatch& s, const ParamPoint& p)
{
    if (s.far_edge_is_pole)
        return 1.0;
    double w = std::pow(1 - s.depth(p) / s.depth_extent(), 4);
    if (!(s.along_u() && s.u_periodic)) {
        const auto [a, b] = s.along_range();
        const double x = 2 * (s.along(p) - a) / (b - a) - 1;
        w *= std::pow(1 - x * x, 2);
    }
    return w;
}

inline VectorField windowed_field(const MultiJunctionSurface& m, std::function<Vec3(const Vec3&)> f)
{
    auto sheets = std::make_shared<const std::vector<ParametricPatch>>(m.sheets);
    return [sheets, f = std::move(f)](std::size_t i, const ParamPoint& p, const Vec3& x) -> Vec3 {
        return collar_window((*sheets)[i], p) * f(x);
    };
}

/// Smooth ambient fields used to probe the second variation.
inline std::vector<std::function<Vec3(const Vec3&)>> probe_fields()
{
    return {
        [](const Vec3&) { return Vec3::UnitZ(); },
        [](const Vec3& x) { return Vec3((1 + 0.5 * x.x()) * x.x(), (1 + 0.5 * x.x()) * x.y(), 0.0); },
        [](const Vec3& x) { return Vec3(x.x() * x.z(), x.y() * x.z(), 1.0 + x.y()); },
        [](const Vec3& x) { return Vec3(-x.x(), -x.y(), 0.3 * x.x() * x.y()); },
    };
}

// ---------------------------------------------------------------------------
// Constrained Rayleigh quotient

struct BasisSpec {
    int degree = 8;
    int constraint_samples = 0; ///< 0: four times the largest trace dimension
    QuadratureSpec quad{32, 32};
    int gamma_samples = 256;
    int eigen_count = 4;
};

namespace detail {

/// P_0..P_n and derivatives at x.
inline void legendre_table(int n, double x, std::vector<double>& p, std::vector<double>& dp)
{
    p.assign(n + 1, 0.0);
    dp.assign(n + 1, 0.0);
    p[0] = 1.0;
    if (n >= 1) {
        p[1] = x;
        dp[1] = 1.0;
    }
    for (int k = 1; k < n; ++k) {
        p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
        dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k];
    }
}

} // namespace detail

/// Tensor basis on one sheet in (along, depth) coordinates: Fourier or
/// windowed Legendre along Γ, windowed Legendre in depth; pole sheets use the
/// regularity factor (1 - depth/D)^|k| instead of a far-edge window.
struct SheetBasis {
    bool fourier = false;
    bool pole = false;
    int degree = 0;
    double s0 = 0.0, s1 = 1.0, depth = 1.0;
    bool along_u = true;
    double depth_sign = 1.0;

    int along_count() const { return fourier ? 2 * degree + 1 : degree + 1; }
    int size() const { return along_count() * (degree + 1); }

    static SheetBasis for_sheet(const ParametricPatch& sheet, int degree)
    {
        SheetBasis b;
        b.fourier = sheet.u_periodic && sheet.along_u();
        b.pole = sheet.far_edge_is_pole;
        b.degree = degree;
        std::tie(b.s0, b.s1) = sheet.along_range();
        b.depth = sheet.depth_extent();
        b.along_u = sheet.along_u();
        b.depth_sign = sheet.depth_sign();
        return b;
    }

    /// Values and (∂_along, ∂_depth) derivatives of every basis function.
    void eval(double s, double d, Eigen::VectorXd& val, Eigen::VectorXd& ds, Eigen::VectorXd& dd) const
    {
        const int na = along_count(), nd = degree + 1;
        std::vector<double> av(na), ad(na), kk(na, 0.0);
        const double len = s1 - s0;
        if (fourier) {
            const double w = 2 * kPi / len;
            av[0] = 1.0;
            ad[0] = 0.0;
            for (int k = 1; k <= degree; ++k) {
                const double a = k * w * (s - s0);
                av[2 * k - 1] = std::cos(a);
                ad[2 * k - 1] = -k * w * std::sin(a);
                av[2 * k] = std::sin(a);
                ad[2 * k] = k * w * std::cos(a);
                kk[2 * k - 1] = kk[2 * k] = k;
            }
        } else {
            const double x = 2 * (s - s0) / len - 1;
            std::vector<double> p, dp;
            detail::legendre_table(degree, x, p, dp);
            const double win = 1 - x * x, dwin = -2 * x;
            for (int k = 0; k < na; ++k) {
                av[k] = p[k] * win;
                ad[k] = (dp[k] * win + p[k] * dwin) * 2 / len;
            }
        }
        const double y = d / depth;
        std::vector<double> p, dp;
        detail::legendre_table(degree, 2 * y - 1, p, dp);
        val.resize(size());
        ds.resize(size());
        dd.resize(size());
        for (int a = 0; a < na; ++a) {
            double win = 1 - y, dwin = -1.0 / depth;
            if (pole) {
                win = std::pow(1 - y, kk[a]);
                dwin = kk[a] == 0 ? 0.0 : -kk[a] * std::pow(1 - y, kk[a] - 1) / depth;
            }
            for (int j = 0; j < nd; ++j) {
                const int idx = a * nd + j;
                const double dv = p[j] * win;
                const double ddv = dp[j] * 2 / depth * win + p[j] * dwin;
                val[idx] = av[a] * dv;
                ds[idx] = ad[a] * dv;
                dd[idx] = av[a] * ddv;
            }
        }
    }

    /// Values and (∂_u, ∂_v) at a parameter point of the owning sheet.
    void eval_param(const ParametricPatch& sheet, const ParamPoint& p, Eigen::VectorXd& val, Eigen::VectorXd& du,
                    Eigen::VectorXd& dv) const
    {
        Eigen::VectorXd ds, dd;
        eval(sheet.along(p), sheet.depth(p), val, ds, dd);
        if (along_u) {
            du = ds;
            dv = depth_sign * dd;
        } else {
            du = depth_sign * dd;
            dv = ds;
        }
    }
};

/// A scalar field given by basis coefficients on each sheet.
inline JunctionScalarField field_from_coefficients(const MultiJunctionSurface& m, const std::vector<SheetBasis>& bases,
                                                   const Eigen::VectorXd& coeffs)
{
    JunctionScalarField f;
    f.smoothness = "polynomial";
    std::size_t offset = 0;
    for (std::size_t i = 0; i < m.q(); ++i) {
        const int n = bases[i].size();
        const Eigen::VectorXd c = coeffs.segment(offset, n);
        offset += n;
        f.phi.push_back([sheet = m.sheets[i], b = bases[i], c](double u, double v) {
            Eigen::VectorXd val, du, dv;
            b.eval_param(sheet, {u, v}, val, du, dv);
            return val.dot(c);
        });
        f.dphi.push_back([sheet = m.sheets[i], b = bases[i], c](double u, double v) {
            Eigen::VectorXd val, du, dv;
            b.eval_param(sheet, {u, v}, val, du, dv);
            return Eigen::Vector2d(du.dot(c), dv.dot(c));
        });
    }
    return f;
}

struct StabilityReport {
    std::string label;
    int degree = 0;
    int basis_size = 0;
    int constraint_count = 0;
    int constraint_rank = 0;
    int admissible_dimension = 0;
    int dropped_directions = 0; ///< near-null mass directions removed before the eigensolve
    QuadratureSpec quad;
    double lambda_min = 0.0;
    std::vector<double> eigenvalues;
    double q_certificate = 0.0;      ///< Q(φ*) at doubled quadrature
    double mass_certificate = 0.0;   ///< Σθ∫φ*² at doubled quadrature
    double certificate_compatibility = 0.0;
    bool certificate_holds = false;  ///< λ_min < 0 implies Q(φ*) < 0
    long clamp_count = 0;
    Eigen::VectorXd coefficients;
    std::vector<SheetBasis> bases;
    std::vector<double> trace_t;
    std::vector<std::vector<double>> traces;
};

/// min Q(φ)/Σθ∫φ² over the span of the sheet bases, subject to the
/// compatible condition collocated at Γ samples.
inline StabilityReport minimize_rayleigh(const MultiJunctionSurface& m, const BasisSpec& spec = {},
                                         double minimal_tolerance = 1e-8)
{
    const DiagnosticsReport diag = minimality_residual(m, spec.quad, spec.gamma_samples, minimal_tolerance);
    if (!diag.minimal)
        throw Error(Errc::NotMinimal, "stability_analysis", "Rayleigh minimization needs a minimal junction");
    if (spec.degree < 0 || spec.constraint_samples < 0)
        throw Error(Errc::InvalidArgument, "stability_analysis", "invalid basis specification");

    const std::size_t q = m.q();
    StabilityReport rep;
    rep.label = m.label;
    rep.degree = spec.degree;
    rep.quad = spec.quad;
    std::vector<int> offsets(q + 1, 0);
    for (std::size_t i = 0; i < q; ++i) {
        rep.bases.push_back(SheetBasis::for_sheet(m.sheets[i], spec.degree));
        offsets[i + 1] = offsets[i] + rep.bases[i].size();
    }
    const int n = offsets[q];
    rep.basis_size = n;

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < q; ++i) {
        const ParametricPatch& sheet = m.sheets[i];
        const SheetGrid grid = build_grid(sheet, spec.quad);
        const int nb = rep.bases[i].size();
        const Eigen::Index nn = static_cast<Eigen::Index>(grid.nodes.size());
        Eigen::MatrixXd B(nn, nb), Gu(nn, nb), Gv(nn, nb), Bu(nn, nb), Bv(nn, nb);
        parallel_for(grid.nodes.size(), [&](std::size_t k) {
            const SheetNode& node = grid.nodes[k];
            Eigen::VectorXd val, du, dv;
            rep.bases[i].eval_param(sheet, node.p, val, du, dv);
            const Mat2& gi = node.shape.metric_inv;
            const double w = std::sqrt(node.weight);
            B.row(k) = w * val.transpose();
            Bu.row(k) = w * du.transpose();
            Bv.row(k) = w * dv.transpose();
            Gu.row(k) = w * (gi(0, 0) * du + gi(0, 1) * dv).transpose();
            Gv.row(k) = w * (gi(1, 0) * du + gi(1, 1) * dv).transpose();
        });
        Eigen::VectorXd a2(nn);
        for (Eigen::Index k = 0; k < nn; ++k)
            a2[k] = grid.nodes[k].shape.norm_a2;
        const double th = m.densities[i];
        const auto blk = Eigen::seqN(offsets[i], nb);
        K(blk, blk) += th * (Bu.transpose() * Gu + Bv.transpose() * Gv - B.transpose() * a2.asDiagonal() * B);
        M(blk, blk) += th * (B.transpose() * B);
    }

    // boundary term and constraint rows share the trace evaluation
    auto traces_at = [&](double t) {
        std::vector<Eigen::VectorXd> rows(q);
        for (std::size_t i = 0; i < q; ++i) {
            Eigen::VectorXd val, du, dv;
            rep.bases[i].eval_param(m.sheets[i], m.edge_point(i, t), val, du, dv);
            rows[i] = val;
        }
        return rows;
    };
    const GammaRule grule = gamma_rule(m.curve, spec.gamma_samples);
    for (std::size_t k = 0; k < grule.t.size(); ++k) {
        const double t = grule.t[k];
        const auto rows = traces_at(t);
        const Vec3 h = gamma_curvature(m, t);
        for (std::size_t i = 0; i < q; ++i) {
            const double c = grule.weight[k] * m.densities[i] * h.dot(conormal(m, i, t));
            const auto blk = Eigen::seqN(offsets[i], rows[i].size());
            K(blk, blk) -= c * rows[i] * rows[i].transpose();
        }
    }

    int samples = spec.constraint_samples;
    if (samples == 0)
        for (const auto& b : rep.bases)
            samples = std::max(samples, 4 * b.along_count());
    const GammaRule crule = gamma_rule(m.curve, samples);
    std::vector<Eigen::VectorXd> crow;
    for (double t : crule.t) {
        const Eigen::MatrixXd nm = normal_matrix(m, t);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(nm, Eigen::ComputeFullU);
        const auto& sv = svd.singularValues();
        Eigen::Index rank = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k)
            if (sv[k] > 1e-10 * sv[0])
                ++rank;
        const auto rows = traces_at(t);
        for (Eigen::Index c = rank; c < static_cast<Eigen::Index>(q); ++c) {
            const Eigen::VectorXd comp = svd.matrixU().col(c);
            Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
            for (std::size_t i = 0; i < q; ++i)
                row.segment(offsets[i], rows[i].size()) = comp[i] * rows[i];
            crow.push_back(row);
        }
    }
    const int mrows = static_cast<int>(crow.size());
    rep.constraint_count = mrows;
    if (n < mrows)
        throw Error(Errc::ConstraintRankFailure, "stability_analysis",
                    "basis size " + std::to_string(n) + " below constraint count " + std::to_string(mrows));

    Eigen::MatrixXd Z;
    if (mrows == 0) {
        Z = Eigen::MatrixXd::Identity(n, n);
    } else {
        Eigen::MatrixXd C(mrows, n);
        for (int r = 0; r < mrows; ++r)
            C.row(r) = crow[r].transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k)
            if (sv[k] > 1e-9 * sv[0])
                ++rank;
        rep.constraint_rank = rank;
        if (rank >= n)
            throw Error(Errc::ConstraintRankFailure, "stability_analysis", "no admissible fields remain");
        Z = svd.matrixV().rightCols(n - rank);
        if (!Z.allFinite())
            throw Error(Errc::EigSolveFailure, "stability_analysis", "constraint null space is not finite");
    }
    rep.admissible_dimension = static_cast<int>(Z.cols());

    Eigen::MatrixXd Kr = Z.transpose() * K * Z;
    Eigen::MatrixXd Mr = Z.transpose() * M * Z;
    Kr = 0.5 * (Kr + Kr.transpose()).eval();
    Mr = 0.5 * (Mr + Mr.transpose()).eval();
    // Whiten the mass matrix, dropping numerically dependent directions.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mass(Mr);
    if (mass.info() != Eigen::Success)
        throw Error(Errc::EigSolveFailure, "stability_analysis", "mass matrix eigensolve failed");
    const Eigen::VectorXd& mev = mass.eigenvalues();
    const double mmax = mev.maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < mev.size(); ++k)
        if (mev[k] > 1e-12 * mmax)
            keep.push_back(k);
    if (keep.empty() || !(mmax > 0.0))
        throw Error(Errc::EigSolveFailure, "stability_analysis", "mass matrix vanishes on the admissible space");
    rep.dropped_directions = static_cast<int>(mev.size() - keep.size());
    Eigen::MatrixXd T(Mr.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        T.col(c) = mass.eigenvectors().col(keep[c]) / std::sqrt(mev[keep[c]]);
    Eigen::MatrixXd Kw = T.transpose() * Kr * T;
    Kw = 0.5 * (Kw + Kw.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kw);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite())
        throw Error(Errc::EigSolveFailure, "stability_analysis", "reduced eigensolve failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    rep.lambda_min = ev[0];
    for (int k = 0; k < std::min<int>(spec.eigen_count, static_cast<int>(ev.size())); ++k)
        rep.eigenvalues.push_back(ev[k]);

    Eigen::VectorXd x = Z * (T * es.eigenvectors().col(0));
    Eigen::Index big = 0;
    x.cwiseAbs().maxCoeff(&big);
    if (x[big] < 0)
        x = -x;
    rep.coefficients = x;

    const JunctionScalarField cert = field_from_coefficients(m, rep.bases, x);
    const QBreakdown qd = stability_terms(m, cert, spec.quad.doubled(), 2 * spec.gamma_samples);
    rep.q_certificate = qd.total;
    for (std::size_t i = 0; i < q; ++i)
        rep.mass_certificate += m.densities[i] * integrate_patch(m.sheets[i], [&](const ParamPoint& p, const ShapeData&) {
            const double f = cert.value(i, p);
            return f * f;
        }, spec.quad.doubled());
    const CompatibilityResult comp = compatibility_solve(m, cert, spec.gamma_samples);
    rep.certificate_compatibility = comp.residual;
    rep.trace_t = comp.t;
    rep.traces = comp.traces;
    rep.certificate_holds = rep.lambda_min >= 0.0 || rep.q_certificate < 0.0;
    return rep;
}

} // namespace mjs
