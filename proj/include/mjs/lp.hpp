#pragma once

#include "mjs/fields.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mjs {

enum class LpVariant { eq7, eq8 };

inline const char* to_string(LpVariant v) { return v == LpVariant::eq7 ? "eq7" : "eq8"; }

struct LpParams {
    double p = 1.1;
    double C = 3.0;
    double C1 = 12.0; ///< gradient constant of the eq8 form
    double C2 = 4.0;  ///< boundary constant of the eq8 form
    LpVariant variant = LpVariant::eq7;
    double eps_A = 1e-12;
    double r = 4.0;
    /// W₀ = cos β τ₀ + sin β ν₀ unless an ambient vector is given, in which
    /// case W₀ is its normalized projection onto the normal plane of Γ.
    double beta = 5 * kPi / 12;
    std::optional<Vec3> w0_vector;
    bool rotate_90 = false;
    QuadratureSpec quad{32, 32, 1, 4};
    int gamma_samples = 256;
    double flat_tolerance = 1e-10;
    double angle_tolerance = 1e-6;
};

inline void validate(const LpParams& lp)
{
    const double upper = lp.variant == LpVariant::eq7 ? 1.5 : 1.25;
    if (!(lp.p > 1.0 && lp.p < upper))
        throw Error(Errc::ExponentOutOfRange, "lp_verifier",
                    "p = " + std::to_string(lp.p) + " outside (1, " + std::to_string(upper) + ") for " +
                        to_string(lp.variant));
    if (!(lp.C > 0.0 && lp.C1 > 0.0 && lp.C2 > 0.0))
        throw Error(Errc::InvalidArgument, "lp_verifier", "constants must be positive");
    if (!(lp.r > 2.0))
        throw Error(Errc::InvalidArgument, "lp_verifier", "cutoff radius must exceed 2");
    if (!(lp.eps_A > 0.0))
        throw Error(Errc::InvalidArgument, "lp_verifier", "eps_A must be positive");
}

/// Sheets whose |A| stays below tol on a coarse grid and along the junction edge.
inline std::vector<bool> flat_sheets(const MultiJunctionSurface& m, double tol = 1e-10)
{
    std::vector<bool> flat(m.q(), true);
    for (std::size_t i = 0; i < m.q(); ++i) {
        const SheetGrid grid = build_grid(m.sheets[i], {8, 8});
        for (const auto& n : grid.nodes)
            if (n.shape.norm_a() > tol)
                flat[i] = false;
        const GammaRule rule = gamma_rule(m.curve, 16);
        for (double t : rule.t)
            if (shape_quantities(m.sheets[i], m.edge_point(i, t)).norm_a() > tol)
                flat[i] = false;
    }
    return flat;
}

inline double norm_a_at_gamma(const MultiJunctionSurface& m, std::size_t i, double t)
{
    return shape_quantities(m.sheets[i], m.edge_point(i, t)).norm_a();
}

/// g_i(t): product of |A_j| over the non-flat sheets j ≠ i.
inline double boundary_g(const MultiJunctionSurface& m, std::size_t i, double t, const std::vector<bool>& flat)
{
    double g = 1.0;
    for (std::size_t j = 0; j < m.q(); ++j)
        if (j != i && !flat[j])
            g *= norm_a_at_gamma(m, j, t);
    return g;
}

inline double boundary_g(const MultiJunctionSurface& m, std::size_t i, double t)
{
    return boundary_g(m, i, t, flat_sheets(m));
}

/// Blend weight of the extension: 1 on Γ, 0 once d_Γ >= 2.
inline double extension_blend(double d) { return cutoff_profile(1.0 + 0.5 * d); }

inline double extension_blend_derivative(double d) { return 0.5 * cutoff_profile_derivative(1.0 + 0.5 * d); }

/// G(p) = b(d) g_i(t) + 1 − b(d), t the foot parameter and d the distance to Γ.
inline SheetScalar extend_g(const MultiJunctionSurface& m, std::size_t i, std::function<double(double)> g)
{
    return [&m, i, g = std::move(g)](double u, double v) {
        const ParamPoint p{u, v};
        const double b = extension_blend(distance_to_gamma(m, i, p));
        if (b == 0.0)
            return 1.0;
        return b * g(m.foot_parameter(i, p)) + 1.0 - b;
    };
}

/// τ_i(log|A_i|) at Γ(t); 0 on flat sheets. `clamps` counts |A| < eps_A.
inline double tau_log_A(const MultiJunctionSurface& m, std::size_t i, double t, double eps_A = 1e-12,
                        std::size_t* clamps = nullptr, bool flat = false)
{
    if (flat)
        return 0.0;
    const ParametricPatch& sheet = m.sheets[i];
    const ParamPoint p = m.edge_point(i, t);
    const Rect& dom = sheet.domain;
    auto log_a = [&](double u, double v) {
        const double a = shape_quantities(sheet, {u, v}).norm_a();
        if (a < eps_A) {
            if (clamps)
                ++*clamps;
            return std::log(eps_A);
        }
        return std::log(a);
    };
    const double hu = 1e-3 * dom.width(), hv = 1e-3 * dom.height();
    const Eigen::Vector2d df(derivative_1d([&](double u) { return log_a(u, p.v); }, p.u, hu, dom.u0, dom.u1),
                             derivative_1d([&](double v) { return log_a(p.u, v); }, p.v, hv, dom.v0, dom.v1));
    const ShapeData s = shape_quantities(sheet, p);
    return surface_gradient(s, df).dot(conormal(m, i, t));
}

/// W₀ and the normal-plane quantities it determines at Γ(t).
inline Vec3 w0_at(const MultiJunctionSurface& m, const LpParams& lp, double t)
{
    const Vec3 eta = m.curve.tangent(t);
    Vec3 w;
    if (lp.w0_vector) {
        w = *lp.w0_vector - lp.w0_vector->dot(eta) * eta;
        if (w.norm() < 1e-12)
            throw Error(Errc::ZeroAngleField, "lp_verifier", "W0 vector is tangent to Γ");
        w.normalize();
    } else {
        w = std::cos(lp.beta) * conormal(m, 0, t) + std::sin(lp.beta) * sheet_normal_at_gamma(m, 0, t);
    }
    return lp.rotate_90 ? Vec3(eta.cross(w)) : w;
}

/// The cut-off test function φ_i = sign(c_i)|c_i|^{1/p}(ρ G_i^{(p−1)/p} + ρ_r − ρ).
struct SsyTestFunction {
    JunctionScalarField field;
    std::vector<double> c;
    std::vector<bool> flat;
    double identity_residual = 0.0;
    double angle_spread = 0.0;
    std::shared_ptr<std::atomic<std::size_t>> clamps = std::make_shared<std::atomic<std::size_t>>(0);
};

inline SsyTestFunction build_ssy_test_function(const MultiJunctionSurface& m, const LpParams& lp)
{
    validate(lp);
    const std::size_t q = m.q();
    SsyTestFunction out;
    out.flat = flat_sheets(m, lp.flat_tolerance);

    const GammaRule rule = gamma_rule(m.curve, lp.gamma_samples);
    std::vector<std::vector<double>> cs(q);
    for (double t : rule.t) {
        const Vec3 w = w0_at(m, lp, t);
        for (std::size_t i = 0; i < q; ++i)
            cs[i].push_back(w.dot(sheet_normal_at_gamma(m, i, t)));
    }
    out.c.resize(q);
    for (std::size_t i = 0; i < q; ++i) {
        double sum = 0.0, lo = cs[i][0], hi = cs[i][0];
        for (double v : cs[i]) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        out.c[i] = sum / static_cast<double>(cs[i].size());
        out.angle_spread = std::max(out.angle_spread, hi - lo);
        if (std::abs(out.c[i]) < 1e-8)
            throw Error(Errc::ZeroAngleField, "lp_verifier",
                        "W0 is tangent to sheet '" + m.sheets[i].name + "' (c = " + std::to_string(out.c[i]) + ")");
    }
    if (out.angle_spread > lp.angle_tolerance)
        throw Error(Errc::InvalidArgument, "lp_verifier",
                    "angles between W0 and the sheets vary along Γ by " + std::to_string(out.angle_spread));

    const double p = lp.p, e = (p - 1) / p, r = lp.r, eps = lp.eps_A;
    auto surf = std::make_shared<const MultiJunctionSurface>(m);
    auto flat = out.flat;
    auto clamps = out.clamps;
    for (std::size_t i = 0; i < q; ++i) {
        const double amp = (out.c[i] > 0 ? 1.0 : -1.0) * std::pow(std::abs(out.c[i]), 1.0 / p);
        auto g = [surf, i, flat](double t) { return boundary_g(*surf, i, t, flat); };
        auto big_g = [surf, i, g](const ParamPoint& pt, double d) {
            const double b = extension_blend(d);
            return b == 0.0 ? 1.0 : b * g(surf->foot_parameter(i, pt)) + 1.0 - b;
        };
        out.field.phi.push_back([surf, i, amp, e, r, big_g](double u, double v) {
            const ParamPoint pt{u, v};
            const double d = distance_to_gamma(*surf, i, pt);
            const double rho = cutoff_profile(d), rho_r = cutoff_profile(d / r);
            const double G = big_g(pt, d);
            return amp * (rho * std::pow(G, e) + rho_r - rho);
        });
        out.field.dphi.push_back([surf, i, amp, e, r, eps, g, big_g, clamps](double u, double v) {
            const ParamPoint pt{u, v};
            const ParametricPatch& sheet = surf->sheets[i];
            const double d = distance_to_gamma(*surf, i, pt);
            const Eigen::Vector2d dd =
                param_gradient(sheet, [&](double a, double b) { return distance_to_gamma(*surf, i, {a, b}); }, pt);
            const double rho = cutoff_profile(d);
            const double drho = cutoff_profile_derivative(d);
            const double drho_r = cutoff_profile_derivative(d / r) / r;
            const double G = big_g(pt, d);
            Eigen::Vector2d grad = (drho * (std::pow(G, e) - 1.0) + drho_r) * dd;
            if (rho > 0.0) {
                const double b = extension_blend(d);
                const double t = surf->foot_parameter(i, pt);
                const double gt = g(t);
                Eigen::Vector2d dG = extension_blend_derivative(d) * (gt - 1.0) * dd;
                if (b > 0.0) {
                    const auto& cv = surf->curve;
                    const double h = 1e-4 * cv.length_param();
                    const double dgt = derivative_1d(g, t, h, cv.t0, cv.t1);
                    Eigen::Vector2d dt = Eigen::Vector2d::Zero();
                    dt[sheet.along_u() ? 0 : 1] = 1.0 / surf->ids[i].scale;
                    dG += b * dgt * dt;
                }
                double Gc = G;
                if (Gc < eps) {
                    Gc = eps;
                    ++*clamps;
                }
                grad += rho * e * std::pow(Gc, e - 1.0) * dG;
            }
            return Eigen::Vector2d(amp * grad);
        });
    }

    // sign(φ_i)|A_i|^{p−1}|φ_i|^p = (Π_j |A_j|^{p−1}) c_i on Γ, with |A_flat|^{p−1} := 1.
    for (double t : rule.t) {
        double prod = 1.0;
        std::vector<double> a(q, 1.0);
        for (std::size_t j = 0; j < q; ++j)
            if (!out.flat[j]) {
                a[j] = norm_a_at_gamma(m, j, t);
                prod *= std::pow(a[j], p - 1);
            }
        for (std::size_t i = 0; i < q; ++i) {
            const double phi = boundary_trace(m, out.field, i, t);
            const double lhs = (phi < 0 ? -1.0 : 1.0) * (out.flat[i] ? 1.0 : std::pow(a[i], p - 1)) *
                               std::pow(std::abs(phi), p);
            out.identity_residual = std::max(out.identity_residual, std::abs(lhs - prod * out.c[i]));
        }
    }
    if (out.identity_residual > 1e-8)
        throw Error(Errc::IncompatibleField, "lp_verifier",
                    "test function misses the boundary identity by " + std::to_string(out.identity_residual));
    return out;
}

struct LpReport {
    double p = 0.0;
    double r = 0.0;
    LpVariant variant = LpVariant::eq7;
    bool rotate_90 = false;
    double lhs = 0.0;
    double I = 0.0;   ///< Σθ∫|∇φ|²|A|^{2p−2}|φ|^{2p−2}
    double II = 0.0;  ///< Σθ∫_Γ (p−1)/2 |τ log|A|| |A|^{2p−2}|φ|^{2p}
    double III = 0.0; ///< Σθ∫_Γ H_Γ·τ |A|^{2p−2}|φ|^{2p}
    double J = 0.0;   ///< Σθ∫|∇φ|^{2p}
    double I1 = 0.0;  ///< part of J with d_Γ < 2
    double I2 = 0.0;  ///< part of J with r <= d_Γ <= 2r
    double rhs_eq7 = 0.0;
    double rhs_eq8 = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    std::size_t clamp_count = 0;
    std::size_t flat_hits = 0;
    double max_tau_log_A = 0.0;
    double outer_edge_max = 0.0; ///< max |φ| on edges away from Γ
    std::vector<double> c;
    double identity_residual = 0.0;
    std::vector<double> trace_t;
    std::vector<std::vector<double>> trace_integrand; ///< [k][i] = H_Γ·τ_i |A_i|^{2p−2}|φ_i|^{2p}
};

inline LpReport lp_sides(const MultiJunctionSurface& m, const JunctionScalarField& phi, const LpParams& lp,
                         std::optional<std::vector<bool>> flat_hint = std::nullopt)
{
    validate(lp);
    const std::size_t q = m.q();
    const double p = lp.p, r = lp.r, eps = lp.eps_A;
    const std::vector<bool> flat = flat_hint ? *flat_hint : flat_sheets(m, lp.flat_tolerance);
    LpReport rep;
    rep.p = p;
    rep.r = r;
    rep.variant = lp.variant;
    rep.rotate_90 = lp.rotate_90;

    for (std::size_t i = 0; i < q; ++i) {
        const ParametricPatch& sheet = m.sheets[i];
        const SheetGrid grid = build_grid(sheet, lp.quad);
        const std::size_t n = grid.nodes.size();
        std::vector<std::array<double, 5>> vals(n);
        parallel_for(n, [&](std::size_t k) {
            const SheetNode& node = grid.nodes[k];
            const double f = phi.value(i, node.p);
            const Vec3 gr = surface_gradient(node.shape, phi.param_grad(sheet, i, node.p));
            const double g2 = gr.squaredNorm();
            const double a = flat[i] ? 0.0 : node.shape.norm_a();
            const double d = distance_to_gamma(m, i, node.p);
            const double jp = std::pow(g2, p);
            vals[k] = {std::pow(a * std::abs(f), 2 * p), g2 * std::pow(a * std::abs(f), 2 * p - 2), jp,
                       d < 2.0 ? jp : 0.0, (d >= r && d <= 2 * r) ? jp : 0.0};
        });
        std::array<double, 5> s{};
        for (std::size_t k = 0; k < n; ++k)
            for (int c = 0; c < 5; ++c) {
                if (!std::isfinite(vals[k][c]))
                    throw Error(Errc::NonFiniteIntegrand, "lp_verifier",
                                "interior term is not finite on sheet '" + sheet.name + "'");
                s[c] += grid.nodes[k].weight * vals[k][c];
            }
        const double th = m.densities[i];
        rep.lhs += th * s[0];
        rep.I += th * s[1];
        rep.J += th * s[2];
        rep.I1 += th * s[3];
        rep.I2 += th * s[4];

        // outer edges: the far side and non-periodic along ends
        const double extent = sheet.depth_extent();
        const auto [a0, a1] = sheet.along_range();
        for (int k = 0; k <= 32; ++k) {
            const double s_along = a0 + (a1 - a0) * k / 32.0;
            if (!sheet.far_edge_is_pole)
                rep.outer_edge_max = std::max(rep.outer_edge_max, std::abs(phi.value(i, sheet.at(s_along, extent))));
            if (!(sheet.along_u() && sheet.u_periodic) && k > 0) {
                const double dep = extent * k / 32.0;
                rep.outer_edge_max = std::max({rep.outer_edge_max, std::abs(phi.value(i, sheet.at(a0, dep))),
                                               std::abs(phi.value(i, sheet.at(a1, dep)))});
            }
        }
    }

    const GammaRule rule = gamma_rule(m.curve, lp.gamma_samples);
    const std::size_t nt = rule.t.size();
    rep.trace_t = rule.t;
    rep.trace_integrand.assign(nt, std::vector<double>(q, 0.0));
    std::vector<std::vector<double>> two(nt, std::vector<double>(q, 0.0));
    std::vector<std::vector<double>> taus(nt, std::vector<double>(q, 0.0));
    std::vector<std::size_t> clamps(nt, 0), hits(nt, 0);
    parallel_for(nt, [&](std::size_t k) {
        const double t = rule.t[k];
        const Vec3 hg = gamma_curvature(m, t);
        for (std::size_t i = 0; i < q; ++i) {
            if (flat[i]) {
                ++hits[k];
                continue;
            }
            double a = norm_a_at_gamma(m, i, t);
            if (a < eps) {
                a = eps;
                ++clamps[k];
            }
            const double f = boundary_trace(m, phi, i, t);
            const double w = std::pow(a, 2 * p - 2) * std::pow(std::abs(f), 2 * p);
            const double tl = tau_log_A(m, i, t, eps, &clamps[k]);
            taus[k][i] = tl;
            two[k][i] = 0.5 * (p - 1) * std::abs(tl) * w;
            rep.trace_integrand[k][i] = hg.dot(conormal(m, i, t)) * w;
        }
    });
    for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t i = 0; i < q; ++i) {
            if (!std::isfinite(two[k][i]) || !std::isfinite(rep.trace_integrand[k][i]))
                throw Error(Errc::NonFiniteIntegrand, "lp_verifier", "boundary term is not finite");
            rep.II += rule.weight[k] * m.densities[i] * two[k][i];
            rep.III += rule.weight[k] * m.densities[i] * rep.trace_integrand[k][i];
            rep.max_tau_log_A = std::max(rep.max_tau_log_A, std::abs(taus[k][i]));
        }
        rep.clamp_count += clamps[k];
        rep.flat_hits += hits[k];
    }

    rep.rhs_eq7 = lp.C * rep.I + rep.II - rep.III;
    rep.rhs_eq8 = lp.C1 * rep.J + lp.C2 * (2 * rep.II - rep.III);
    rep.rhs = lp.variant == LpVariant::eq7 ? rep.rhs_eq7 : rep.rhs_eq8;
    rep.ratio = rep.rhs != 0.0 ? rep.lhs / rep.rhs : (rep.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return rep;
}

/// Builds the test function for lp and evaluates both sides.
inline LpReport lp_suite(const MultiJunctionSurface& m, const LpParams& lp)
{
    const SsyTestFunction tf = build_ssy_test_function(m, lp);
    LpReport rep = lp_sides(m, tf.field, lp, tf.flat);
    rep.c = tf.c;
    rep.identity_residual = tf.identity_residual;
    rep.clamp_count += tf.clamps->load();
    return rep;
}

struct WhiteCheck {
    double boundary_term = 0.0;   ///< ∫_Γ −H_Γ·τ_i
    double total_curvature = 0.0; ///< ∫_{Σ_i} −K
    bool holds = false;
    bool applicable = true; ///< false for compact sheets (far edge collapses to a pole)
};

inline WhiteCheck white_inequality_check(const MultiJunctionSurface& m, std::size_t i, const QuadratureSpec& spec = {},
                                         int gamma_samples = 256, double tolerance = 1e-8)
{
    WhiteCheck w;
    const GammaRule rule = gamma_rule(m.curve, gamma_samples);
    for (std::size_t k = 0; k < rule.t.size(); ++k)
        w.boundary_term -= rule.weight[k] * gamma_curvature(m, rule.t[k]).dot(conormal(m, i, rule.t[k]));
    w.total_curvature =
        integrate_patch(m.sheets[i], [](const ParamPoint&, const ShapeData& s) { return -s.gauss_curv; }, spec);
    w.holds = w.boundary_term <= w.total_curvature + tolerance;
    w.applicable = !m.sheets[i].far_edge_is_pole;
    return w;
}

} // namespace mjs
