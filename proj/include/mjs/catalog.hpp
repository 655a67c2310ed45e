#pragma once

#include "mjs/fourier.hpp"
#include "mjs/junction.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mjs {

namespace detail {

inline JunctionCurve circle_curve(double radius)
{
    JunctionCurve c;
    c.topology = JunctionCurve::Topology::closed;
    c.t0 = 0.0;
    c.t1 = 2 * kPi * radius;
    c.gamma = [radius](double t) {
        return Vec3(radius * std::cos(t / radius), radius * std::sin(t / radius), 0.0);
    };
    c.d1 = [radius](double t) { return Vec3(-std::sin(t / radius), std::cos(t / radius), 0.0); };
    c.d2 = [radius](double t) -> Vec3 {
        return Vec3(-std::cos(t / radius), -std::sin(t / radius), 0.0) / radius;
    };
    return c;
}

inline JunctionCurve z_axis_segment(double half_height)
{
    JunctionCurve c;
    c.topology = JunctionCurve::Topology::line;
    c.t0 = -half_height;
    c.t1 = half_height;
    c.gamma = [](double t) { return Vec3(0.0, 0.0, t); };
    c.d1 = [](double) { return Vec3::UnitZ(); };
    c.d2 = [](double) { return Vec3::Zero(); };
    return c;
}

/// Catenoid (c cosh v cos u, c cosh v sin u, zsign (c v + shift)).
inline ParametricPatch catenoid_patch(std::string name, double c, double shift, double zsign, Rect domain)
{
    ParametricPatch p;
    p.name = std::move(name);
    p.domain = domain;
    p.immersion = [=](double u, double v) {
        return Vec3(c * std::cosh(v) * std::cos(u), c * std::cosh(v) * std::sin(u), zsign * (c * v + shift));
    };
    p.analytic_jet = [=](double u, double v) {
        const double ch = std::cosh(v), sh = std::sinh(v), cu = std::cos(u), su = std::sin(u);
        Jet j;
        j.x = Vec3(c * ch * cu, c * ch * su, zsign * (c * v + shift));
        j.xu = Vec3(-c * ch * su, c * ch * cu, 0.0);
        j.xv = Vec3(c * sh * cu, c * sh * su, zsign * c);
        j.xuu = Vec3(-c * ch * cu, -c * ch * su, 0.0);
        j.xuv = Vec3(-c * sh * su, c * sh * cu, 0.0);
        j.xvv = Vec3(c * ch * cu, c * ch * su, 0.0);
        return j;
    };
    p.u_periodic = std::abs(domain.width() - 2 * kPi) < 1e-12;
    const double v0 = domain.v0;
    p.distance = [=](double, double v) { return c * std::abs(std::sinh(v) - std::sinh(v0)); };
    return p;
}

/// Flat polar sheet: radius(v) = base + dir * v around the z-axis in z = 0.
inline ParametricPatch polar_plane_patch(std::string name, double base, double dir, double depth,
                                         bool pole)
{
    ParametricPatch p;
    p.name = std::move(name);
    p.domain = {0.0, 2 * kPi, 0.0, depth};
    p.immersion = [=](double u, double v) {
        const double r = base + dir * v;
        return Vec3(r * std::cos(u), r * std::sin(u), 0.0);
    };
    p.analytic_jet = [=](double u, double v) {
        const double r = base + dir * v, cu = std::cos(u), su = std::sin(u);
        Jet j;
        j.x = Vec3(r * cu, r * su, 0.0);
        j.xu = Vec3(-r * su, r * cu, 0.0);
        j.xv = Vec3(dir * cu, dir * su, 0.0);
        j.xuu = Vec3(-r * cu, -r * su, 0.0);
        j.xuv = Vec3(-dir * su, dir * cu, 0.0);
        return j;
    };
    p.u_periodic = true;
    p.far_edge_is_pole = pole;
    p.distance = [](double, double v) { return v; };
    return p;
}

} // namespace detail

/// q vertical half-strips around the z-axis segment |z| <= height.
inline MultiJunctionSurface make_flat_y(int q, std::vector<double> angles, double radius, double height,
                                        std::vector<double> densities = {})
{
    if (q < 2)
        throw Error(Errc::InvalidArgument, "surface_catalog", "flat_y needs q >= 2");
    if (!(radius > 0.0) || !(height > 0.0))
        throw Error(Errc::InvalidArgument, "surface_catalog", "radius and height must be positive");
    if (angles.empty())
        for (int i = 0; i < q; ++i)
            angles.push_back(2 * kPi * i / q);
    if (static_cast<int>(angles.size()) != q)
        throw Error(Errc::InvalidAngles, "surface_catalog", "expected one angle per sheet");
    for (int i = 0; i < q; ++i) {
        for (int j = i + 1; j < q; ++j) {
            const double diff = std::remainder(angles[i] - angles[j], 2 * kPi);
            if (std::abs(diff) < 1e-12)
                throw Error(Errc::InvalidAngles, "surface_catalog", "angles coincide modulo 2π");
        }
    }
    if (densities.empty())
        densities.assign(q, 1.0);

    std::vector<ParametricPatch> sheets;
    std::vector<Identification> ids;
    for (int i = 0; i < q; ++i) {
        const Vec3 dir(std::cos(angles[i]), std::sin(angles[i]), 0.0);
        ParametricPatch p;
        p.name = "half_plane_" + std::to_string(i);
        p.domain = {-height, height, 0.0, radius};
        p.immersion = [dir](double u, double v) { return Vec3(v * dir + u * Vec3::UnitZ()); };
        p.analytic_jet = [dir](double u, double v) {
            Jet j;
            j.x = v * dir + u * Vec3::UnitZ();
            j.xu = Vec3::UnitZ();
            j.xv = dir;
            return j;
        };
        p.distance = [](double, double v) { return v; };
        sheets.push_back(std::move(p));
        ids.push_back({1.0, 0.0});
    }
    auto m = assemble("flat_y", std::move(sheets), std::move(densities), detail::z_axis_segment(height),
                      std::move(ids));
    orient_consistently(m);
    return m;
}

inline ParametricPatch make_catenoid_band(double c, std::pair<double, double> v_range,
                                          std::pair<double, double> u_range = {0.0, 2 * kPi})
{
    if (!(c > 0.0))
        throw Error(Errc::InvalidArgument, "surface_catalog", "catenoid neck scale must be positive");
    if (!(v_range.second > v_range.first) || !(u_range.second > u_range.first))
        throw Error(Errc::InvalidArgument, "surface_catalog", "empty parameter range");
    return detail::catenoid_patch("catenoid_band", c, 0.0, 1.0,
                                  {u_range.first, u_range.second, v_range.first, v_range.second});
}

/// Catenoid piece v in [0, V] bounded by its waist circle of radius c.
inline MultiJunctionSurface make_catenoid_half(double c, double V)
{
    std::vector<ParametricPatch> sheets{make_catenoid_band(c, {0.0, V})};
    sheets[0].name = "catenoid_half";
    return assemble("catenoid_half", std::move(sheets), {1.0}, detail::circle_curve(c),
                    {Identification{1.0 / c, 0.0}});
}

/// Neck parameters for a catenoid meeting the circle of radius rho0 in z = 0
/// with meridian slope 60° from the horizontal.
struct NeckParameters {
    double c = 0.0;     ///< neck scale
    double b = 0.0;     ///< vertical shift of the waist
    double a = 0.0;     ///< catenoid parameter of the junction circle
    double slope = 0.0; ///< dz/dr of the meridian at Γ
};

inline NeckParameters solve_neck(double rho0)
{
    if (!(rho0 > 0.0))
        throw Error(Errc::InvalidArgument, "surface_catalog", "junction radius must be positive");
    // Tangency: dr/dz = sinh(a) = cot 60°, radius: c cosh(a) = rho0.
    const double target = 1.0 / std::sqrt(3.0);
    double a = 0.5;
    for (int it = 0; it < 50; ++it) {
        const double f = std::sinh(a) - target;
        a -= f / std::cosh(a);
        if (std::abs(f) < 1e-16)
            break;
    }
    NeckParameters np;
    np.a = a;
    np.c = rho0 / std::cosh(a);
    np.b = -np.c * a;
    np.slope = 1.0 / std::sinh(a);
    if (!std::isfinite(np.c) || std::abs(std::sinh(a) - target) > 1e-14 ||
        std::abs(np.c * std::cosh(a) - rho0) > 1e-12 * rho0)
        throw Error(Errc::SolveFailure, "surface_catalog", "neck tangency solve did not converge");
    return np;
}

enum class YCatenoidKind { inner_disc, outer_annulus };

/// Disc (or annulus) plus two catenoid pieces meeting a circle at mutual 120°.
/// `band` is the catenoid-parameter height of each neck piece; `annulus_width`
/// only applies to the outer kind.
inline MultiJunctionSurface make_y_catenoid(double rho0, double band = 2.0,
                                            YCatenoidKind kind = YCatenoidKind::inner_disc,
                                            double annulus_width = 4.0)
{
    if (!(band > 0.0))
        throw Error(Errc::InvalidArgument, "surface_catalog", "band height must be positive");
    const NeckParameters np = solve_neck(rho0);
    std::vector<ParametricPatch> sheets;
    if (kind == YCatenoidKind::inner_disc) {
        sheets.push_back(detail::polar_plane_patch("disc", rho0, -1.0, rho0, true));
        sheets.push_back(detail::catenoid_patch("upper_neck", np.c, np.b, 1.0,
                                                {0.0, 2 * kPi, np.a, np.a + band}));
        sheets.push_back(detail::catenoid_patch("lower_neck", np.c, np.b, -1.0,
                                                {0.0, 2 * kPi, np.a, np.a + band}));
    } else {
        sheets.push_back(detail::polar_plane_patch("annulus", rho0, 1.0, annulus_width, false));
        sheets.push_back(detail::catenoid_patch("upper_neck", np.c, np.c * np.a, 1.0,
                                                {0.0, 2 * kPi, -np.a, -np.a + band}));
        sheets.push_back(detail::catenoid_patch("lower_neck", np.c, np.c * np.a, -1.0,
                                                {0.0, 2 * kPi, -np.a, -np.a + band}));
    }
    std::vector<Identification> ids(3, Identification{1.0 / rho0, 0.0});
    auto m = assemble(kind == YCatenoidKind::inner_disc ? "y_catenoid" : "y_catenoid_outer",
                      std::move(sheets), {1.0, 1.0, 1.0}, detail::circle_curve(rho0), std::move(ids));
    orient_consistently(m);
    return m;
}

/// Björling continuation X(w) = Re γ(w) + Im ∫_0^w ν × γ', w = u + iv, for
/// trigonometric-polynomial data. The junction edge is v = v_range.first.
inline ParametricPatch bjorling_extend(const FourierCurve& curve, const FourierCurve& normal,
                                       std::pair<double, double> v_range,
                                       std::pair<double, double> u_range = {0.0, 2 * kPi},
                                       std::string name = "bjorling", double tolerance = 1e-8)
{
    const FourierCurve d1 = curve.derivative();
    const int checks = 256;
    for (int k = 0; k < checks; ++k) {
        const double t = u_range.first + (u_range.second - u_range.first) * k / checks;
        const Vec3 n = normal(t);
        const double ortho = std::abs(n.dot(d1(t)));
        const double unit = std::abs(n.norm() - 1.0);
        if (ortho > tolerance || unit > tolerance)
            throw Error(Errc::NotOrthonormal, "surface_catalog",
                        "normal field fails orthonormality at t = " + std::to_string(t));
    }
    const FourierCurve d2 = d1.derivative();
    const FourierCurve h = cross(normal, d1);
    const FourierCurve dh = h.derivative();
    const cplx I(0.0, 1.0);

    ParametricPatch p;
    p.name = std::move(name);
    p.domain = {u_range.first, u_range.second, v_range.first, v_range.second};
    p.immersion = [=](double u, double v) {
        const cplx w(u, v);
        return Vec3(curve.eval(w).real() + antiderivative(h, w).imag());
    };
    p.analytic_jet = [=](double u, double v) {
        const cplx w(u, v);
        const CVec3 f1 = d1.eval(w) - I * h.eval(w);
        const CVec3 f2 = d2.eval(w) - I * dh.eval(w);
        Jet j;
        j.x = curve.eval(w).real() + antiderivative(h, w).imag();
        j.xu = f1.real();
        j.xv = -f1.imag();
        j.xuu = f2.real();
        j.xuv = -f2.imag();
        j.xvv = -f2.real();
        return j;
    };
    return p;
}

inline FourierCurve unit_circle_curve()
{
    FourierCurve c;
    c.add(1.0, Vec3::UnitX(), Vec3::UnitY());
    return c;
}

/// cos(ψ(u)) e_r(u) + sin(ψ(u)) e_z with ψ(u) = rate * u + phase.
inline FourierCurve rotating_normal(double rate, double phase)
{
    FourierCurve nu;
    auto add_cos = [&](double w, double ph, const Vec3& vec) {
        nu.add(w, std::cos(ph) * vec, -std::sin(ph) * vec);
    };
    auto add_sin = [&](double w, double ph, const Vec3& vec) {
        nu.add(w, std::sin(ph) * vec, std::cos(ph) * vec);
    };
    // cos ψ cos u = (cos(ψ+u) + cos(ψ-u))/2 ; cos ψ sin u = (sin(ψ+u) - sin(ψ-u))/2
    add_cos(rate + 1.0, phase, 0.5 * Vec3::UnitX());
    add_cos(rate - 1.0, phase, 0.5 * Vec3::UnitX());
    add_sin(rate + 1.0, phase, 0.5 * Vec3::UnitY());
    add_sin(rate - 1.0, phase, -0.5 * Vec3::UnitY());
    add_sin(rate, phase, Vec3::UnitZ());
    return nu;
}

/// Three Björling sheets over the unit circle whose normals turn at rate n/3
/// and stay 120° apart. For n not divisible by 3 the sheets join across
/// u = 2π into one surface that wraps Γ three times.
inline MultiJunctionSurface make_y_bent_helicoid(int n = 1, double v_max = 0.3)
{
    if (!(v_max > 0.0))
        throw Error(Errc::InvalidArgument, "surface_catalog", "v_max must be positive");
    const FourierCurve circle = unit_circle_curve();
    std::vector<ParametricPatch> sheets;
    for (int k = 0; k < 3; ++k) {
        auto p = bjorling_extend(circle, rotating_normal(n / 3.0, 2 * kPi * k / 3.0), {0.0, v_max},
                                 {0.0, 2 * kPi}, "bent_helicoid_" + std::to_string(k));
        p.u_periodic = (n % 3 == 0);
        sheets.push_back(std::move(p));
    }
    std::vector<Identification> ids(3, Identification{1.0, 0.0});
    auto m = assemble("y_bent_helicoid", std::move(sheets), {1.0, 1.0, 1.0}, detail::circle_curve(1.0),
                      std::move(ids));
    orient_consistently(m);
    return m;
}

/// Catalog entry as read from a run configuration.
struct CatalogSpec {
    std::string kind = "y_catenoid"; ///< flat_y | y_catenoid | y_catenoid_outer | y_bent_helicoid
    int q = 3;
    std::vector<double> angles;
    std::vector<double> densities;
    double radius = 2.0;
    double height = 1.0;
    double rho0 = 1.0;
    double band = 2.0;
    double annulus_width = 4.0;
    int rotation = 1;
    double v_max = 0.3;
};

inline MultiJunctionSurface make_from_spec(const CatalogSpec& s)
{
    if (s.kind == "flat_y")
        return make_flat_y(s.q, s.angles, s.radius, s.height, s.densities);
    if (s.kind == "y_catenoid")
        return make_y_catenoid(s.rho0, s.band);
    if (s.kind == "y_catenoid_outer")
        return make_y_catenoid(s.rho0, s.band, YCatenoidKind::outer_annulus, s.annulus_width);
    if (s.kind == "y_bent_helicoid")
        return make_y_bent_helicoid(s.rotation, s.v_max);
    throw Error(Errc::ConfigError, "surface_catalog", "unknown catalog kind '" + s.kind + "'");
}

} // namespace mjs
