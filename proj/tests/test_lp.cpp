#include "mjs/catalog.hpp"
#include "mjs/lp.hpp"

#include <catch_amalgamated.hpp>

using namespace mjs;
using Catch::Approx;

namespace {

template <class F>
Errc error_kind(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return Errc::IOError;
}

const MultiJunctionSurface& y_catenoid()
{
    static const auto m = make_y_catenoid(1.0, 5.0);
    return m;
}

} // namespace

TEST_CASE("boundary g")
{
    const auto& m = y_catenoid();
    const auto np = solve_neck(1.0);
    const double neck = std::sqrt(2.0) / (np.c * std::pow(std::cosh(np.a), 2));
    const auto flat = flat_sheets(m);
    CHECK(flat == std::vector<bool>{true, false, false});
    for (double t : {0.0, 2.5}) {
        CHECK(boundary_g(m, 0, t, flat) == Approx(neck * neck).epsilon(1e-10));
        CHECK(boundary_g(m, 1, t, flat) == Approx(neck).epsilon(1e-10));
    }
    const auto fy = make_flat_y(3, {}, 2.0, 1.0);
    CHECK(boundary_g(fy, 1, 0.3) == 1.0);
}

TEST_CASE("extension of g")
{
    const auto m = make_y_catenoid(1.0, 4.0);
    const auto one = extend_g(m, 1, [](double) { return 1.0; });
    CHECK(one(0.4, 1.0) == 1.0);
    const double t0 = 1.0;
    const auto bump = extend_g(m, 1, [t0](double t) { return (t - t0) * (t - t0); });
    const auto& s = m.sheets[1];
    CHECK(bump(t0, s.domain.v0) == 0.0);
    for (int a = 0; a <= 40; ++a)
        for (int b = 1; b <= 20; ++b) {
            const ParamPoint p{2 * kPi * a / 40, s.domain.v0 + 0.5 * b / 20};
            CHECK(bump(p.u, p.v) > 0.0);
        }
    const double v_far = std::asinh(std::sinh(s.domain.v0) + 2.5 / solve_neck(1.0).c);
    CHECK(bump(0.3, v_far) == 1.0);
}

TEST_CASE("τ(log|A|)")
{
    const auto half = make_catenoid_half(1.0, 2.0);
    CHECK(std::abs(tau_log_A(half, 0, 0.5)) < 1e-9);
    const auto band = assemble("band", {detail::catenoid_patch("band", 1.0, -1.0, 1.0, {0, 2 * kPi, 1.0, 3.0})}, {1.0},
                               detail::circle_curve(std::cosh(1.0)), {Identification{1 / std::cosh(1.0), 0}});
    CHECK(tau_log_A(band, 0, 0.5) == Approx(2 * std::tanh(1.0) / std::cosh(1.0)).epsilon(1e-8));
    CHECK(tau_log_A(y_catenoid(), 0, 0.5, 1e-12, nullptr, true) == 0.0);
}

TEST_CASE("test function traces")
{
    const auto& m = y_catenoid();
    LpParams lp;
    lp.w0_vector = Vec3::UnitZ();
    const auto tf = build_ssy_test_function(m, lp);
    CHECK(tf.identity_residual <= 1e-8);
    CHECK(tf.c[0] * tf.c[1] < 0);
    CHECK(std::abs(tf.c[0]) == Approx(1.0));
    CHECK(std::abs(tf.c[1]) == Approx(0.5));

    // sign(φ)|A|^{p−1}|φ|^p is the normal component of (Π|A|^{p−1}) W₀
    JunctionScalarField psi;
    for (std::size_t i = 0; i < 3; ++i)
        psi.phi.push_back([&, i](double u, double v) {
            const double f = tf.field.value(i, {u, v});
            const double a = tf.flat[i] ? 1.0 : shape_quantities(m.sheets[i], {u, v}).norm_a();
            return (f < 0 ? -1.0 : 1.0) * std::pow(a, lp.p - 1) * std::pow(std::abs(f), lp.p);
        });
    CHECK(compatibility_solve(m, psi, 64).residual <= 1e-8);

    lp.p = 1.0001;
    const auto near_one = build_ssy_test_function(m, lp);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(boundary_trace(m, near_one.field, i, 0.7)) == Approx(std::abs(near_one.c[i])).epsilon(1e-3));

    lp.w0_vector.reset();
    lp.beta = 0.0;
    CHECK(error_kind([&] { build_ssy_test_function(m, lp); }) == Errc::ZeroAngleField);
}

TEST_CASE("test function gradient")
{
    const auto m = make_y_catenoid(1.0, 5.0);
    const auto tf = build_ssy_test_function(m, LpParams{});
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& s = m.sheets[i];
        for (double frac : {0.05, 0.2, 0.5}) {
            const ParamPoint p{0.9, s.domain.v0 + frac * s.domain.height()};
            const Eigen::Vector2d fd = param_gradient(s, tf.field.phi[i], p);
            CHECK((tf.field.dphi[i](p.u, p.v) - fd).norm() <= 1e-5 * (1 + fd.norm()));
        }
    }
}

TEST_CASE("exponent range")
{
    const auto& m = y_catenoid();
    LpParams lp;
    lp.p = 1.5;
    CHECK(error_kind([&] { lp_suite(m, lp); }) == Errc::ExponentOutOfRange);
    lp.p = 1.3;
    lp.variant = LpVariant::eq8;
    CHECK(error_kind([&] { lp_suite(m, lp); }) == Errc::ExponentOutOfRange);
    lp.variant = LpVariant::eq7;
    CHECK_NOTHROW(build_ssy_test_function(m, lp));
}

TEST_CASE("zero field")
{
    const auto& m = y_catenoid();
    const auto rep = lp_sides(m, JunctionScalarField::zero(3), LpParams{});
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.rhs_eq8 == 0.0);
}

TEST_CASE("III flips sign under rotation of W0")
{
    const auto m = make_y_bent_helicoid(1, 0.3);
    LpParams lp;
    const auto a = lp_suite(m, lp);
    lp.rotate_90 = true;
    const auto b = lp_suite(m, lp);
    CHECK(std::abs(a.III) > 1e-3);
    CHECK(std::abs(a.III + b.III) <= 1e-8);
}

TEST_CASE("Y catenoid terms")
{
    const auto& m = y_catenoid();
    LpParams lp;
    std::vector<double> II;
    for (double p : {1.05, 1.1, 1.2}) {
        lp.p = p;
        const auto rep = lp_suite(m, lp);
        CHECK(std::isfinite(rep.I));
        CHECK(std::isfinite(rep.III));
        CHECK(rep.clamp_count == 0);
        CHECK(rep.flat_hits == 256);
        CHECK(rep.outer_edge_max == 0.0);
        CHECK(rep.identity_residual <= 1e-8);
        II.push_back(rep.II);
    }
    const double slope = std::log(II[2] / II[0]) / std::log(0.2 / 0.05);
    CHECK(std::abs(slope - 1.0) <= 0.2);

    // Σθ H_Γ·τ_i vanishes, so constant traces cancel in III
    for (double t : {0.0, 1.3, 4.0}) {
        double s = 0;
        for (std::size_t i = 0; i < 3; ++i)
            s += m.densities[i] * gamma_curvature(m, t).dot(conormal(m, i, t));
        CHECK(std::abs(s) <= 1e-10);
    }
}

TEST_CASE("White inequality")
{
    for (double V : {1.0, 2.0, 4.0}) {
        const auto w = white_inequality_check(make_catenoid_half(1.0, V), 0);
        CHECK(std::abs(w.boundary_term) <= 1e-6);
        CHECK(w.total_curvature == Approx(2 * kPi * std::tanh(V)).epsilon(1e-6));
        CHECK(w.holds);
    }
    const auto yc = make_y_catenoid(1.0);
    const auto neck = white_inequality_check(yc, 1);
    CHECK(neck.boundary_term == Approx(-kPi).epsilon(1e-10));
    CHECK(neck.holds);
    const auto disc = white_inequality_check(yc, 0);
    CHECK_FALSE(disc.applicable);
    const auto fy = make_flat_y(3, {}, 2.0, 1.0);
    const auto f = white_inequality_check(fy, 2);
    CHECK(f.boundary_term == 0.0);
    CHECK(f.holds);
}
