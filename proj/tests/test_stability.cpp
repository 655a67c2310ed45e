#include "mjs/catalog.hpp"
#include "mjs/stability.hpp"

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

double total_area(const MultiJunctionSurface& m)
{
    double a = 0;
    for (std::size_t i = 0; i < m.q(); ++i)
        a += m.densities[i] * integrate_patch(m.sheets[i], [](const ParamPoint&, const ShapeData&) { return 1.0; });
    return a;
}

} // namespace

TEST_CASE("area under variation")
{
    const auto m = make_y_catenoid(1.0);
    const VectorField shift = ambient_field([](const Vec3&) { return Vec3(0.3, -0.2, 0.5); });
    CHECK(area_under_variation(m, shift, 0.0) == Approx(total_area(m)).epsilon(1e-13));
    CHECK(area_under_variation(m, shift, 0.7) == Approx(total_area(m)).epsilon(1e-13));
    const VectorField squash = ambient_field([](const Vec3& x) { return Vec3(-x.x(), -x.y(), 0.0); });
    CHECK_THROWS_AS(area_under_variation(m, squash, 1.0), Error);
}

TEST_CASE("first variation")
{
    const auto yc = make_y_catenoid(1.0);
    const VectorField v = windowed_field(yc, [](const Vec3& x) { return Vec3(x.y(), 1.0 + x.x(), x.z()); });
    CHECK(std::abs(first_variation(yc, v)) < 1e-8);
    CHECK(first_variation(yc, ambient_field([](const Vec3&) { return Vec3::Zero().eval(); })) == 0.0);

    const double h = 1.0, r = 0.3;
    const auto flat = make_flat_y(3, {0, 2 * kPi / 3, 4 * kPi / 3}, 1.2, h, {1, 1, 2});
    const Vec3 dir = -Vec3(std::cos(4 * kPi / 3), std::sin(4 * kPi / 3), 0);
    const VectorField pull = [&](std::size_t i, const ParamPoint& p, const Vec3&) -> Vec3 {
        return cutoff_rho(flat, i, p, r) * dir;
    };
    const QuadratureSpec spec{32, 32, 1, 4};
    const double fv = first_variation(flat, pull, spec);
    CHECK(fv == Approx(2 * h).epsilon(1e-6));
    const double s = 1e-5;
    const double fd = (area_under_variation(flat, pull, s, spec) - area_under_variation(flat, pull, -s, spec)) / (2 * s);
    CHECK(fd == Approx(fv).epsilon(1e-6));
}

TEST_CASE("stability form on the flat Y is a Dirichlet energy")
{
    const auto m = make_flat_y(3, {}, 1.0, 1.0);
    const VectorField v = windowed_field(m, [](const Vec3& x) { return Vec3(1.0 + x.z(), 0.5 * x.y(), 0.0); });
    const auto phi = field_from_vector(m, v);
    const auto terms = stability_terms(m, phi);
    CHECK(terms.potential == 0.0);
    CHECK(std::abs(terms.boundary) < 1e-14);
    CHECK(stability_form(m, phi) == Approx(terms.dirichlet));
    CHECK(terms.dirichlet > 0);
    CHECK(stability_form(m, JunctionScalarField::zero(3)) == 0.0);

    const auto fd = second_variation_fd_oracle(m, v, 1.0);
    CHECK(std::abs(fd.value - terms.dirichlet) <= 1e-3 * terms.dirichlet);
}

TEST_CASE("Q is a quadratic form")
{
    const auto m = make_y_catenoid(1.0);
    const auto phi = field_from_vector(m, windowed_field(m, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0.0); }));
    const auto psi = field_from_vector(m, windowed_field(m, [](const Vec3& x) { return Vec3(0.0, x.z(), 1.0 + x.x()); }));
    auto combo = [](const JunctionScalarField& a, const JunctionScalarField& b, double s, double t) {
        JunctionScalarField c;
        for (std::size_t i = 0; i < a.phi.size(); ++i)
            c.phi.push_back([f = a.phi[i], g = b.phi[i], s, t](double u, double v) { return s * f(u, v) + t * g(u, v); });
        return c;
    };
    const double q1 = stability_form(m, phi);
    const double q2 = stability_form(m, psi);
    CHECK(stability_form(m, combo(phi, psi, 2.5, 0.0)) == Approx(6.25 * q1).epsilon(1e-9));
    const double qp = stability_form(m, combo(phi, psi, 1, 1));
    const double qm = stability_form(m, combo(phi, psi, 1, -1));
    CHECK(qp + qm == Approx(2 * q1 + 2 * q2).epsilon(1e-8));
}

TEST_CASE("stability form preconditions")
{
    const auto m = make_y_catenoid(1.0);
    JunctionScalarField bad;
    for (std::size_t i = 0; i < 3; ++i)
        bad.phi.push_back([s = m.sheets[i]](double u, double v) { return collar_window(s, {u, v}); });
    CHECK(error_kind([&] { stability_form(m, bad); }) == Errc::IncompatibleField);

    const auto lop = make_flat_y(3, {}, 1.0, 1.0, {1, 1, 2});
    CHECK(error_kind([&] { stability_form(lop, JunctionScalarField::zero(3)); }) == Errc::NotMinimal);

    const auto trans = field_from_vector(m, ambient_field([](const Vec3&) { return Vec3::UnitZ(); }));
    CHECK(error_kind([&] { stability_form(m, trans); }) == Errc::NotCompactlySupported);
}

TEST_CASE("second variation oracle matches Q on the Y catenoid")
{
    const auto m = make_y_catenoid(1.0);
    const std::vector<std::function<Vec3(const Vec3&)>> fields = {
        [](const Vec3&) { return Vec3::UnitZ(); },
        [](const Vec3& x) { return Vec3((1 + 0.5 * x.x()) * x.x(), (1 + 0.5 * x.x()) * x.y(), 0.0); },
        [](const Vec3& x) { return Vec3(x.x() * x.z(), x.y() * x.z(), 1.0 + x.y()); },
        [](const Vec3& x) { return Vec3(-x.x(), -x.y(), 0.3 * x.x() * x.y()); },
    };
    for (const auto& f : fields) {
        const VectorField v = windowed_field(m, f);
        const auto fd = second_variation_fd_oracle(m, v, 1.0);
        const double q = stability_form(m, field_from_vector(m, v));
        CHECK(std::abs(fd.value - q) <= std::max(1e-3 * std::abs(q), 1e-6));
    }
}

TEST_CASE("oracle rejects translations")
{
    const auto m = make_y_catenoid(1.0);
    CHECK(error_kind([&] { second_variation_fd_oracle(m, ambient_field([](const Vec3&) { return Vec3::UnitX(); })); }) ==
          Errc::NotCompactlySupported);
}

TEST_CASE("oracle reports a step that is too large")
{
    const auto m = make_y_catenoid(1.0);
    const VectorField v = windowed_field(m, [](const Vec3& x) { return Vec3(x.x(), x.y(), 0.0); });
    CHECK(error_kind([&] { second_variation_fd_oracle(m, v, 1.0, 0.7); }) == Errc::StepTooLarge);
}

TEST_CASE("Rayleigh minimization")
{
    const auto yc = make_y_catenoid(1.0);
    BasisSpec spec;
    spec.degree = 6;
    const auto rep = minimize_rayleigh(yc, spec);
    CHECK(rep.lambda_min < 0);
    CHECK(rep.q_certificate < 0);
    CHECK(rep.certificate_holds);
    CHECK(rep.certificate_compatibility < 1e-10);
    CHECK(rep.mass_certificate == Approx(1.0).epsilon(1e-8));
    CHECK(rep.q_certificate == Approx(rep.lambda_min).epsilon(1e-6));

    const auto flat = make_flat_y(3, {}, 2.0, 1.0);
    for (int d : {2, 4, 6}) {
        spec.degree = d;
        CHECK(minimize_rayleigh(flat, spec).lambda_min >= -1e-8);
    }

    spec.degree = 0;
    spec.constraint_samples = 64;
    CHECK(error_kind([&] { minimize_rayleigh(yc, spec); }) == Errc::ConstraintRankFailure);
}

TEST_CASE("basis derivatives")
{
    const auto yc = make_y_catenoid(1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto b = SheetBasis::for_sheet(yc.sheets[i], 3);
        const ParamPoint p{0.7, yc.sheets[i].domain.v0 + 0.3};
        Eigen::VectorXd v0, du, dv, a, b1, c;
        b.eval_param(yc.sheets[i], p, v0, du, dv);
        const double h = 1e-6;
        b.eval_param(yc.sheets[i], {p.u + h, p.v}, a, b1, c);
        Eigen::VectorXd vm, x1, x2;
        b.eval_param(yc.sheets[i], {p.u - h, p.v}, vm, x1, x2);
        CHECK(((a - vm) / (2 * h) - du).norm() < 1e-6);
        b.eval_param(yc.sheets[i], {p.u, p.v + h}, a, b1, c);
        b.eval_param(yc.sheets[i], {p.u, p.v - h}, vm, x1, x2);
        CHECK(((a - vm) / (2 * h) - dv).norm() < 1e-6);
    }
}
