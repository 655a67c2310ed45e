#include "mjs/catalog.hpp"

#include <catch_amalgamated.hpp>

using namespace mjs;
using Catch::Approx;

namespace {

/// Two ruled sheets over the unit circle; the second one twists about Γ.
MultiJunctionSurface twisted_pair(double twist)
{
    auto ruled = [](std::string name, std::function<double(double)> psi) {
        ParametricPatch p;
        p.name = std::move(name);
        p.domain = {0, 2 * kPi, 0, 0.5};
        p.u_periodic = true;
        p.immersion = [psi](double u, double v) {
            const Vec3 er(std::cos(u), std::sin(u), 0);
            return Vec3(er + v * (std::cos(psi(u)) * er + std::sin(psi(u)) * Vec3::UnitZ()));
        };
        return p;
    };
    std::vector<ParametricPatch> sheets;
    sheets.push_back(ruled("flat", [](double) { return 0.0; }));
    sheets.push_back(ruled("twisted", [twist](double u) { return kPi / 2 + twist * std::sin(u); }));
    return assemble("twisted", std::move(sheets), {1.0, 1.0}, detail::circle_curve(1.0),
                    {Identification{}, Identification{}});
}

} // namespace

TEST_CASE("curvature of Γ")
{
    const auto cat = make_y_catenoid(1.0);
    for (double t : {0.0, 2.0}) {
        const Vec3 h = gamma_curvature(cat, t);
        CHECK(h.norm() == Approx(1.0));
        CHECK(std::abs(h.dot(cat.curve.tangent(t))) < 1e-10);
    }
    CHECK(gamma_curvature(make_flat_y(3, {}, 1, 1), 0.3).norm() == 0.0);
    CHECK(gamma_curvature(make_y_catenoid(2.0), 1.0).norm() == Approx(0.5));

    auto fd = detail::circle_curve(2.0);
    fd.d1 = nullptr;
    fd.d2 = nullptr;
    CHECK(fd.curvature_vector(1.0).norm() == Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(fd.curvature_vector(1.0).dot(fd.tangent(1.0))) < 1e-8);
}

TEST_CASE("unbalanced densities are flagged")
{
    const auto m = make_flat_y(3, {0, 2 * kPi / 3, 4 * kPi / 3}, 1, 1, {1, 1, 2});
    const auto d = minimality_residual(m);
    CHECK(d.max_conormal_sum == Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(d.minimal);
}

TEST_CASE("weighted curvature sum vanishes on minimal junctions")
{
    const auto d = minimality_residual(make_y_catenoid(1.0));
    CHECK(d.max_weighted_curvature_sum < 1e-8);
}

TEST_CASE("residuals are invariant under rigid motion")
{
    auto m = make_y_catenoid(1.0);
    const double base = minimality_residual(m).max_conormal_sum;
    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 shift(0.3, -1.0, 2.0);
    for (auto& s : m.sheets) {
        auto f = s.immersion;
        auto j = s.analytic_jet;
        s.immersion = [=](double u, double v) -> Vec3 { return R * f(u, v) + shift; };
        s.analytic_jet = [=](double u, double v) {
            Jet a = j(u, v);
            a.x = R * a.x + shift;
            a.xu = R * a.xu;
            a.xv = R * a.xv;
            a.xuu = R * a.xuu;
            a.xuv = R * a.xuv;
            a.xvv = R * a.xvv;
            return a;
        };
    }
    auto g = m.curve.gamma;
    auto d1 = m.curve.d1;
    auto d2 = m.curve.d2;
    m.curve.gamma = [=](double t) -> Vec3 { return R * g(t) + shift; };
    m.curve.d1 = [=](double t) -> Vec3 { return R * d1(t); };
    m.curve.d2 = [=](double t) -> Vec3 { return R * d2(t); };
    CHECK(std::abs(minimality_residual(m).max_conormal_sum - base) < 1e-12);
}

TEST_CASE("conormals vary continuously")
{
    const auto m = make_y_bent_helicoid(1, 0.3);
    const int n = 512;
    for (std::size_t i = 0; i < 3; ++i) {
        double worst = 0;
        for (int k = 0; k < n; ++k) {
            const double t0 = 2 * kPi * k / n, t1 = 2 * kPi * (k + 1) / n;
            worst = std::max(worst, (conormal(m, i, t1) - conormal(m, i, t0)).norm() / (t1 - t0));
        }
        CHECK(worst < 5.0);
    }
}

TEST_CASE("twisted pair has no equilibrium angles")
{
    const auto bad = equilibrium_angles_check(twisted_pair(0.3), 128);
    CHECK_FALSE(bad.is_equilibrium);
    CHECK(bad.max_deviation > 1e-6);
    const auto good = equilibrium_angles_check(twisted_pair(0.0), 128);
    CHECK(good.is_equilibrium);
    CHECK(good.angles(0, 1) == Approx(kPi / 2).epsilon(1e-8));
}

TEST_CASE("assembly validation")
{
    auto m = make_y_catenoid(1.0);
    CHECK_THROWS_AS(assemble("bad", m.sheets, {1.0, 1.0, 1.0}, m.curve, {Identification{1.0, 0.3}, m.ids[1], m.ids[2]}),
                    Error);
    try {
        assemble("bad", m.sheets, {1.0, 1.0, 1.0}, m.curve, {Identification{1.0, 0.3}, m.ids[1], m.ids[2]});
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::JunctionMismatch);
    }
    try {
        assemble("bad", m.sheets, {1.0, 0.0, 1.0}, m.curve, m.ids);
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::InvalidArgument);
    }
}

TEST_CASE("distance to Γ")
{
    const auto flat = make_flat_y(3, {}, 2.0, 1.0);
    CHECK(distance_to_gamma(flat, 1, {0.2, 1.3}) == Approx(1.3));
    CHECK(distance_to_gamma(flat, 1, {0.2, 0.0}) == 0.0);

    MultiJunctionSurface band;
    band.sheets.push_back(make_catenoid_band(1.0, {0.0, 1.5}));
    band.ids.push_back({});
    band.densities.push_back(1.0);
    CHECK(distance_to_gamma(band, 0, {0.4, 1.0}) == Approx(std::sinh(1.0)).epsilon(1e-14));
    auto generic = band;
    generic.sheets[0].distance = nullptr;
    CHECK(distance_to_gamma(generic, 0, {0.4, 1.0}) == Approx(std::sinh(1.0)).epsilon(1e-12));

    // grid Dijkstra: an upper bound that tightens under doubling
    const ParamPoint p{0.0, 1.0};
    double prev = 1e300;
    for (int n : {24, 48, 96}) {
        const double d = grid_distance(band, 0, p, n);
        CHECK(d >= std::sinh(1.0) - 1e-9);
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
    CHECK(prev == Approx(std::sinh(1.0)).epsilon(0.02));

    const auto yc = make_y_catenoid(1.0);
    const auto np = solve_neck(1.0);
    const double v = np.a + 0.8;
    CHECK(distance_to_gamma(yc, 1, {1.0, v}) == Approx(np.c * (std::sinh(v) - std::sinh(np.a))));
    CHECK(distance_to_gamma(yc, 0, {1.0, 0.4}) == Approx(0.4));
}
