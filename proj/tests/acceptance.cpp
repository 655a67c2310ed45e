#include "mjs/app.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace mjs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

int failures = 0;

void criterion(int n, const std::function<Outcome()>& body, double budget = 0.0)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0 && secs > budget) {
        o.pass = false;
        o.detail += fmt("; over the %.0f s budget", budget);
    }
    if (!o.pass)
        ++failures;
    std::printf("criterion %2d: %s  (%.2f s)  %s\n", n, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
}

double max_of(const std::vector<double>& v)
{
    double m = 0;
    for (double x : v)
        m = std::max(m, x);
    return m;
}

Outcome minimality()
{
    const auto flat = make_flat_y(3, {0, 2 * kPi / 3, 4 * kPi / 3}, 2.0, 1.0, {1, 1, 1});
    const auto df = minimality_residual(flat);
    const auto np = solve_neck(1.0);
    const bool neck_ok = std::abs(np.c - std::sqrt(3.0) / 2) <= 1e-14 &&
                         std::abs(np.b + std::sqrt(3.0) / 2 * std::asinh(1 / std::sqrt(3.0))) <= 1e-14;
    const auto dy = minimality_residual(make_y_catenoid(1.0), {}, 256);
    const bool pass = df.max_conormal_sum <= 1e-12 && max_of(df.max_mean_curvature) <= 1e-10 && neck_ok &&
                      dy.max_conormal_sum <= 1e-8;
    return {pass, fmt("flat |sum tau|=%.2e |H|=%.2e; y_catenoid |sum tau|=%.2e", df.max_conormal_sum,
                      max_of(df.max_mean_curvature), dy.max_conormal_sum)};
}

Outcome closed_forms()
{
    const auto band = make_catenoid_band(1.0, {0.0, 1.0});
    double worst_a = 0, worst_k = 0;
    for (int a = 0; a <= 16; ++a)
        for (int b = 0; b <= 16; ++b) {
            const ParamPoint p{2 * kPi * a / 16, b / 16.0};
            const ShapeData s = shape_quantities(band, p);
            worst_a = std::max(worst_a, std::abs(s.norm_a2 - 2 / std::pow(std::cosh(p.v), 4)));
            worst_k = std::max(worst_k, std::abs(s.norm_a2 + 2 * s.gauss_curv));
        }
    auto one = [](const ParamPoint&, const ShapeData&) { return 1.0; };
    const double area = integrate_patch(band, one, {32, 32});
    const double err = std::abs(area - kPi * (1 + std::sinh(2.0) / 2));
    return {worst_a <= 1e-8 && worst_k <= 1e-8 && err <= 1e-8,
            fmt("|A|^2 err=%.2e, |A|^2+2K=%.2e, area err=%.2e", worst_a, worst_k, err)};
}

Outcome oracle()
{
    const auto m = make_y_catenoid(1.0);
    const auto fields = probe_fields();
    int ok = 0;
    double worst = 0;
    for (const auto& f : fields) {
        const VectorField v = windowed_field(m, f);
        const double fd = second_variation_fd_oracle(m, v, 1.0).value;
        const double q = stability_form(m, field_from_vector(m, v));
        const double gap = std::abs(fd - q);
        worst = std::max(worst, gap);
        ok += gap <= std::max(1e-3 * std::abs(q), 1e-6);
    }
    return {ok >= 3 && ok == static_cast<int>(fields.size()),
            fmt("%.0f of %.0f fields agree, worst gap %.2e", ok, static_cast<double>(fields.size()), worst)};
}

Outcome instability()
{
    const auto m = make_y_catenoid(1.0);
    std::vector<double> lam;
    bool all_negative = true;
    StabilityReport last;
    for (int d : {8, 10, 12}) {
        BasisSpec spec;
        spec.degree = d;
        last = minimize_rayleigh(m, spec);
        lam.push_back(last.lambda_min);
        all_negative = all_negative && last.lambda_min < 0;
    }
    const double change = std::abs(lam[2] - lam[1]) / std::abs(lam[2]);
    return {all_negative && change <= 0.1 && last.q_certificate < 0 && last.certificate_holds,
            fmt("lambda(8,10,12)=%.8f %.8f %.8f, Q(phi*) at 2x quadrature=%.6f", lam[0], lam[1], lam[2],
                last.q_certificate)};
}

Outcome flat_stability()
{
    const auto m = make_flat_y(3, {}, 2.0, 1.0);
    double worst = 1e300;
    for (int d : {2, 4, 6, 8}) {
        BasisSpec spec;
        spec.degree = d;
        worst = std::min(worst, minimize_rayleigh(m, spec).lambda_min);
    }
    return {worst >= -1e-8, fmt("smallest lambda over degrees 2..8 = %.6f", worst)};
}

Outcome compatibility()
{
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> U(-1, 1);
    const auto yc = make_y_catenoid(1.0);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        Eigen::Matrix3d lin;
        Vec3 c0, w;
        for (int i = 0; i < 3; ++i) {
            c0[i] = U(gen);
            w[i] = U(gen);
            for (int j = 0; j < 3; ++j)
                lin(i, j) = U(gen);
        }
        const VectorField v = ambient_field([=](const Vec3& x) {
            return Vec3(c0 + lin * x + w * std::sin(x.x() + 2 * x.y() - x.z()));
        });
        worst = std::max(worst, compatibility_solve(yc, field_from_vector(yc, v), 64).residual);
    }

    const auto flat = make_flat_y(3, {0, 2 * kPi / 3, 4 * kPi / 3}, 2.0, 1.0);
    int agree = 0, zero_sum = 0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
        double a = U(gen), b = U(gen), c = U(gen);
        if (k % 2 == 0)
            c = -a - b;
        const bool sum_zero = std::abs(a + b + c) <= 1e-8;
        zero_sum += sum_zero;
        agree += compatibility_solve(flat, JunctionScalarField::constant({a, b, c}), 4).compatible == sum_zero;
    }
    return {worst <= 1e-10 && agree == trials && zero_sum > 0 && zero_sum < trials,
            fmt("round-trip residual %.2e; sum rule agrees on %.0f/%.0f triples (%.0f with zero sum)", worst, agree,
                trials, zero_sum)};
}

Outcome lp_machinery()
{
    const auto bh = make_y_bent_helicoid(1, 0.3);
    LpParams lp;
    const auto a = lp_suite(bh, lp);
    lp.rotate_90 = true;
    const auto b = lp_suite(bh, lp);
    const double flip = std::abs(a.III + b.III);

    const auto yc = make_y_catenoid(1.0, 5.0);
    LpParams q;
    std::vector<double> II;
    bool finite = true;
    long clamps = 0;
    for (double p : {1.05, 1.1, 1.2}) {
        q.p = p;
        const auto r = lp_suite(yc, q);
        finite = finite && std::isfinite(r.I) && std::isfinite(r.II) && std::isfinite(r.III);
        clamps += r.clamp_count;
        II.push_back(r.II);
    }
    // least squares slope of log II against log(p-1)
    const double x[3] = {std::log(0.05), std::log(0.1), std::log(0.2)};
    const double xm = (x[0] + x[1] + x[2]) / 3;
    double sy = 0;
    for (double v : II)
        sy += std::log(v) / 3;
    double num = 0, den = 0;
    for (int k = 0; k < 3; ++k) {
        num += (x[k] - xm) * (std::log(II[k]) - sy);
        den += (x[k] - xm) * (x[k] - xm);
    }
    const double slope = num / den;
    return {std::abs(a.III) > 1e-3 && flip <= 1e-8 && std::abs(slope - 1) <= 0.2 && finite && clamps == 0,
            fmt("III=%.5f, |III+III_rot|=%.2e, II slope=%.3f, clamps=%.0f", a.III, flip, slope,
                static_cast<double>(clamps))};
}

Outcome white()
{
    double worst_b = 0, worst_k = 0;
    for (double V : {1.0, 2.0, 4.0}) {
        const auto w = white_inequality_check(make_catenoid_half(1.0, V), 0);
        worst_b = std::max(worst_b, std::abs(w.boundary_term));
        worst_k = std::max(worst_k, std::abs(w.total_curvature - 2 * kPi * std::tanh(V)));
    }
    int checked = 0, held = 0, skipped = 0;
    auto sweep = [&](const MultiJunctionSurface& m) {
        for (std::size_t i = 0; i < m.q(); ++i) {
            const auto w = white_inequality_check(m, i);
            if (!w.applicable) {
                ++skipped;
                continue;
            }
            ++checked;
            held += w.holds;
        }
    };
    sweep(make_flat_y(3, {}, 2.0, 1.0));
    for (double V : {1.0, 2.0, 4.0}) {
        sweep(make_catenoid_half(1.0, V));
        sweep(make_y_catenoid(1.0, V));
        sweep(make_y_catenoid(1.5, V, YCatenoidKind::outer_annulus, 2.0));
        for (int n : {1, 3})
            sweep(make_y_bent_helicoid(n, V));
    }
    return {worst_b <= 1e-6 && worst_k <= 1e-6 && held == checked,
            fmt("catenoid half boundary=%.2e, curvature err=%.2e; holds on %.0f/%.0f sheets", worst_b, worst_k, held,
                checked) +
                fmt(" (%.0f compact sheets skipped)", skipped)};
}

Outcome bjorling()
{
    const auto m = make_y_bent_helicoid(1, 0.3);
    double circle = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (int k = 0; k < 64; ++k) {
            const double u = 2 * kPi * k / 64;
            circle = std::max(circle, (m.sheets[i].immersion(u, 0.0) - Vec3(std::cos(u), std::sin(u), 0)).norm());
        }
    const auto st = conormal_angles(m, 256);
    double angle = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            angle = std::max({angle, std::abs(st.mean(i, j) - 2 * kPi / 3), st.max_deviation(i, j)});
    double h = 0;
    for (int k = 0; k < 3; ++k) {
        const auto p = bjorling_extend(unit_circle_curve(), rotating_normal(1.0 / 3.0, 2 * kPi * k / 3.0),
                                       {-0.3, 0.3});
        for (const auto& n : build_grid(p, {24, 24}).nodes)
            h = std::max(h, n.shape.mean_curv.norm());
    }
    return {circle <= 1e-12 && angle <= 1e-6 && h <= 1e-6,
            fmt("circle err=%.2e, angle err=%.2e rad, |H|=%.2e", circle, angle, h)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / "mjs_acceptance";
    fs::remove_all(root);
    std::ostringstream log;
    for (const char* run : {"a", "b"}) {
        const fs::path cfg = root / (std::string(run) + ".json");
        fs::create_directories(root);
        std::ofstream(cfg) << R"({"catalog": {"kind": "y_catenoid", "band": 5.0},
            "suites": ["diagnostics", "stability", "lp"],
            "stability": {"degree": 6, "oracle_fields": 3},
            "output": {"dir": ")" + (root / run).string() + R"("}})";
        if (command_run(cfg.string(), log) != 0)
            return {false, std::string("run ") + run + " did not exit 0"};
    }
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        if (e.path().extension() != ".json")
            continue;
        ++files;
        same += slurp(e.path()) == slurp(root / "b" / e.path().filename());
    }
    return {files >= 3 && same == files, fmt("%.0f of %.0f JSON reports identical", same, files)};
}

} // namespace

int main()
{
    criterion(1, minimality, 5.0);
    criterion(2, closed_forms);
    criterion(3, oracle, 30.0);
    criterion(4, instability);
    criterion(5, flat_stability);
    criterion(6, compatibility);
    criterion(7, lp_machinery);
    criterion(8, white);
    criterion(9, bjorling);
    criterion(10, determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
