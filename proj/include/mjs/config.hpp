#pragma once

#include "mjs/catalog.hpp"
#include "mjs/lp.hpp"
#include "mjs/stability.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mjs {

using json = nlohmann::json;

struct Tolerances {
    double eps_imm = 1e-12;
    double eps_comp = 1e-8;
    double eps_A = 1e-12;
    double minimal = 1e-8;
};

struct StabilityConfig {
    int degree = 8;
    int constraint_samples = 0;
    int eigen_count = 4;
    int oracle_fields = 0; ///< number of probe fields checked against the FD oracle
    double oracle_step = 0.04;
};

struct OutputConfig {
    std::string dir = "mjs_out";
    bool csv = true;
};

struct RunConfig {
    CatalogSpec catalog;
    std::vector<std::string> suites{"diagnostics"};
    QuadratureSpec quad;
    int gamma_samples = 256;
    Tolerances tol;
    StabilityConfig stability;
    LpParams lp;
    OutputConfig output;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what)
{
    throw Error(Errc::ConfigError, "cli_reporting", what);
}

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        config_error(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            config_error("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(where + "." + key + ": " + e.what());
    }
}

inline void require_positive(double v, const std::string& name)
{
    if (!(v > 0.0))
        config_error(name + " must be positive");
}

} // namespace detail

inline RunConfig parse_config(const json& j)
{
    using detail::read;
    RunConfig c;
    detail::reject_unknown(j, "config", {"catalog", "suites", "quadrature", "gamma_samples", "tolerances", "stability",
                                         "lp", "output"});

    if (!j.contains("catalog"))
        detail::config_error("missing 'catalog'");
    const json& cat = j.at("catalog");
    detail::reject_unknown(cat, "catalog", {"kind", "q", "angles", "densities", "radius", "height", "rho0", "band",
                                            "annulus_width", "rotation", "v_max"});
    read(cat, "kind", c.catalog.kind, "catalog");
    read(cat, "q", c.catalog.q, "catalog");
    read(cat, "angles", c.catalog.angles, "catalog");
    read(cat, "densities", c.catalog.densities, "catalog");
    read(cat, "radius", c.catalog.radius, "catalog");
    read(cat, "height", c.catalog.height, "catalog");
    read(cat, "rho0", c.catalog.rho0, "catalog");
    read(cat, "band", c.catalog.band, "catalog");
    read(cat, "annulus_width", c.catalog.annulus_width, "catalog");
    read(cat, "rotation", c.catalog.rotation, "catalog");
    read(cat, "v_max", c.catalog.v_max, "catalog");
    for (double th : c.catalog.densities)
        detail::require_positive(th, "catalog.densities");

    read(j, "suites", c.suites, "config");
    const std::vector<std::string> order{"diagnostics", "stability", "lp"};
    for (const auto& s : c.suites)
        if (std::find(order.begin(), order.end(), s) == order.end())
            detail::config_error("unknown suite '" + s + "'");
    std::vector<std::string> sorted;
    for (const auto& s : order)
        if (std::find(c.suites.begin(), c.suites.end(), s) != c.suites.end())
            sorted.push_back(s);
    c.suites = sorted;

    if (j.contains("quadrature")) {
        const json& q = j.at("quadrature");
        detail::reject_unknown(q, "quadrature", {"n_u", "n_v", "panels_u", "panels_v"});
        read(q, "n_u", c.quad.n_u, "quadrature");
        read(q, "n_v", c.quad.n_v, "quadrature");
        read(q, "panels_u", c.quad.panels_u, "quadrature");
        read(q, "panels_v", c.quad.panels_v, "quadrature");
    }
    if (c.quad.n_u < 4 || c.quad.n_v < 4)
        detail::config_error("quadrature resolutions must be at least 4");
    if (c.quad.panels_u < 1 || c.quad.panels_v < 1)
        detail::config_error("quadrature panels must be at least 1");
    read(j, "gamma_samples", c.gamma_samples, "config");
    if (c.gamma_samples < 4)
        detail::config_error("gamma_samples must be at least 4");

    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        detail::reject_unknown(t, "tolerances", {"eps_imm", "eps_comp", "eps_A", "minimal"});
        read(t, "eps_imm", c.tol.eps_imm, "tolerances");
        read(t, "eps_comp", c.tol.eps_comp, "tolerances");
        read(t, "eps_A", c.tol.eps_A, "tolerances");
        read(t, "minimal", c.tol.minimal, "tolerances");
    }
    detail::require_positive(c.tol.eps_imm, "tolerances.eps_imm");
    detail::require_positive(c.tol.eps_comp, "tolerances.eps_comp");
    detail::require_positive(c.tol.eps_A, "tolerances.eps_A");
    detail::require_positive(c.tol.minimal, "tolerances.minimal");

    if (j.contains("stability")) {
        const json& s = j.at("stability");
        detail::reject_unknown(s, "stability",
                               {"degree", "constraint_samples", "eigen_count", "oracle_fields", "oracle_step"});
        read(s, "degree", c.stability.degree, "stability");
        read(s, "constraint_samples", c.stability.constraint_samples, "stability");
        read(s, "eigen_count", c.stability.eigen_count, "stability");
        read(s, "oracle_fields", c.stability.oracle_fields, "stability");
        read(s, "oracle_step", c.stability.oracle_step, "stability");
    }
    if (c.stability.degree < 0 || c.stability.constraint_samples < 0 || c.stability.eigen_count < 1)
        detail::config_error("invalid stability settings");
    if (c.stability.oracle_fields < 0 || c.stability.oracle_fields > static_cast<int>(probe_fields().size()))
        detail::config_error("stability.oracle_fields must be in [0, " + std::to_string(probe_fields().size()) + "]");
    detail::require_positive(c.stability.oracle_step, "stability.oracle_step");

    c.lp.eps_A = c.tol.eps_A;
    c.lp.gamma_samples = c.gamma_samples;
    if (j.contains("lp")) {
        const json& l = j.at("lp");
        detail::reject_unknown(l, "lp", {"p", "C", "C1", "C2", "variant", "r", "beta", "w0_vector", "rotate_90",
                                         "n_u", "n_v", "panels_v"});
        read(l, "p", c.lp.p, "lp");
        read(l, "C", c.lp.C, "lp");
        read(l, "C1", c.lp.C1, "lp");
        read(l, "C2", c.lp.C2, "lp");
        read(l, "r", c.lp.r, "lp");
        read(l, "beta", c.lp.beta, "lp");
        read(l, "rotate_90", c.lp.rotate_90, "lp");
        read(l, "n_u", c.lp.quad.n_u, "lp");
        read(l, "n_v", c.lp.quad.n_v, "lp");
        read(l, "panels_v", c.lp.quad.panels_v, "lp");
        std::string variant = "eq7";
        read(l, "variant", variant, "lp");
        if (variant == "eq7")
            c.lp.variant = LpVariant::eq7;
        else if (variant == "eq8")
            c.lp.variant = LpVariant::eq8;
        else
            detail::config_error("lp.variant must be eq7 or eq8");
        if (l.contains("w0_vector")) {
            std::vector<double> w;
            read(l, "w0_vector", w, "lp");
            if (w.size() != 3)
                detail::config_error("lp.w0_vector needs three components");
            c.lp.w0_vector = Vec3(w[0], w[1], w[2]);
        }
    }
    if (c.lp.quad.n_u < 4 || c.lp.quad.n_v < 4 || c.lp.quad.panels_v < 1)
        detail::config_error("lp quadrature resolutions must be at least 4");
    detail::require_positive(c.lp.C, "lp.C");
    detail::require_positive(c.lp.C1, "lp.C1");
    detail::require_positive(c.lp.C2, "lp.C2");

    if (j.contains("output")) {
        const json& o = j.at("output");
        detail::reject_unknown(o, "output", {"dir", "csv"});
        read(o, "dir", c.output.dir, "output");
        read(o, "csv", c.output.csv, "output");
    }
    if (c.output.dir.empty())
        detail::config_error("output.dir must not be empty");
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        detail::config_error("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        detail::config_error("cannot parse '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace mjs
