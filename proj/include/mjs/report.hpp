#pragma once

#include "mjs/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace mjs {

inline json to_json(const Eigen::MatrixXd& a)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            row.push_back(a(i, j));
        out.push_back(row);
    }
    return out;
}

inline json to_json(const QuadratureSpec& q)
{
    return {{"n_u", q.n_u}, {"n_v", q.n_v}, {"panels_u", q.panels_u}, {"panels_v", q.panels_v}};
}

inline json to_json(const CatalogSpec& s)
{
    return {{"kind", s.kind},     {"q", s.q},         {"angles", s.angles},       {"densities", s.densities},
            {"radius", s.radius}, {"height", s.height}, {"rho0", s.rho0},         {"band", s.band},
            {"annulus_width", s.annulus_width},         {"rotation", s.rotation}, {"v_max", s.v_max}};
}

inline json surface_json(const MultiJunctionSurface& m)
{
    json sheets = json::array();
    for (const auto& s : m.sheets)
        sheets.push_back(s.name);
    return {{"label", m.label}, {"q", m.q()}, {"densities", m.densities}, {"sheets", sheets}};
}

inline json to_json(const DiagnosticsReport& d)
{
    return {{"max_mean_curvature", d.max_mean_curvature},
            {"max_conormal_sum", d.max_conormal_sum},
            {"max_weighted_curvature_sum", d.max_weighted_curvature_sum},
            {"mean_angles", to_json(d.angles.mean)},
            {"angle_max_deviation", to_json(d.angles.max_deviation)},
            {"clamp_count", d.clamp_count},
            {"minimal", d.minimal}};
}

inline json to_json(const StabilityReport& r)
{
    return {{"degree", r.degree},
            {"basis_size", r.basis_size},
            {"constraint_count", r.constraint_count},
            {"constraint_rank", r.constraint_rank},
            {"admissible_dimension", r.admissible_dimension},
            {"dropped_directions", r.dropped_directions},
            {"quadrature", to_json(r.quad)},
            {"lambda_min", r.lambda_min},
            {"eigenvalues", r.eigenvalues},
            {"q_certificate", r.q_certificate},
            {"mass_certificate", r.mass_certificate},
            {"certificate_compatibility", r.certificate_compatibility},
            {"certificate_holds", r.certificate_holds},
            {"clamp_count", r.clamp_count}};
}

inline json to_json(const LpReport& r)
{
    return {{"p", r.p},
            {"r", r.r},
            {"variant", to_string(r.variant)},
            {"rotate_90", r.rotate_90},
            {"lhs", r.lhs},
            {"I", r.I},
            {"II", r.II},
            {"III", r.III},
            {"J", r.J},
            {"I1", r.I1},
            {"I2", r.I2},
            {"rhs_eq7", r.rhs_eq7},
            {"rhs_eq8", r.rhs_eq8},
            {"rhs", r.rhs},
            {"ratio", r.ratio},
            {"clamp_count", r.clamp_count},
            {"flat_hits", r.flat_hits},
            {"max_tau_log_A", r.max_tau_log_A},
            {"outer_edge_max", r.outer_edge_max},
            {"c", r.c},
            {"identity_residual", r.identity_residual}};
}

/// One named check. Only asserted checks decide the exit status.
struct Check {
    std::string name;
    bool asserted = true;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
};

inline json to_json(const std::vector<Check>& checks)
{
    json out = json::array();
    for (const auto& c : checks)
        out.push_back({{"name", c.name}, {"asserted", c.asserted}, {"passed", c.passed}, {"value", c.value},
                       {"limit", c.limit}});
    return out;
}

inline bool all_asserted_pass(const std::vector<Check>& checks)
{
    for (const auto& c : checks)
        if (c.asserted && !c.passed)
            return false;
    return true;
}

inline std::string format_double(double v)
{
    if (!std::isfinite(v))
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::IOError, "cli_reporting", "cannot write '" + path.string() + "'");
    return out;
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out)
        throw Error(Errc::IOError, "cli_reporting", "write failed for '" + path.string() + "'");
}

/// Plain CSV: a header and rows of numbers.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows)
{
    auto out = open_output(path);
    for (std::size_t k = 0; k < header.size(); ++k)
        out << (k ? "," : "") << header[k];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k)
            out << (k ? "," : "") << format_double(row[k]);
        out << '\n';
    }
    if (!out)
        throw Error(Errc::IOError, "cli_reporting", "write failed for '" + path.string() + "'");
}

struct MeshExport {
    std::size_t objects = 0;
    std::size_t vertices = 0;
    std::filesystem::path scalar_path;
};

/// Wavefront OBJ with one object per sheet over an (n+1)x(n+1) parameter grid.
/// With a scalar, writes `<path stem>.csv` holding vertex,sheet,value rows.
inline MeshExport export_mesh(const MultiJunctionSurface& m, const std::filesystem::path& path, int n = 16,
                              const JunctionScalarField* scalar = nullptr)
{
    if (n < 1)
        throw Error(Errc::InvalidArgument, "cli_reporting", "mesh grid must have at least one cell");
    auto out = open_output(path);
    std::ofstream csv;
    MeshExport info;
    if (scalar) {
        info.scalar_path = path;
        info.scalar_path.replace_extension(".csv");
        csv = open_output(info.scalar_path);
        csv << "vertex,sheet,value\n";
    }
    std::size_t base = 0;
    for (std::size_t i = 0; i < m.q(); ++i) {
        const auto& s = m.sheets[i];
        out << "o " << s.name << '\n';
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b) {
                const double u = s.domain.u0 + s.domain.width() * a / n;
                const double v = s.domain.v0 + s.domain.height() * b / n;
                const Vec3 x = s.immersion(u, v);
                out << "v " << format_double(x.x()) << ' ' << format_double(x.y()) << ' ' << format_double(x.z())
                    << '\n';
                if (scalar)
                    csv << base + a * (n + 1) + b + 1 << ',' << i << ',' << format_double(scalar->value(i, {u, v}))
                        << '\n';
            }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const std::size_t k = base + a * (n + 1) + b + 1;
                out << "f " << k << ' ' << k + n + 1 << ' ' << k + n + 2 << ' ' << k + 1 << '\n';
            }
        base += (n + 1) * (n + 1);
    }
    info.objects = m.q();
    info.vertices = base;
    if (!out || (scalar && !csv))
        throw Error(Errc::IOError, "cli_reporting", "write failed for '" + path.string() + "'");
    return info;
}

} // namespace mjs
