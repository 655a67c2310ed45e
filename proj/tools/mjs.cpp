#include "mjs/app.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv)
{
    CLI::App app{"Minimal multiple-junction surface toolkit"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "run the configured suites and write reports");
    run->add_option("config", config, "configuration file")->required();

    std::string param, values;
    auto* sweep = app.add_subcommand("sweep", "re-run a suite over parameter values");
    sweep->add_option("config", config, "configuration file")->required();
    sweep->add_option("--param", param, "p, r or degree")->required();
    sweep->add_option("--values", values, "comma separated values")->required();

    std::string mesh, scalar = "none";
    int grid = 16;
    auto* exp = app.add_subcommand("export", "write the configured surface as OBJ");
    exp->add_option("config", config, "configuration file")->required();
    exp->add_option("--mesh", mesh, "output OBJ path")->required();
    exp->add_option("--grid", grid, "cells per parameter direction")->check(CLI::PositiveNumber);
    exp->add_option("--scalar", scalar, "per-vertex scalar: none, norm_a or certificate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*run)
        return mjs::guarded([&] { return mjs::command_run(config); });
    if (*sweep)
        return mjs::guarded([&] { return mjs::command_sweep(config, param, mjs::parse_values(values)); });
    return mjs::guarded([&] { return mjs::command_export(config, mesh, grid, scalar); });
}
