#include "sppfem/dispatch.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Structure-preserving parametric FEM for anisotropic surface diffusion"};
    app.require_subcommand(1);

    sppfem::Command cmd;
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;

    const std::pair<const char*, const char*> commands[] = {
        {"run", "Evolve a surface and write diagnostics and the final mesh"},
        {"converge", "Manifold-distance convergence study"},
        {"conserve", "Run and report volume and energy diagnostics"},
        {"k0-table", "Tabulate the minimal stabilizing function"},
        {"check", "Invariant checks for the configured model and shape"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", cmd.config_path, "INI config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", cmd.overrides, "Override a config value, section.key=value");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Random seed");
        sub->callback([&cmd, name = std::string(name)] { cmd.name = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sppfem::UsageError;
    }

    for (CLI::App* sub : app.get_subcommands()) {
        if (sub->count("--out"))
            cmd.out_dir = out_dir;
        if (sub->count("--threads"))
            cmd.threads = threads;
        if (sub->count("--seed"))
            cmd.seed = seed;
    }
    return sppfem::dispatch(cmd, std::cout, std::cerr);
}
