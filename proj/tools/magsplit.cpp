// Command-line driver: assumption checks, asymptotic pipeline, direct
// diagonalization sweep, gap-law fit and report emission.

#include <CLI11.hpp>

#include <iostream>

#include "magsplit/harness.hpp"

using namespace magsplit;

int main(int argc, char** argv) {
    CLI::App app{"double-well magnetic Laplacian: tunneling asymptotics and direct spectra"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file (defaults used when omitted)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "worker threads for the sweep");
    app.add_option("--seed", seed, "seed for sampled checks and solver start vectors");

    auto* c_check = app.add_subcommand("check", "verify the field assumptions by sampling");
    auto* c_asym = app.add_subcommand(
        "asymptotics", "eikonal + amplitude pipeline: S, phi, z2, c0 and profile CSVs");
    auto* c_sweep = app.add_subcommand("sweep", "direct diagonalization across the h list");
    auto* c_fit = app.add_subcommand("fit", "fit the gap law to sweep results");
    auto* c_report = app.add_subcommand("report", "merge all outputs into report.json");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads > 0) cfg.threads = threads;
        if (seed != 0) cfg.seed = seed;

        if (c_check->parsed()) {
            return cmd_check(cfg, std::cout) ? 0 : 1;
        } else if (c_asym->parsed()) {
            cmd_asymptotics(cfg, std::cout);
        } else if (c_sweep->parsed()) {
            return cmd_sweep(cfg, std::cout) ? 0 : 2;
        } else if (c_fit->parsed()) {
            cmd_fit(cfg, std::cout);
        } else if (c_report->parsed()) {
            cmd_report(cfg, std::cout);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
