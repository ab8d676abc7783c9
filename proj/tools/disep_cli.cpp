#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "disep/scenario.hpp"

// Exit codes: 0 success, 2 scenario validation, 3 simulation did not settle,
// 4 I/O failure, 5 oracle tolerance breach.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNotSettled = 3;
constexpr int kExitIo = 4;
constexpr int kExitTolerance = 5;

int guarded(bool quiet, const std::function<int()>& body) {
    try {
        return body();
    } catch (const disep::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const disep::NotSettledError& e) {
        std::cerr << "not settled: " << e.what() << "\n";
        return kExitNotSettled;
    } catch (const disep::ArtifactIoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    (void)quiet;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DiSeP module string simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = disep::default_out_dir();
    int oversample = 0;
    int threads = 0;
    bool quiet = false;
    app.add_option("--out-dir", out_dir, "output directory for artifacts");
    app.add_option("--oversample", oversample, "override substeps per carrier period");
    app.add_option("--threads", threads, "worker threads for sweeps (0 = auto)");
    app.add_flag("--quiet", quiet, "suppress the summary table");

    auto* run_cmd = app.add_subcommand("run", "run one scenario and write artifacts");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario's parameter sweep");
    sweep_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

    int cases = 1000;
    std::uint64_t seed = 1;
    auto* verify_cmd =
        app.add_subcommand("verify-oracle", "closed-form vs ODE oracle batch");
    verify_cmd->add_option("--cases", cases, "randomized draws per regime");
    verify_cmd->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    disep::RunOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.quiet = quiet;
    opts.oversample_override = oversample;

    if (run_cmd->parsed()) {
        return guarded(quiet, [&]() {
            const disep::Scenario sc = disep::load_scenario(scenario_path);
            disep::run_scenario(sc, opts, std::cout);
            return kExitOk;
        });
    }
    if (sweep_cmd->parsed()) {
        return guarded(quiet, [&]() {
            const disep::Scenario sc = disep::load_scenario(scenario_path);
            disep::run_sweep(sc, opts, std::cout);
            return kExitOk;
        });
    }
    if (verify_cmd->parsed()) {
        return guarded(quiet, [&]() {
            const disep::OracleReport rep = disep::verify_oracle(cases, seed);
            if (!quiet) disep::print_oracle_report(std::cout, rep);
            return rep.pass ? kExitOk : kExitTolerance;
        });
    }
    return kExitOk;
}
