#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pdeopt/config.hpp"
#include "pdeopt/errors.hpp"
#include "pdeopt/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerification = 3;

void resolve_out_dir(pdeopt::ExperimentConfig& config,
                     const std::string& cli_out) {
    if (!cli_out.empty()) {
        config.out_dir = cli_out;
        return;
    }
    if (!config.out_dir.empty()) return;
    if (const char* env = std::getenv("PDEOPT_OUT_DIR"))
        config.out_dir = env;
    else
        config.out_dir = ".";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic optimal control of parabolic PDEs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, suite;
    bool have_seed = false, have_iters = false;
    std::uint64_t seed = 0;
    int iters = 0;

    CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
    run->add_option("--config", config_path, "Config file (JSON)")->required();
    run->add_option("--seed", seed, "Master seed override")
        ->each([&](const std::string&) { have_seed = true; });
    run->add_option("--iters", iters, "Iteration count override")
        ->each([&](const std::string&) { have_iters = true; });
    run->add_option("--out", out_dir, "Output directory");

    CLI::App* verify =
        app.add_subcommand("verify", "Run a verification suite");
    verify->add_option("--config", config_path, "Config file (JSON)")
        ->required();
    verify
        ->add_option("--suite", suite,
                     "gradient | convexity | lipschitz | solver-order | kl | "
                     "rate")
        ->required();
    verify->add_option("--out", out_dir, "Output directory");

    CLI::App* report = app.add_subcommand(
        "kl-report", "Print the KL eigenvalue spectrum");
    report->add_option("--config", config_path, "Config file (JSON)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        pdeopt::ExperimentConfig config = pdeopt::load_config(config_path);
        if (have_seed) config.seed = seed;
        if (have_iters) config.optimizer.iters = iters;
        resolve_out_dir(config, out_dir);

        if (run->parsed()) {
            if (!pdeopt::run_experiment(config)) {
                std::cerr << "run: solver failure; partial artifacts kept in "
                          << config.out_dir << "\n";
                return kExitNumerical;
            }
            std::cout << "run: artifacts written to " << config.out_dir
                      << "\n";
            return kExitOk;
        }
        if (verify->parsed()) {
            const pdeopt::VerifyResult result =
                pdeopt::run_verification(config, suite);
            std::cout << "verify " << suite << ": "
                      << (result.passed ? "pass" : "FAIL") << " (report in "
                      << config.out_dir << ")\n";
            return result.passed ? kExitOk : kExitVerification;
        }
        pdeopt::kl_report(config, std::cout);
        return kExitOk;
    } catch (const pdeopt::InvalidConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pdeopt::SolverError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const pdeopt::CoercivityError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
