#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "pdeopt/randomness.hpp"

namespace pdeopt {

/// Resolved experiment configuration. Defaults come from the selected
/// problem family; a JSON config file overrides them key by key and any
/// unknown key is rejected.
struct ExperimentConfig {
    std::string problem = "example1"; // example1 | example2 | custom
    std::uint64_t seed = 7;
    std::string out_dir;

    double alpha = 0.1;
    double u0_value = 2.0;
    double y_d_value = 0.0;
    double u_max = 0.0;        // explicit bound; 0 derives it from the margin
    double u_max_margin = 2.0; // u_max = margin * sqrt(2 F(u0) / alpha)

    struct Grid {
        int dim = 1;
        std::array<double, 2> x_extent{0.0, 1.0};
        std::array<double, 2> y_extent{0.0, 0.0};
        int cells_x = 50;
        int cells_y = 0;
        double T = 0.2;
        int n_t = 100;
    } grid;

    struct Optimizer {
        std::string method = "adagrad"; // adagrad | sgd
        double eta = 1.0;
        double b0 = 0.1;
        double eta0 = 10.0;
        int iters = 50;
    } optimizer;

    struct Diagnostics {
        int state_samples = 100;  // state mean/variance sample size
        int energy_samples = 50;  // paired energy comparison sample size
        int risk_samples = 20;    // Monte Carlo size for u_max / risk checks
        int risk_every = 0;       // optional in-run risk estimates, 0 = off
        int snapshot_every = 0;   // control snapshot cadence, 0 = endpoints only
    } diagnostics;

    struct Kl {
        double sigma2 = 0.25; // not stated in the source experiment; configurable
        double corr_length = 0.1;
        int modes = 40;
        double a_min = 0.1;
    } kl;

    struct Pulse { // minute/W-valued at the config boundary
        std::array<double, 2> onset1_minutes{40.0, 60.0};
        std::array<double, 2> onset2_minutes{200.0, 220.0};
        std::array<double, 2> duration_minutes{30.0, 60.0};
        std::array<double, 2> intensity{200.0, 400.0}; // W m^-3
    } pulse;

    struct Physical {
        double rho = 2118.0; // kg m^-3
        double cp = 765.0;   // J kg^-1 K^-1
        double kx = 66.0;    // W m^-1 K^-1
        double ky = 0.66;    // W m^-1 K^-1
        double T_o = 18.0;   // deg C
    } physical;

    std::array<double, 2> monitor_point{0.018, 0.099};
};

ExperimentConfig example1_defaults();
ExperimentConfig example2_defaults();

/// Parses a JSON config file: picks defaults from the "problem" key, then
/// applies overrides. Unknown keys fail fast.
ExperimentConfig load_config(const std::string& path);

/// Applies a JSON object onto an existing config (same override rules).
void apply_config_json(ExperimentConfig& config, const nlohmann::json& j);

/// Full resolved config as JSON (written into output metadata/headers).
nlohmann::json config_to_json(const ExperimentConfig& config);

} // namespace pdeopt
