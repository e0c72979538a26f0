#include "pdeopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "pdeopt/errors.hpp"

namespace pdeopt {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& scope,
                  const std::set<std::string>& allowed) {
    if (!j.is_object())
        throw InvalidConfigError("config: '" + scope + "' must be an object");
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key()))
            throw InvalidConfigError("config: unknown key '" + scope +
                                     item.key() + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_range(const json& j, const char* key, std::array<double, 2>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2)
        throw InvalidConfigError(std::string("config: '") + key +
                                 "' must be a [lo, hi] pair");
    out = {v[0].get<double>(), v[1].get<double>()};
}

} // namespace

ExperimentConfig example1_defaults() { return {}; }

ExperimentConfig example2_defaults() {
    ExperimentConfig c;
    c.problem = "example2";
    c.alpha = 0.01;       // not stated for this experiment; calibrated default
    c.u0_value = 0.0;
    c.y_d_value = 18.0;
    c.grid.dim = 2;
    c.grid.x_extent = {0.004, 0.032};
    c.grid.y_extent = {0.0, 0.198};
    c.grid.cells_x = 29;
    c.grid.cells_y = 100;
    c.grid.T = 21600.0;
    c.grid.n_t = 240;
    c.optimizer.eta = 0.1;
    c.optimizer.b0 = 1.0;
    c.kl.modes = 0; // deterministic anisotropic conductivity
    return c;
}

void apply_config_json(ExperimentConfig& c, const json& j) {
    require_keys(j, "", {"problem", "seed", "out_dir", "alpha", "u0", "y_d",
                         "u_max", "u_max_margin", "grid", "optimizer",
                         "diagnostics", "kl", "pulse", "physical",
                         "monitor_point"});
    read(j, "seed", c.seed);
    read(j, "out_dir", c.out_dir);
    read(j, "alpha", c.alpha);
    read(j, "u0", c.u0_value);
    read(j, "y_d", c.y_d_value);
    read(j, "u_max", c.u_max);
    read(j, "u_max_margin", c.u_max_margin);
    read_range(j, "monitor_point", c.monitor_point);

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        require_keys(g, "grid.", {"dim", "x_extent", "y_extent", "cells_x",
                                  "cells_y", "T", "n_t"});
        read(g, "dim", c.grid.dim);
        read_range(g, "x_extent", c.grid.x_extent);
        read_range(g, "y_extent", c.grid.y_extent);
        read(g, "cells_x", c.grid.cells_x);
        read(g, "cells_y", c.grid.cells_y);
        read(g, "T", c.grid.T);
        read(g, "n_t", c.grid.n_t);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        require_keys(o, "optimizer.", {"method", "eta", "b0", "eta0", "iters"});
        read(o, "method", c.optimizer.method);
        read(o, "eta", c.optimizer.eta);
        read(o, "b0", c.optimizer.b0);
        read(o, "eta0", c.optimizer.eta0);
        read(o, "iters", c.optimizer.iters);
    }
    if (j.contains("diagnostics")) {
        const json& d = j.at("diagnostics");
        require_keys(d, "diagnostics.",
                     {"state_samples", "energy_samples", "risk_samples",
                      "risk_every", "snapshot_every"});
        read(d, "state_samples", c.diagnostics.state_samples);
        read(d, "energy_samples", c.diagnostics.energy_samples);
        read(d, "risk_samples", c.diagnostics.risk_samples);
        read(d, "risk_every", c.diagnostics.risk_every);
        read(d, "snapshot_every", c.diagnostics.snapshot_every);
    }
    if (j.contains("kl")) {
        const json& k = j.at("kl");
        require_keys(k, "kl.", {"sigma2", "corr_length", "modes", "a_min"});
        read(k, "sigma2", c.kl.sigma2);
        read(k, "corr_length", c.kl.corr_length);
        read(k, "modes", c.kl.modes);
        read(k, "a_min", c.kl.a_min);
    }
    if (j.contains("pulse")) {
        const json& p = j.at("pulse");
        require_keys(p, "pulse.", {"onset1_minutes", "onset2_minutes",
                                   "duration_minutes", "intensity"});
        read_range(p, "onset1_minutes", c.pulse.onset1_minutes);
        read_range(p, "onset2_minutes", c.pulse.onset2_minutes);
        read_range(p, "duration_minutes", c.pulse.duration_minutes);
        read_range(p, "intensity", c.pulse.intensity);
    }
    if (j.contains("physical")) {
        const json& p = j.at("physical");
        require_keys(p, "physical.", {"rho", "cp", "kx", "ky", "T_o"});
        read(p, "rho", c.physical.rho);
        read(p, "cp", c.physical.cp);
        read(p, "kx", c.physical.kx);
        read(p, "ky", c.physical.ky);
        read(p, "T_o", c.physical.T_o);
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw InvalidConfigError(std::string("config: parse error: ") +
                                 err.what());
    }

    std::string problem = "example1";
    if (j.contains("problem")) problem = j.at("problem").get<std::string>();

    ExperimentConfig c;
    if (problem == "example1" || problem == "custom") {
        c = example1_defaults();
        c.problem = problem;
    } else if (problem == "example2") {
        c = example2_defaults();
    } else {
        throw InvalidConfigError("config: unknown problem '" + problem + "'");
    }
    apply_config_json(c, j);

    if (c.grid.dim != 1 && c.grid.dim != 2)
        throw InvalidConfigError("config: grid.dim must be 1 or 2");
    if (c.grid.dim == 2 && c.grid.cells_y < 2)
        throw InvalidConfigError("config: 2D grid needs cells_y >= 2");
    if (c.alpha <= 0.0)
        throw InvalidConfigError("config: alpha must be positive");
    if (c.optimizer.method != "adagrad" && c.optimizer.method != "sgd")
        throw InvalidConfigError("config: optimizer.method must be adagrad or sgd");
    if (c.optimizer.iters < 0)
        throw InvalidConfigError("config: optimizer.iters must be >= 0");
    if (c.kl.modes < 0)
        throw InvalidConfigError("config: kl.modes must be >= 0");
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return json{
        {"problem", c.problem},
        {"seed", c.seed},
        {"alpha", c.alpha},
        {"u0", c.u0_value},
        {"y_d", c.y_d_value},
        {"u_max", c.u_max},
        {"u_max_margin", c.u_max_margin},
        {"monitor_point", c.monitor_point},
        {"grid",
         {{"dim", c.grid.dim},
          {"x_extent", c.grid.x_extent},
          {"y_extent", c.grid.y_extent},
          {"cells_x", c.grid.cells_x},
          {"cells_y", c.grid.cells_y},
          {"T", c.grid.T},
          {"n_t", c.grid.n_t}}},
        {"optimizer",
         {{"method", c.optimizer.method},
          {"eta", c.optimizer.eta},
          {"b0", c.optimizer.b0},
          {"eta0", c.optimizer.eta0},
          {"iters", c.optimizer.iters}}},
        {"diagnostics",
         {{"state_samples", c.diagnostics.state_samples},
          {"energy_samples", c.diagnostics.energy_samples},
          {"risk_samples", c.diagnostics.risk_samples},
          {"risk_every", c.diagnostics.risk_every},
          {"snapshot_every", c.diagnostics.snapshot_every}}},
        {"kl",
         {{"sigma2", c.kl.sigma2},
          {"corr_length", c.kl.corr_length},
          {"modes", c.kl.modes},
          {"a_min", c.kl.a_min}}},
        {"pulse",
         {{"onset1_minutes", c.pulse.onset1_minutes},
          {"onset2_minutes", c.pulse.onset2_minutes},
          {"duration_minutes", c.pulse.duration_minutes},
          {"intensity", c.pulse.intensity}}},
        {"physical",
         {{"rho", c.physical.rho},
          {"cp", c.physical.cp},
          {"kx", c.physical.kx},
          {"ky", c.physical.ky},
          {"T_o", c.physical.T_o}}},
    };
}

} // namespace pdeopt
