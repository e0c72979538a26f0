#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "pdeopt/config.hpp"
#include "pdeopt/objective.hpp"
#include "pdeopt/optimize.hpp"

namespace pdeopt {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kCsvSchemaVersion = "1";

/// A ControlProblem together with the grid and initial control it points
/// into. Movable; the grid address is stable behind the unique_ptr.
struct BuiltProblem {
    std::unique_ptr<SpaceTimeGrid> grid;
    ControlProblem problem;
    Field u0;
};

/// Materializes the configured problem. 1D grids get the lognormal KL
/// diffusivity; 2D grids get fixed anisotropic conduction (scaled by
/// rho * c_p) plus the random two-pulse load, with the boundary value T_o.
BuiltProblem build_problem(const ExperimentConfig& config);

/// Sub-seed for diagnostics, decorrelated from the optimizer streams that
/// use the master seed directly.
std::uint64_t diagnostics_seed(std::uint64_t master_seed, std::uint64_t salt);

/// Runs the configured experiment and writes trace.csv, control snapshots,
/// state mean/variance fields, energy.csv (when the load is random), and
/// metadata.json into config.out_dir. Returns false when the optimizer
/// aborted on a solver failure (partial artifacts are kept).
bool run_experiment(const ExperimentConfig& config);

struct VerifyResult {
    bool passed = false;
    nlohmann::json report;
};

/// Runs one verification suite (gradient | convexity | lipschitz |
/// solver-order | kl | rate) and writes verify_<suite>.json into
/// config.out_dir.
VerifyResult run_verification(const ExperimentConfig& config,
                              const std::string& suite);

/// Prints the KL eigenvalue spectrum and captured-variance fractions.
void kl_report(const ExperimentConfig& config, std::ostream& out);

} // namespace pdeopt
