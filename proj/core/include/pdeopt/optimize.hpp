#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pdeopt/objective.hpp"

namespace pdeopt {

enum class OptimizerMethod { Sgd, AdaGrad };

struct OptimizerParams {
    OptimizerMethod method = OptimizerMethod::AdaGrad;
    double eta = 1.0;  // AdaGrad numerator
    double b0 = 0.1;   // AdaGrad initial accumulator
    double eta0 = 10.0; // SGD initial step, eta_j = eta0 / (j + 1)
    double u_max = std::numeric_limits<double>::infinity();
    bool store_iterates = false;
    int risk_every = 0;    // extra Monte Carlo risk estimate cadence, 0 = off
    int risk_samples = 0;
    std::uint64_t risk_seed = 0;
};

struct OptimizerState {
    int j = 0;
    ControlFunction u;
    double b = 0.0; // AdaGrad accumulator b_j
    int projection_count = 0;
    bool last_step_projected = false;
};

struct TraceRecord {
    int iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    double step_size = 0.0;
    double b = 0.0;
    bool projected = false; // feasibility action during the step from u_j
    double wall_time_s = 0.0;
    double risk_mean = std::numeric_limits<double>::quiet_NaN();
};

struct OptimizationTrace {
    std::vector<TraceRecord> records; // n_iters + 1 entries
    Field final_iterate;
    Field averaged; // mean of u_1..u_n
    std::vector<Field> iterates; // u_0..u_n if store_iterates
    int projection_count = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Radial projection onto the L2 ball of radius u_max.
ControlFunction project_control(ControlFunction u, double u_max);

/// One AdaGrad update: u <- project(u - (eta / b_j) grad), then
/// b_{j+1}^2 = b_j^2 + ||grad||^2 with the pre-projection gradient.
void adagrad_step(OptimizerState& state, const Field& gradient,
                  const OptimizerParams& params);

/// One SGD update with the Robbins-Monro rule eta_j = eta0 / (j + 1).
void sgd_step(OptimizerState& state, const Field& gradient,
              const OptimizerParams& params);

/// Runs the stochastic optimizer for n_iters iterations with one fresh
/// realization per iteration (sub-stream j of master_seed). When a fixed
/// pool is supplied, realizations are drawn uniformly from it instead
/// (empirical-risk sampling). Cost and gradient are recorded before each
/// step; record n_iters holds the final iterate's sampled values.
OptimizationTrace run_optimizer(const ControlProblem& problem,
                                const Field& u0, const OptimizerParams& params,
                                int n_iters, std::uint64_t master_seed,
                                const std::vector<Sample>* pool = nullptr);

/// Arithmetic mean of iterates u_1..u_n from a trace with stored iterates.
Field averaged_iterate(const OptimizationTrace& trace, int n);

/// Theorem convergence bound (1/sqrt(n)) max(gamma sqrt(M),
/// (b0 + n sigma^2)^(1/4) sqrt(gamma)) with
/// gamma = c_gamma (1 + eta^2 ln n) / (eta (1 - 4 eta M / sqrt(b0))).
/// Requires the hypothesis 4 eta M < sqrt(b0).
double theorem_bound(double lipschitz, double sigma2, double eta, double b0,
                     int n, double c_gamma = 1.0);

} // namespace pdeopt
