#include "pdeopt/optimize.hpp"

#include <chrono>
#include <cmath>

namespace pdeopt {

ControlFunction project_control(ControlFunction u, double u_max) {
    if (u_max <= 0.0)
        throw InvalidConfigError("project_control: u_max must be positive");
    if (u.l2_norm <= u_max) return u;
    const double scale = u_max / u.l2_norm;
    u.field.values *= scale;
    u.l2_norm = u_max;
    return u;
}

namespace {

void apply_step(OptimizerState& state, const Field& gradient, double step_size,
                const OptimizerParams& params) {
    Field next = state.u.field;
    next.values -= step_size * gradient.values;
    ControlFunction candidate = ControlFunction::make(std::move(next));
    const double unprojected_norm = candidate.l2_norm;
    state.u = project_control(std::move(candidate), params.u_max);
    state.last_step_projected = unprojected_norm > params.u_max;
    if (state.last_step_projected) ++state.projection_count;
    ++state.j;
}

double checked_grad_norm(const Field& gradient) {
    const double gn = norm(gradient);
    if (!std::isfinite(gn))
        throw SolverError("optimizer: nonfinite gradient norm", gn);
    return gn;
}

} // namespace

void adagrad_step(OptimizerState& state, const Field& gradient,
                  const OptimizerParams& params) {
    if (state.b <= 0.0)
        throw InvalidConfigError("adagrad_step: accumulator must be positive");
    const double gn = checked_grad_norm(gradient);
    apply_step(state, gradient, params.eta / state.b, params);
    state.b = std::sqrt(state.b * state.b + gn * gn);
}

void sgd_step(OptimizerState& state, const Field& gradient,
              const OptimizerParams& params) {
    checked_grad_norm(gradient);
    apply_step(state, gradient, params.eta0 / (state.j + 1), params);
}

OptimizationTrace run_optimizer(const ControlProblem& problem,
                                const Field& u0, const OptimizerParams& params,
                                int n_iters, std::uint64_t master_seed,
                                const std::vector<Sample>* pool) {
    if (n_iters < 0)
        throw InvalidConfigError("run_optimizer: negative iteration count");
    if (params.method == OptimizerMethod::AdaGrad && params.b0 <= 0.0)
        throw InvalidConfigError("run_optimizer: AdaGrad needs b0 > 0");

    auto streams = make_rng_streams(master_seed, n_iters + 1);

    OptimizerState state;
    state.u = project_control(ControlFunction::make(u0), params.u_max);
    state.b = params.b0;

    OptimizationTrace trace;
    trace.records.reserve(n_iters + 1);
    Field running_sum = Field::zeros(*problem.grid); // sum of u_1..u_j
    if (params.store_iterates) trace.iterates.push_back(state.u.field);

    const auto t_start = std::chrono::steady_clock::now();
    for (int j = 0; j <= n_iters; ++j) {
        TraceRecord rec;
        rec.iter = j;
        rec.b = state.b;
        rec.step_size = params.method == OptimizerMethod::AdaGrad
                            ? params.eta / state.b
                            : params.eta0 / (j + 1);
        try {
            Sample fresh;
            const Sample* sample = nullptr;
            if (pool != nullptr && !pool->empty()) {
                sample = &(*pool)[streams[j].uniform_index(pool->size())];
            } else {
                fresh = draw_sample(problem, streams[j]);
                sample = &fresh;
            }
            auto [cost, gradient] =
                sample_cost_and_gradient(problem, state.u.field, *sample);
            rec.cost = cost;
            rec.grad_norm = checked_grad_norm(gradient);
            if (params.risk_every > 0 && params.risk_samples > 0 &&
                j % params.risk_every == 0) {
                rec.risk_mean = estimate_risk(problem, state.u.field,
                                              params.risk_seed, params.risk_samples)
                                    .mean_cost;
            }
            if (j < n_iters) {
                if (params.method == OptimizerMethod::AdaGrad)
                    adagrad_step(state, gradient, params);
                else
                    sgd_step(state, gradient, params);
                rec.projected = state.last_step_projected;
                running_sum.values += state.u.field.values;
                if (params.store_iterates)
                    trace.iterates.push_back(state.u.field);
            }
        } catch (const SolverError& err) {
            trace.aborted = true;
            trace.abort_reason = err.what();
            trace.records.push_back(rec);
            break;
        }
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t_start)
                .count();
        trace.records.push_back(rec);
    }

    trace.projection_count = state.projection_count;
    trace.final_iterate = state.u.field;
    if (n_iters > 0) {
        trace.averaged = Field::zeros(*problem.grid);
        trace.averaged.values = running_sum.values / state.j;
    } else {
        trace.averaged = state.u.field;
    }
    return trace;
}

Field averaged_iterate(const OptimizationTrace& trace, int n) {
    if (n < 1) throw InvalidConfigError("averaged_iterate: n must be positive");
    if (trace.iterates.size() < static_cast<std::size_t>(n) + 1)
        throw InvalidConfigError(
            "averaged_iterate: trace does not store enough iterates");
    Field avg = trace.iterates[1];
    for (int j = 2; j <= n; ++j) avg.values += trace.iterates[j].values;
    avg.values /= n;
    return avg;
}

double theorem_bound(double lipschitz, double sigma2, double eta, double b0,
                     int n, double c_gamma) {
    if (eta <= 0.0 || b0 <= 0.0 || n < 1 || c_gamma <= 0.0)
        throw InvalidConfigError("theorem_bound: parameters out of range");
    const double margin = 1.0 - 4.0 * eta * lipschitz / std::sqrt(b0);
    if (margin <= 0.0)
        throw HypothesisError(
            "theorem_bound: step-size hypothesis 4 eta M < sqrt(b0) violated");
    const double gamma =
        c_gamma * (1.0 + eta * eta * std::log(static_cast<double>(n))) /
        (eta * margin);
    const double noise_term =
        std::pow(b0 + n * sigma2, 0.25) * std::sqrt(gamma);
    return std::max(gamma * std::sqrt(lipschitz), noise_term) /
           std::sqrt(static_cast<double>(n));
}

} // namespace pdeopt
