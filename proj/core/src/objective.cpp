#include "pdeopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pdeopt {

namespace {

std::shared_ptr<const DiscreteOperators> sample_operators(
    const ControlProblem& problem, RngStream& rng,
    std::optional<Eigen::VectorXd>& xi_out) {
    if (problem.kl) {
        const DiffusivitySample d = sample_lognormal_field(*problem.kl, rng);
        xi_out = d.xi;
        DiffusivityField field;
        field.ax = d.element_ax;
        if (problem.grid->dim == 2) field.ay = d.element_ax;
        return std::make_shared<DiscreteOperators>(
            assemble_operators(*problem.grid, field));
    }
    if (!problem.fixed_ops)
        throw InvalidConfigError(
            "draw_sample: problem has neither a KL basis nor fixed operators");
    return problem.fixed_ops;
}

} // namespace

Sample draw_sample(const ControlProblem& problem, RngStream& rng) {
    Sample s;
    s.stream_id = rng.id();
    s.ops = sample_operators(problem, rng, s.xi);
    if (problem.pulses) {
        auto [realization, load] =
            sample_pulse_load(*problem.pulses, rng, *problem.grid);
        s.pulse = realization;
        s.g = problem.g_fixed + load;
    } else {
        s.g = problem.g_fixed;
    }
    return s;
}

std::vector<Sample> draw_pool(const ControlProblem& problem,
                              std::uint64_t master_seed, int n) {
    auto streams = make_rng_streams(master_seed, n);
    std::vector<Sample> pool;
    pool.reserve(n);
    for (auto& stream : streams) pool.push_back(draw_sample(problem, stream));
    return pool;
}

Field solve_state(const ControlProblem& problem, const Field& u,
                  const Sample& sample) {
    const Eigen::VectorXd w0 =
        problem.y0.array() - problem.boundary_value;
    Field y = solve_forward(*sample.ops, sample.g, u, w0);
    if (problem.boundary_value != 0.0)
        y.values.array() += problem.boundary_value;
    return y;
}

double sample_cost(const ControlProblem& problem, const Field& u,
                   const Sample& sample) {
    const Field y = solve_state(problem, u, sample);
    const Field r = y - problem.y_d;
    return 0.5 * inner_product(r, r) + 0.5 * problem.alpha * inner_product(u, u);
}

Field sample_gradient(const ControlProblem& problem, const Field& u,
                      const Sample& sample) {
    const Field y = solve_state(problem, u, sample);
    Field grad = solve_adjoint(*sample.ops, y, problem.y_d);
    grad.values += problem.alpha * u.values;
    return grad;
}

std::pair<double, Field> sample_cost_and_gradient(const ControlProblem& problem,
                                                  const Field& u,
                                                  const Sample& sample) {
    const Field y = solve_state(problem, u, sample);
    const Field r = y - problem.y_d;
    const double cost =
        0.5 * inner_product(r, r) + 0.5 * problem.alpha * inner_product(u, u);
    Field grad = solve_adjoint(*sample.ops, y, problem.y_d);
    grad.values += problem.alpha * u.values;
    return {cost, std::move(grad)};
}

RiskEstimate estimate_risk(const ControlProblem& problem, const Field& u,
                           std::uint64_t master_seed, int n) {
    return estimate_risk(problem, u, draw_pool(problem, master_seed, n));
}

RiskEstimate estimate_risk(const ControlProblem& problem, const Field& u,
                           const std::vector<Sample>& samples) {
    const int n = static_cast<int>(samples.size());
    if (n < 1) throw InvalidConfigError("estimate_risk: need at least one sample");

    RiskEstimate est;
    est.sample_count = n;
    est.degenerate = n == 1;
    est.mean_gradient = Field::zeros(*problem.grid);

    std::vector<double> costs;
    costs.reserve(n);
    double grad_sq_sum = 0.0; // sum of ||grad_i||^2
    for (const Sample& s : samples) {
        auto [cost, grad] = sample_cost_and_gradient(problem, u, s);
        costs.push_back(cost);
        grad_sq_sum += inner_product(grad, grad);
        est.mean_gradient.values += grad.values;
    }
    est.mean_gradient.values /= n;

    double sum = 0.0;
    for (double c : costs) sum += c;
    est.mean_cost = sum / n;
    if (n > 1) {
        double ss = 0.0;
        for (double c : costs) ss += (c - est.mean_cost) * (c - est.mean_cost);
        est.var_cost = ss / (n - 1);
        // mean ||g_i - gbar||^2 = mean ||g_i||^2 - ||gbar||^2
        est.gradient_variance = std::max(
            0.0, grad_sq_sum / n -
                     inner_product(est.mean_gradient, est.mean_gradient));
    }
    return est;
}

double dirichlet_eigenvalue(const SpaceTimeGrid& grid) {
    const double pi = std::numbers::pi;
    const double lx = grid.x_extent[1] - grid.x_extent[0];
    double lambda = pi * pi / (lx * lx);
    if (grid.dim == 2) {
        const double ly = grid.y_extent[1] - grid.y_extent[0];
        lambda += pi * pi / (ly * ly);
    }
    return lambda;
}

ProblemConstants compute_constants(const ControlProblem& problem,
                                   const Field& u0, std::uint64_t master_seed,
                                   int n_samples, double margin) {
    if (problem.a_min <= 0.0)
        throw CoercivityError("compute_constants: a_min must be positive");
    if (problem.alpha <= 0.0)
        throw InvalidConfigError("compute_constants: alpha must be positive");

    ProblemConstants c;
    c.alpha = problem.alpha;
    c.a_min = problem.a_min;
    c.poincare = 1.0 / std::sqrt(dirichlet_eigenvalue(*problem.grid));
    const double cp2 = c.poincare * c.poincare;
    c.lipschitz = problem.alpha + cp2 * cp2 / (problem.a_min * problem.a_min);
    c.envelope = std::max(c.lipschitz, cp2 / problem.a_min);
    c.risk_at_u0 =
        estimate_risk(problem, u0, master_seed, n_samples).mean_cost;
    c.u_max = margin * std::sqrt(2.0 * c.risk_at_u0 / problem.alpha);
    return c;
}

Eigen::VectorXd heat_energy(const Field& y, double baseline) {
    const SpaceTimeGrid& g = *y.grid;
    Eigen::VectorXd e(g.n_levels());
    for (int n = 0; n <= g.n_t; ++n) {
        const Eigen::VectorXd dev = y.values.col(n).array() - baseline;
        e[n] = dev.cwiseProduct(dev).dot(g.quad_weights);
    }
    return e;
}

VarianceEnvelopeReport variance_envelope_check(
    const std::vector<double>& deviation_sq, double sigma2) {
    if (deviation_sq.empty())
        throw InvalidConfigError("variance_envelope_check: empty trace");
    VarianceEnvelopeReport report;
    const std::size_t n = deviation_sq.size();
    report.running_max.resize(n);
    report.bound.resize(n);
    report.satisfied.resize(n);
    double running = 0.0;
    double calibrated = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        running = std::max(running, deviation_sq[k]);
        const double j = static_cast<double>(k + 1);
        const double envelope = 1.0 + std::log(j);
        report.running_max[k] = running;
        report.bound[k] = sigma2 * envelope;
        report.satisfied[k] = running <= report.bound[k];
        calibrated = std::max(calibrated, running / envelope);
    }
    report.calibrated_sigma2 = calibrated;
    return report;
}

VarianceAssumptionReport check_variance_assumption(
    const ControlProblem& problem, const ProblemConstants& constants,
    double sigma2, std::uint64_t master_seed, int n_samples) {
    if (sigma2 <= 0.0)
        throw InvalidConfigError("check_variance_assumption: sigma2 must be positive");
    const auto pool = draw_pool(problem, master_seed, n_samples);
    const double norm_yd_sq = inner_product(problem.y_d, problem.y_d);
    Field y0_field = Field::zeros(*problem.grid);
    const double norm_y0_sq =
        spatial_inner(*problem.grid, problem.y0, problem.y0);

    std::vector<double> s_values;
    s_values.reserve(pool.size());
    double s_mean = 0.0;
    for (const Sample& s : pool) {
        const double v = inner_product(s.g, s.g) + norm_yd_sq + norm_y0_sq;
        s_values.push_back(v);
        s_mean += v;
    }
    s_mean /= static_cast<double>(pool.size());

    const double k2 = constants.envelope * constants.envelope;
    const double scale = 8.0 * k2 / sigma2;
    // log-sum-exp to keep the exponential moment finite in double precision
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (double v : s_values)
        max_exponent = std::max(max_exponent, scale * (v + s_mean));
    double acc = 0.0;
    for (double v : s_values)
        acc += std::exp(scale * (v + s_mean) - max_exponent);
    const double log_lhs =
        max_exponent + std::log(acc / static_cast<double>(pool.size()));
    const double log_rhs =
        1.0 - 16.0 * k2 * constants.u_max * constants.u_max / sigma2;

    VarianceAssumptionReport report;
    report.lhs = std::exp(log_lhs);
    report.rhs = std::exp(log_rhs);
    report.satisfiable = log_lhs <= log_rhs;
    return report;
}

double pool_risk(const ControlProblem& problem, const Field& u,
                 const std::vector<Sample>& pool) {
    double sum = 0.0;
    for (const Sample& s : pool) sum += sample_cost(problem, u, s);
    return sum / static_cast<double>(pool.size());
}

Field saa_minimize(const ControlProblem& problem,
                   const std::vector<Sample>& pool, double grad_tol,
                   int max_iters) {
    if (pool.empty())
        throw InvalidConfigError("saa_minimize: empty sample pool");
    const SpaceTimeGrid& grid = *problem.grid;
    const double inv_n = 1.0 / static_cast<double>(pool.size());
    const Field zero = Field::zeros(grid);

    // pooled gradient is affine in u; its linear part drives the CG solve
    auto apply_hessian = [&](const Field& d) {
        Field out = problem.alpha * d;
        for (const Sample& s : pool) {
            const Field sens = solve_sensitivity(*s.ops, d);
            const Field p = solve_adjoint(*s.ops, sens, zero);
            out.values += inv_n * p.values;
        }
        return out;
    };

    Field g0 = Field::zeros(grid);
    for (const Sample& s : pool)
        g0.values += inv_n * sample_gradient(problem, zero, s).values;

    // CG on H u = -g0 in the space-time inner product
    Field x = Field::zeros(grid);
    Field r = -1.0 * g0; // residual = -grad of the pooled risk at x
    Field d = r;
    double rr = inner_product(r, r);
    for (int it = 0; it < max_iters && std::sqrt(rr) > grad_tol; ++it) {
        const Field hd = apply_hessian(d);
        const double step = rr / inner_product(d, hd);
        x.values += step * d.values;
        r.values -= step * hd.values;
        const double rr_next = inner_product(r, r);
        d = r + (rr_next / rr) * d;
        rr = rr_next;
    }
    if (std::sqrt(rr) > grad_tol)
        throw SolverError("saa_minimize: CG did not reach the gradient tolerance",
                          std::sqrt(rr));
    return x;
}

} // namespace pdeopt
