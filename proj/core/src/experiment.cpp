#include "pdeopt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "pdeopt/errors.hpp"
#include "pdeopt/pde.hpp"

namespace pdeopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v, int precision = 17) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

void write_header_block(std::ostream& os, const ExperimentConfig& c) {
    os << "# schema_version=" << kCsvSchemaVersion << "\n"
       << "# code_version=" << kCodeVersion << "\n"
       << "# seed=" << c.seed << "\n"
       << "# config=" << config_to_json(c).dump() << "\n";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os)
        throw InvalidConfigError("cannot open output file '" + path.string() +
                                 "'");
    return os;
}

/// Space-time field as a plain-text matrix: one row per time level, first
/// column t, one column per node; node coordinates in the header.
void write_field_matrix(const fs::path& path, const ExperimentConfig& c,
                        const SpaceTimeGrid& g, const Eigen::MatrixXd& values) {
    std::ofstream os = open_out(path);
    write_header_block(os, c);
    os << "# rows: time levels (first column t); columns: nodes, x-fastest\n";
    os << "# node_x:";
    for (int i = 0; i < g.n_nodes; ++i) os << ' ' << fmt(g.node_x[i], 10);
    os << "\n";
    if (g.dim == 2) {
        os << "# node_y:";
        for (int i = 0; i < g.n_nodes; ++i) os << ' ' << fmt(g.node_y[i], 10);
        os << "\n";
    }
    for (int n = 0; n <= g.n_t; ++n) {
        os << fmt(n * g.dt, 10);
        for (int i = 0; i < g.n_nodes; ++i) os << ' ' << fmt(values(i, n), 10);
        os << "\n";
    }
}

int nearest_node(const SpaceTimeGrid& g, double x, double y) {
    const int ix = std::clamp(
        static_cast<int>(std::lround((x - g.x_extent[0]) / g.dx)), 0,
        g.cells_x);
    int iy = 0;
    if (g.dim == 2)
        iy = std::clamp(static_cast<int>(std::lround((y - g.y_extent[0]) / g.dy)),
                        0, g.cells_y);
    return g.node_index(ix, iy);
}

Field random_unit_field(const SpaceTimeGrid& g, RngStream& rng) {
    Field f = Field::zeros(g);
    for (int n = 0; n <= g.n_t; ++n)
        for (int i = 0; i < g.n_nodes; ++i) f.values(i, n) = rng.normal();
    const double nrm = norm(f);
    if (nrm > 0.0) f.values /= nrm;
    return f;
}

OptimizerParams params_from_config(const ExperimentConfig& c, double u_max) {
    OptimizerParams p;
    p.method = c.optimizer.method == "sgd" ? OptimizerMethod::Sgd
                                           : OptimizerMethod::AdaGrad;
    p.eta = c.optimizer.eta;
    p.b0 = c.optimizer.b0;
    p.eta0 = c.optimizer.eta0;
    p.u_max = u_max;
    p.risk_every = c.diagnostics.risk_every;
    p.risk_samples = c.diagnostics.risk_samples;
    p.risk_seed = diagnostics_seed(c.seed, 1);
    return p;
}

json constants_to_json(const ProblemConstants& k) {
    return json{{"alpha", k.alpha},
                {"a_min", k.a_min},
                {"poincare", k.poincare},
                {"lipschitz", k.lipschitz},
                {"envelope", k.envelope},
                {"u_max", k.u_max},
                {"risk_at_u0", k.risk_at_u0}};
}

} // namespace

std::uint64_t diagnostics_seed(std::uint64_t master_seed, std::uint64_t salt) {
    // splitmix64 of (seed, salt): decorrelates diagnostic streams from the
    // optimizer streams, which consume the master seed directly
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BuiltProblem build_problem(const ExperimentConfig& c) {
    BuiltProblem bp;
    if (c.grid.dim == 1) {
        bp.grid = std::make_unique<SpaceTimeGrid>(
            build_grid(c.grid.x_extent, c.grid.cells_x, c.grid.T, c.grid.n_t));
    } else {
        bp.grid = std::make_unique<SpaceTimeGrid>(
            build_grid(c.grid.x_extent, c.grid.y_extent, c.grid.cells_x,
                       c.grid.cells_y, c.grid.T, c.grid.n_t));
    }
    const SpaceTimeGrid& g = *bp.grid;

    ControlProblem& p = bp.problem;
    p.grid = &g;
    p.alpha = c.alpha;
    p.y_d = Field::constant(g, c.y_d_value);
    p.g_fixed = Field::zeros(g);

    if (c.grid.dim == 1) {
        // lognormal KL diffusivity, parabolic initial bump
        p.a_min = c.kl.a_min;
        if (c.kl.modes > 0)
            p.kl = std::make_shared<KlBasis>(kl_decompose(
                c.kl.sigma2, c.kl.corr_length, g,
                std::min(c.kl.modes, g.n_nodes), c.kl.a_min));
        else
            p.fixed_ops = std::make_shared<DiscreteOperators>(
                assemble_operators(g, DiffusivityField::uniform(g, c.kl.a_min)));
        p.y0.resize(g.n_nodes);
        const double x0 = g.x_extent[0];
        const double x1 = g.x_extent[1];
        for (int i = 0; i < g.n_nodes; ++i)
            p.y0[i] = (g.node_x[i] - x0) * (x1 - g.node_x[i]);
    } else {
        // deterministic anisotropic conduction in temperature-rate form
        // (everything divided by rho * c_p), random two-pulse load,
        // constant boundary temperature T_o
        const double rho_cp = c.physical.rho * c.physical.cp;
        if (rho_cp <= 0.0)
            throw InvalidConfigError("build_problem: rho * cp must be positive");
        const double ax = c.physical.kx / rho_cp;
        const double ay = c.physical.ky / rho_cp;
        p.a_min = std::min(ax, ay);
        p.fixed_ops = std::make_shared<DiscreteOperators>(
            assemble_operators(g, DiffusivityField::anisotropic(g, ax, ay)));
        auto pulses = std::make_shared<PulseConfig>();
        pulses->onset1 = {c.pulse.onset1_minutes[0] * 60.0,
                          c.pulse.onset1_minutes[1] * 60.0};
        pulses->onset2 = {c.pulse.onset2_minutes[0] * 60.0,
                          c.pulse.onset2_minutes[1] * 60.0};
        pulses->duration = {c.pulse.duration_minutes[0] * 60.0,
                            c.pulse.duration_minutes[1] * 60.0};
        pulses->intensity = c.pulse.intensity;
        pulses->intensity_scale = 1.0 / rho_cp;
        p.pulses = std::move(pulses);
        p.boundary_value = c.physical.T_o;
        p.y0 = Eigen::VectorXd::Constant(g.n_nodes, c.physical.T_o);
    }

    bp.u0 = Field::constant(g, c.u0_value);
    return bp;
}

bool run_experiment(const ExperimentConfig& c) {
    const BuiltProblem bp = build_problem(c);
    const ControlProblem& problem = bp.problem;
    const SpaceTimeGrid& g = *bp.grid;

    ProblemConstants constants =
        compute_constants(problem, bp.u0, diagnostics_seed(c.seed, 0),
                          std::max(1, c.diagnostics.risk_samples),
                          c.u_max_margin);
    const bool u_max_explicit = c.u_max > 0.0;
    if (u_max_explicit) constants.u_max = c.u_max;

    OptimizerParams params = params_from_config(c, constants.u_max);
    params.store_iterates = c.diagnostics.snapshot_every > 0;

    const OptimizationTrace trace =
        run_optimizer(problem, bp.u0, params, c.optimizer.iters, c.seed);

    const fs::path out(c.out_dir.empty() ? "." : c.out_dir);
    fs::create_directories(out);

    {
        std::ofstream os = open_out(out / "trace.csv");
        write_header_block(os, c);
        os << "iter,cost,grad_norm,step_size,b,projected,risk_mean\n";
        for (const TraceRecord& r : trace.records) {
            os << r.iter << ',' << fmt(r.cost) << ',' << fmt(r.grad_norm)
               << ',' << fmt(r.step_size) << ',' << fmt(r.b) << ','
               << (r.projected ? 1 : 0) << ',' << fmt(r.risk_mean) << "\n";
        }
    }

    write_field_matrix(out / "control_initial.txt", c, g, bp.u0.values);
    write_field_matrix(out / "control_final.txt", c, g,
                       trace.final_iterate.values);
    write_field_matrix(out / "control_averaged.txt", c, g,
                       trace.averaged.values);
    if (params.store_iterates) {
        for (std::size_t j = 0; j < trace.iterates.size();
             j += c.diagnostics.snapshot_every) {
            char name[48];
            std::snprintf(name, sizeof name, "control_iter_%04zu.txt", j);
            write_field_matrix(out / name, c, g, trace.iterates[j].values);
        }
    }

    // paired diagnostic sample: state statistics under the final control
    // and under u = 0, using the same realizations for both
    const int n_diag = std::max(2, c.diagnostics.state_samples);
    const auto diag_pool =
        draw_pool(problem, diagnostics_seed(c.seed, 2), n_diag);
    const Field u_zero = Field::zeros(g);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(g.n_nodes, g.n_levels());
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(g.n_nodes, g.n_levels());
    Eigen::MatrixXd mean_unc = Eigen::MatrixXd::Zero(g.n_nodes, g.n_levels());
    int count = 0;
    for (const Sample& s : diag_pool) {
        const Field y = solve_state(problem, trace.final_iterate, s);
        const Field yu = solve_state(problem, u_zero, s);
        ++count;
        const Eigen::MatrixXd delta = y.values - mean;
        mean += delta / count;
        m2 += delta.cwiseProduct(y.values - mean);
        mean_unc += (yu.values - mean_unc) / count;
    }
    const Eigen::MatrixXd variance = m2 / (count - 1);
    write_field_matrix(out / "state_mean.txt", c, g, mean);
    write_field_matrix(out / "state_variance.txt", c, g, variance);
    write_field_matrix(out / "state_mean_uncontrolled.txt", c, g, mean_unc);

    if (problem.pulses) {
        // paired mean heat energy, controlled vs u = 0
        const int n_e = std::max(1, c.diagnostics.energy_samples);
        const auto pool = draw_pool(problem, diagnostics_seed(c.seed, 3), n_e);
        Eigen::VectorXd e_ctrl = Eigen::VectorXd::Zero(g.n_levels());
        Eigen::VectorXd e_unc = Eigen::VectorXd::Zero(g.n_levels());
        for (const Sample& s : pool) {
            e_ctrl += heat_energy(solve_state(problem, trace.final_iterate, s),
                                  problem.boundary_value);
            e_unc += heat_energy(solve_state(problem, u_zero, s),
                                 problem.boundary_value);
        }
        e_ctrl /= n_e;
        e_unc /= n_e;
        std::ofstream os = open_out(out / "energy.csv");
        write_header_block(os, c);
        os << "t,mean_energy_controlled,mean_energy_uncontrolled\n";
        for (int n = 0; n <= g.n_t; ++n)
            os << fmt(n * g.dt, 10) << ',' << fmt(e_ctrl[n]) << ','
               << fmt(e_unc[n]) << "\n";
    }

    {
        const int node = nearest_node(g, c.monitor_point[0], c.monitor_point[1]);
        std::ofstream os = open_out(out / "monitor.csv");
        write_header_block(os, c);
        os << "# monitor_node=" << node << " x=" << fmt(g.node_x[node], 10)
           << " y=" << fmt(g.node_y[node], 10) << "\n";
        os << "t,control_final,state_mean,state_mean_uncontrolled\n";
        for (int n = 0; n <= g.n_t; ++n)
            os << fmt(n * g.dt, 10) << ','
               << fmt(trace.final_iterate.values(node, n)) << ','
               << fmt(mean(node, n)) << ',' << fmt(mean_unc(node, n)) << "\n";
    }

    json meta;
    meta["schema_version"] = kCsvSchemaVersion;
    meta["code_version"] = kCodeVersion;
    meta["seed"] = c.seed;
    meta["config"] = config_to_json(c);
    meta["constants"] = constants_to_json(constants);
    meta["u_max_source"] = u_max_explicit ? "explicit" : "derived";
    meta["result"] = json{
        {"records", trace.records.size()},
        {"projection_count", trace.projection_count},
        {"aborted", trace.aborted},
        {"abort_reason", trace.abort_reason},
        {"initial_cost_sample",
         trace.records.empty() ? 0.0 : trace.records.front().cost},
        {"final_cost_sample",
         trace.records.empty() ? 0.0 : trace.records.back().cost},
        {"final_grad_norm_sample",
         trace.records.empty() ? 0.0 : trace.records.back().grad_norm},
    };
    meta["design_decisions"] = json::array({
        "temporal quadrature is the left rectangle rule (terminal weight "
        "zero), making the discrete adjoint the exact transpose of the "
        "implicit-Euler forward map with an exactly zero terminal slice",
        "2D problems express the control and load in temperature-rate units "
        "(volumetric sources divided by rho * c_p)",
        "heat energy integrates the squared deviation from the boundary "
        "temperature",
        "example2 mesh, horizon, time step, and alpha are configurable "
        "library defaults, not published values",
        "default monitor point is the domain midpoint; the point is "
        "configurable",
    });
    std::ofstream ms = open_out(out / "metadata.json");
    ms << meta.dump(2) << "\n";

    return !trace.aborted;
}

namespace {

json suite_gradient(const ExperimentConfig& c) {
    const BuiltProblem bp = build_problem(c);
    auto streams = make_rng_streams(diagnostics_seed(c.seed, 10), 12);
    const Sample sample = draw_sample(bp.problem, streams[0]);
    const Field& u = bp.u0;
    const Field gradient = sample_gradient(bp.problem, u, sample);

    const double eps = 1e-4;
    double max_rel = 0.0;
    json directions = json::array();
    for (int d = 0; d < 10; ++d) {
        const Field v = random_unit_field(*bp.grid, streams[d + 1]);
        Field up = u, um = u;
        up.values += eps * v.values;
        um.values -= eps * v.values;
        const double fd = (sample_cost(bp.problem, up, sample) -
                           sample_cost(bp.problem, um, sample)) /
                          (2.0 * eps);
        const double analytic = inner_product(gradient, v);
        const double rel =
            std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-12);
        max_rel = std::max(max_rel, rel);
        directions.push_back(json{{"fd", fd}, {"analytic", analytic},
                                  {"rel_error", rel}});
    }
    return json{{"tolerance", 1e-6},
                {"max_rel_error", max_rel},
                {"directions", directions},
                {"passed", max_rel <= 1e-6}};
}

json suite_convexity(const ExperimentConfig& c) {
    const BuiltProblem bp = build_problem(c);
    auto streams = make_rng_streams(diagnostics_seed(c.seed, 11), 300);
    double min_margin = std::numeric_limits<double>::infinity();
    int passes = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const Sample s = draw_sample(bp.problem, streams[3 * t]);
        Field u = random_unit_field(*bp.grid, streams[3 * t + 1]);
        Field v = random_unit_field(*bp.grid, streams[3 * t + 2]);
        u.values *= 2.0;
        const Field gu = sample_gradient(bp.problem, u, s);
        const Field gv = sample_gradient(bp.problem, v, s);
        const Field du = v - u;
        const Field dg = gv - gu;
        const double du2 = inner_product(du, du);
        const double margin =
            (inner_product(dg, du) - bp.problem.alpha * du2) / du2;
        min_margin = std::min(min_margin, margin);
        if (margin >= -1e-10) ++passes;
    }
    return json{{"alpha", bp.problem.alpha},
                {"trials", trials},
                {"passes", passes},
                {"min_normalized_margin", min_margin},
                {"tolerance", -1e-10},
                {"passed", passes == trials}};
}

json suite_lipschitz(const ExperimentConfig& c) {
    const BuiltProblem bp = build_problem(c);
    const double cp2 = 1.0 / dirichlet_eigenvalue(*bp.grid);
    const double lipschitz =
        bp.problem.alpha + cp2 * cp2 / (bp.problem.a_min * bp.problem.a_min);
    auto streams = make_rng_streams(diagnostics_seed(c.seed, 12), 300);
    double max_ratio = 0.0;
    int passes = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const Sample s = draw_sample(bp.problem, streams[3 * t]);
        Field u = random_unit_field(*bp.grid, streams[3 * t + 1]);
        Field v = random_unit_field(*bp.grid, streams[3 * t + 2]);
        u.values *= 2.0;
        const Field dg = sample_gradient(bp.problem, v, s) -
                         sample_gradient(bp.problem, u, s);
        const Field du = v - u;
        const double ratio = norm(dg) / norm(du);
        max_ratio = std::max(max_ratio, ratio);
        if (ratio <= 1.01 * lipschitz) ++passes;
    }
    return json{{"lipschitz_constant", lipschitz},
                {"trials", trials},
                {"passes", passes},
                {"max_ratio", max_ratio},
                {"bound", 1.01 * lipschitz},
                {"passed", passes == trials}};
}

json suite_solver_order(const ExperimentConfig& c) {
    // heat equation on [0,1] with a = 1: y = exp(-pi^2 t) sin(pi x)
    auto rel_error = [&](int cells, int steps) {
        const SpaceTimeGrid g = build_grid({0.0, 1.0}, cells, c.grid.T, steps);
        const auto ops = assemble_operators(g, DiffusivityField::uniform(g, 1.0));
        Eigen::VectorXd y0(g.n_nodes);
        const double pi = 3.14159265358979323846;
        for (int i = 0; i < g.n_nodes; ++i) y0[i] = std::sin(pi * g.node_x[i]);
        const Field zero = Field::zeros(g);
        const Field y = solve_forward(ops, zero, zero, y0);
        const Field exact = Field::from_function(g, [pi](double x, double, double t) {
            return std::exp(-pi * pi * t) * std::sin(pi * x);
        });
        return norm(y - exact) / norm(exact);
    };
    const double err_coarse = rel_error(c.grid.cells_x / 2, c.grid.n_t / 2);
    const double err_fine = rel_error(c.grid.cells_x, c.grid.n_t);
    const double ratio = err_coarse / err_fine;
    const bool passed = err_fine <= 2e-2 && ratio >= 1.8;
    return json{{"error_coarse", err_coarse},
                {"error_fine", err_fine},
                {"ratio", ratio},
                {"error_tolerance", 2e-2},
                {"ratio_bound", 1.8},
                {"passed", passed}};
}

json suite_kl(const ExperimentConfig& c) {
    const BuiltProblem bp = build_problem(c);
    if (!bp.problem.kl)
        throw InvalidConfigError("kl suite: config has no KL modes");
    const KlBasis& basis = *bp.problem.kl;
    const SpaceTimeGrid& g = *bp.grid;

    bool monotone = true, nonnegative = true;
    for (int k = 0; k < basis.modes; ++k) {
        if (basis.eigenvalues[k] < 0.0) nonnegative = false;
        if (k > 0 && basis.eigenvalues[k] > basis.eigenvalues[k - 1])
            monotone = false;
    }
    const Eigen::MatrixXd gram = basis.eigenvectors.transpose() *
                                 g.quad_weights.asDiagonal() *
                                 basis.eigenvectors;
    const double gram_error =
        (gram - Eigen::MatrixXd::Identity(basis.modes, basis.modes))
            .cwiseAbs()
            .maxCoeff();
    const double trace_fraction =
        basis.eigenvalues.sum() / (basis.sigma2 * g.domain_measure);

    // empirical covariance of the Gaussian log-field over 10^4 draws;
    // for a stationary kernel on a uniform 1D grid the estimate is
    // averaged over equal node lags before comparison
    const int n_draws = 10000;
    auto streams = make_rng_streams(diagnostics_seed(c.seed, 13), n_draws);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(g.n_nodes, g.n_nodes);
    for (auto& stream : streams) {
        const DiffusivitySample s = sample_lognormal_field(basis, stream);
        cov.selfadjointView<Eigen::Lower>().rankUpdate(s.log_nodal);
    }
    cov = Eigen::MatrixXd(cov.selfadjointView<Eigen::Lower>()) / n_draws;

    double max_rel = 0.0;
    int checked = 0;
    const double floor = 0.1 * basis.sigma2;
    if (g.dim == 1) {
        for (int lag = 0; lag <= g.cells_x; ++lag) {
            const double kernel = gaussian_kernel(
                basis.sigma2, basis.corr_length, 0.0, 0.0, lag * g.dx, 0.0);
            if (kernel < floor) continue;
            double acc = 0.0;
            const int pairs = g.n_nodes - lag;
            for (int i = 0; i < pairs; ++i) acc += cov(i + lag, i);
            const double rel = std::abs(acc / pairs - kernel) / kernel;
            max_rel = std::max(max_rel, rel);
            ++checked;
        }
    } else {
        for (int i = 0; i < g.n_nodes; ++i)
            for (int j = 0; j <= i; ++j) {
                const double kernel = gaussian_kernel(
                    basis.sigma2, basis.corr_length, g.node_x[i], g.node_y[i],
                    g.node_x[j], g.node_y[j]);
                if (kernel < floor) continue;
                const double rel = std::abs(cov(i, j) - kernel) / kernel;
                max_rel = std::max(max_rel, rel);
                ++checked;
            }
    }

    const bool passed =
        monotone && nonnegative && gram_error <= 1e-10 && max_rel <= 0.05;
    return json{{"modes", basis.modes},
                {"eigenvalues_nonincreasing", monotone},
                {"eigenvalues_nonnegative", nonnegative},
                {"gram_error", gram_error},
                {"gram_tolerance", 1e-10},
                {"trace_fraction", trace_fraction},
                {"covariance_draws", n_draws},
                {"covariance_entries_checked", checked},
                {"covariance_max_rel_error", max_rel},
                {"covariance_tolerance", 0.05},
                {"passed", passed}};
}

json suite_rate(const ExperimentConfig& c) {
    // reduced problem: empirical-risk rate of the averaged iterate against
    // a fixed-pool minimizer solved to high accuracy
    ExperimentConfig rc = c;
    rc.grid.cells_x = 20;
    rc.grid.n_t = 40;
    rc.grid.dim = 1;
    const BuiltProblem bp = build_problem(rc);
    const ControlProblem& problem = bp.problem;

    const int pool_size = 500;
    const auto pool =
        draw_pool(problem, diagnostics_seed(rc.seed, 20), pool_size);
    const Field u_star = saa_minimize(problem, pool, 1e-8);
    const double f_star = pool_risk(problem, u_star, pool);

    const ProblemConstants constants =
        compute_constants(problem, bp.u0, diagnostics_seed(rc.seed, 21),
                          std::max(1, rc.diagnostics.risk_samples),
                          rc.u_max_margin);
    OptimizerParams params = params_from_config(rc, constants.u_max);
    params.store_iterates = true;
    params.risk_every = 0;

    const int n_max = 200;
    const std::vector<int> ns{10, 16, 25, 40, 63, 100, 158, 200};
    const int reps = 20;
    std::vector<std::vector<double>> gaps(reps);
    std::vector<double> rep_slopes(reps);

    std::vector<double> log_n;
    for (int n : ns) log_n.push_back(std::log(static_cast<double>(n)));
    const double log_n_mean =
        std::accumulate(log_n.begin(), log_n.end(), 0.0) / log_n.size();
    double log_n_ss = 0.0;
    for (double v : log_n) log_n_ss += (v - log_n_mean) * (v - log_n_mean);

    std::vector<double> mean_gap(ns.size(), 0.0);
    for (int r = 0; r < reps; ++r) {
        const auto trace =
            run_optimizer(problem, bp.u0, params, n_max,
                          diagnostics_seed(rc.seed, 100 + r));
        gaps[r].reserve(ns.size());
        double sxy = 0.0;
        for (std::size_t k = 0; k < ns.size(); ++k) {
            // suffix average u_{n/2+1}..u_n: the transient of the first few
            // iterates otherwise dominates the gap decay at small n
            const int n = ns[k];
            Field avg = Field::zeros(*bp.grid);
            const int lo = n / 2 + 1;
            for (int j = lo; j <= n; ++j)
                avg.values += trace.iterates[j].values;
            avg.values /= (n - lo + 1);
            const double gap = pool_risk(problem, avg, pool) - f_star;
            gaps[r].push_back(gap);
            mean_gap[k] += gap / reps;
            sxy += (log_n[k] - log_n_mean) * std::log(std::max(gap, 1e-300));
        }
        rep_slopes[r] = sxy / log_n_ss;
    }

    double sxy = 0.0;
    for (std::size_t k = 0; k < ns.size(); ++k)
        sxy += (log_n[k] - log_n_mean) * std::log(mean_gap[k]);
    const double slope = sxy / log_n_ss;

    double slope_mean = 0.0;
    for (double s : rep_slopes) slope_mean += s / reps;
    double slope_var = 0.0;
    for (double s : rep_slopes)
        slope_var += (s - slope_mean) * (s - slope_mean) / (reps - 1);
    const double half_width =
        2.093 * std::sqrt(slope_var / reps); // 95% t, 19 dof
    const bool passed = slope >= -1.2 && slope <= -0.4;

    json gap_table = json::array();
    for (std::size_t k = 0; k < ns.size(); ++k)
        gap_table.push_back(json{{"n", ns[k]}, {"mean_gap", mean_gap[k]}});
    return json{{"pool_size", pool_size},
                {"replications", reps},
                {"f_star", f_star},
                {"slope_of_mean_gap", slope},
                {"slope_ci_low", slope_mean - half_width},
                {"slope_ci_high", slope_mean + half_width},
                {"slope_range", json::array({-1.2, -0.4})},
                {"gaps", gap_table},
                {"passed", passed}};
}

} // namespace

VerifyResult run_verification(const ExperimentConfig& c,
                              const std::string& suite) {
    json body;
    if (suite == "gradient")
        body = suite_gradient(c);
    else if (suite == "convexity")
        body = suite_convexity(c);
    else if (suite == "lipschitz")
        body = suite_lipschitz(c);
    else if (suite == "solver-order")
        body = suite_solver_order(c);
    else if (suite == "kl")
        body = suite_kl(c);
    else if (suite == "rate")
        body = suite_rate(c);
    else
        throw InvalidConfigError("unknown verification suite '" + suite + "'");

    VerifyResult result;
    result.passed = body.at("passed").get<bool>();
    result.report = json{{"schema_version", kCsvSchemaVersion},
                         {"code_version", kCodeVersion},
                         {"seed", c.seed},
                         {"suite", suite},
                         {"config", config_to_json(c)},
                         {"checks", body},
                         {"passed", result.passed}};

    const fs::path out(c.out_dir.empty() ? "." : c.out_dir);
    fs::create_directories(out);
    std::ofstream os = open_out(out / ("verify_" + suite + ".json"));
    os << result.report.dump(2) << "\n";
    return result;
}

void kl_report(const ExperimentConfig& c, std::ostream& out) {
    const BuiltProblem bp = build_problem(c);
    if (!bp.problem.kl)
        throw InvalidConfigError("kl-report: config has no KL modes");
    const KlBasis& basis = *bp.problem.kl;
    const double total = basis.sigma2 * bp.grid->domain_measure;
    out << "mode eigenvalue captured_fraction\n";
    double cum = 0.0;
    for (int k = 0; k < basis.modes; ++k) {
        cum += basis.eigenvalues[k];
        out << (k + 1) << ' ' << fmt(basis.eigenvalues[k], 10) << ' '
            << fmt(total > 0.0 ? cum / total : 1.0, 10) << "\n";
    }
    out << "# total_variance=" << fmt(total, 10)
        << " captured=" << fmt(cum, 10) << "\n";
}

} // namespace pdeopt
