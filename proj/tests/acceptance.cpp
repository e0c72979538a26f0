// Acceptance harness: one pass/fail line per criterion, exit code = number
// of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pdeopt/experiment.hpp"
#include "pdeopt/optimize.hpp"

using namespace pdeopt;
namespace fs = std::filesystem;

namespace {

const double kPi = std::acos(-1.0);

int g_failures = 0;

void report(int criterion, bool passed, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", passed ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

Field random_unit_field(const SpaceTimeGrid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Field f = Field::zeros(g);
    for (int n = 0; n < f.values.cols(); ++n)
        for (int i = 0; i < f.values.rows(); ++i) f.values(i, n) = dist(rng);
    f *= 1.0 / norm(f);
    return f;
}

// least-squares slope of log(y) against log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (int i = 0; i < n; ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("pdeopt_acceptance_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void criterion1_gradient() {
    const BuiltProblem bp = build_problem(example1_defaults());
    RngStream rng(diagnostics_seed(7, 10), 0);
    const Sample s = draw_sample(bp.problem, rng);
    const Field grad = sample_gradient(bp.problem, bp.u0, s);
    const double eps = 1e-4;
    double worst = 0.0;
    for (unsigned d = 0; d < 10; ++d) {
        const Field v = random_unit_field(*bp.grid, 1000 + d);
        const double fd = (sample_cost(bp.problem, bp.u0 + eps * v, s) -
                           sample_cost(bp.problem, bp.u0 - eps * v, s)) /
                          (2.0 * eps);
        const double dir = inner_product(grad, v);
        worst = std::max(worst, std::abs(fd - dir) / std::abs(dir));
    }
    report(1, worst <= 1e-6,
           fmt("adjoint gradient vs central differences, max relative "
               "mismatch %.3e (tolerance 1e-6, 10 directions)",
               worst));
}

double sine_solution_error(int cells, int steps) {
    const SpaceTimeGrid g = build_grid({0.0, 1.0}, cells, 0.2, steps);
    const DiscreteOperators ops =
        assemble_operators(g, DiffusivityField::uniform(g, 1.0));
    Eigen::VectorXd y0(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i) y0[i] = std::sin(kPi * g.node_x[i]);
    const Field zero = Field::zeros(g);
    const Field y = solve_forward(ops, zero, zero, y0);
    const Field exact = Field::from_function(g, [](double x, double, double t) {
        return std::exp(-kPi * kPi * t) * std::sin(kPi * x);
    });
    return norm(y - exact) / norm(exact);
}

void criterion2_solver() {
    const double fine = sine_solution_error(50, 100);
    const double coarse = sine_solution_error(25, 50);
    const double ratio = coarse / fine;
    report(2, fine <= 2e-2 && ratio >= 1.8,
           fmt("closed-form heat solution: relative error %.4e at 50x100 "
               "(tolerance 2e-2), refinement ratio %.3f (needs >= 1.8)",
               fine, ratio));
}

void criterion3_convexity_lipschitz() {
    const BuiltProblem bp = build_problem(example1_defaults());
    const ProblemConstants c =
        compute_constants(bp.problem, bp.u0, diagnostics_seed(7, 1), 20);
    int convex_ok = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_ratio = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        RngStream rng(diagnostics_seed(7, 11), static_cast<std::uint64_t>(t));
        const Sample s = draw_sample(bp.problem, rng);
        Field u = random_unit_field(*bp.grid, 2000 + t);
        Field v = random_unit_field(*bp.grid, 3000 + t);
        u *= 2.0;
        v *= 2.0;
        const Field du = v - u;
        const Field dg = sample_gradient(bp.problem, v, s) -
                         sample_gradient(bp.problem, u, s);
        const double nd2 = inner_product(du, du);
        const double margin =
            (inner_product(dg, du) - bp.problem.alpha * nd2) / nd2;
        worst_margin = std::min(worst_margin, margin);
        if (margin >= -1e-10) ++convex_ok;
        worst_ratio = std::max(worst_ratio, norm(dg) / std::sqrt(nd2));
    }
    const bool passed =
        convex_ok == trials && worst_ratio <= 1.01 * c.lipschitz;
    report(3, passed,
           fmt("strong convexity %d/%d (worst margin %.3e >= -1e-10), "
               "Lipschitz ratio %.4f vs limit %.4f (M = %.4f)",
               convex_ok, trials, worst_margin, worst_ratio,
               1.01 * c.lipschitz, c.lipschitz));
}

void criterion4_example1() {
    const ExperimentConfig c = example1_defaults();
    const BuiltProblem bp = build_problem(c);
    OptimizerParams params;
    params.eta = c.optimizer.eta;
    params.b0 = c.optimizer.b0;
    const OptimizationTrace trace =
        run_optimizer(bp.problem, bp.u0, params, c.optimizer.iters, c.seed);

    // (a) transient decrease over roughly the first 10 iterations
    double early = 0.0, late = 0.0;
    for (int j = 0; j < 10; ++j) early += trace.records[j].cost / 10.0;
    for (int j = 10; j <= 50; ++j) late += trace.records[j].cost / 41.0;
    const double transient_ratio = early / late;

    // (b) log-log decay of the sampled cost over iterations 1..10
    std::vector<double> iters, costs;
    for (int j = 0; j < 10; ++j) {
        iters.push_back(j + 1.0);
        costs.push_back(trace.records[j].cost);
    }
    const double slope = loglog_slope(iters, costs);

    // (c) the controlled state mean at the end of the horizon, against the
    // peak of the uncontrolled state mean (which sits at the initial bump)
    const auto pool = draw_pool(bp.problem, diagnostics_seed(c.seed, 2), 100);
    const Field u_zero = Field::zeros(*bp.grid);
    Eigen::VectorXd mean_final = Eigen::VectorXd::Zero(bp.grid->n_nodes);
    Eigen::MatrixXd mean_unc =
        Eigen::MatrixXd::Zero(bp.grid->n_nodes, bp.grid->n_levels());
    for (const Sample& s : pool) {
        mean_final +=
            solve_state(bp.problem, trace.final_iterate, s).slice(bp.grid->n_t) /
            100.0;
        mean_unc += solve_state(bp.problem, u_zero, s).values / 100.0;
    }
    const double state_ratio =
        mean_final.cwiseAbs().maxCoeff() / mean_unc.cwiseAbs().maxCoeff();

    const bool passed =
        transient_ratio >= 3.0 && slope <= -0.7 && state_ratio <= 0.2;
    report(4, passed,
           fmt("example 1 run: transient cost ratio %.2f (needs >= 3), "
               "cost slope over iterations 1-10 %.3f (needs <= -0.7), "
               "final state-mean ratio %.4f (needs <= 0.2)",
               transient_ratio, slope, state_ratio));
}

void criterion5_robustness() {
    ExperimentConfig c = example1_defaults();
    c.alpha = 0.01;
    const BuiltProblem bp = build_problem(c);
    const int n = 200;

    auto grad_ratio = [&](const OptimizerParams& params) {
        const OptimizationTrace t =
            run_optimizer(bp.problem, bp.u0, params, n, c.seed);
        std::vector<double> tail;
        for (int j = n - 19; j <= n; ++j)
            tail.push_back(t.records[j].grad_norm);
        std::nth_element(tail.begin(), tail.begin() + 10, tail.end());
        const double median = tail[10];
        return median / t.records[0].grad_norm;
    };

    OptimizerParams adagrad; // eta / b0 = 10: initial step size 10
    adagrad.method = OptimizerMethod::AdaGrad;
    adagrad.eta = 1.0;
    adagrad.b0 = 0.1;
    OptimizerParams sgd; // eta0 = 10: initial step size 10
    sgd.method = OptimizerMethod::Sgd;
    sgd.eta0 = 10.0;

    const double r_ada = grad_ratio(adagrad);
    const double r_sgd = grad_ratio(sgd);
    const bool passed = r_ada < 0.5 && r_sgd >= 1.0;
    report(5, passed,
           fmt("alpha = 0.01, 200 iterations: AdaGrad final/initial gradient "
               "ratio %.4f (needs < 0.5), SGD ratio %.4f (needs >= 1); the "
               "SGD clause is structurally unattainable for the 1/(j+1) "
               "step rule, whose deterministic contraction already caps the "
               "ratio near n^(-alpha*eta0) = %.2f",
               r_ada, r_sgd, std::pow(double(n), -0.01 * 10.0)));
}

void criterion6_rate() {
    ExperimentConfig c = example1_defaults();
    c.out_dir = fresh_dir("rate").string();
    const VerifyResult r = run_verification(c, "rate");
    const auto& checks = r.report.at("checks");
    const double slope = checks.at("slope_of_mean_gap").get<double>();
    report(6, r.passed,
           fmt("averaged-iterate optimality gap slope %.3f over n in "
               "[10, 200], 20 replications (needs [-1.2, -0.4]); CI "
               "[%.3f, %.3f]",
               slope, checks.at("slope_ci_low").get<double>(),
               checks.at("slope_ci_high").get<double>()));
}

void criterion7_kl() {
    ExperimentConfig c = example1_defaults();
    c.out_dir = fresh_dir("kl").string();
    const VerifyResult r = run_verification(c, "kl");
    report(7, r.passed,
           fmt("KL basis with 40 modes: eigenvalue ordering and 1e4-draw "
               "covariance check, max relative covariance error %.4f "
               "(needs <= 0.05 where the kernel exceeds 0.1 sigma^2)",
               r.report.at("checks").at("covariance_max_rel_error")
                   .get<double>()));
}

void criterion8_example2() {
    const ExperimentConfig c = example2_defaults();
    const BuiltProblem bp = build_problem(c);
    OptimizerParams params;
    params.eta = c.optimizer.eta; // 0.1
    params.b0 = c.optimizer.b0;   // 1.0
    const OptimizationTrace trace =
        run_optimizer(bp.problem, bp.u0, params, c.optimizer.iters, c.seed);

    const SpaceTimeGrid& g = *bp.grid;
    const auto pool = draw_pool(bp.problem, diagnostics_seed(c.seed, 3), 50);
    const Field u_zero = Field::zeros(g);
    Eigen::VectorXd e_ctrl = Eigen::VectorXd::Zero(g.n_levels());
    Eigen::VectorXd e_unc = Eigen::VectorXd::Zero(g.n_levels());
    for (const Sample& s : pool) {
        e_ctrl += heat_energy(solve_state(bp.problem, trace.final_iterate, s),
                              bp.problem.boundary_value) /
                  50.0;
        e_unc += heat_energy(solve_state(bp.problem, u_zero, s),
                             bp.problem.boundary_value) /
                 50.0;
    }
    // pointwise dominance past the first 5% of the horizon; absolute slack
    // covers time levels where both energies are zero to roundoff
    const double slack = 1e-9 * e_unc.maxCoeff();
    int violations = 0;
    double worst_excess = 0.0;
    for (int n = 0; n <= g.n_t; ++n) {
        if (n * g.dt <= 0.05 * g.T) continue;
        if (e_ctrl[n] > e_unc[n] + slack) {
            ++violations;
            worst_excess = std::max(worst_excess, e_ctrl[n] - e_unc[n]);
        }
    }
    const double int_ctrl = g.time_weights.dot(e_ctrl);
    const double int_unc = g.time_weights.dot(e_unc);
    const double reduction = 1.0 - int_ctrl / int_unc;
    report(8, violations == 0 && reduction >= 0.25,
           fmt("example 2 run: integrated energy reduction %.1f%% (needs >= "
               "25%%); %d time levels with controlled mean energy above "
               "uncontrolled past 5%% of the horizon (needs 0, worst excess "
               "%.1e vs peak %.1e); the pointwise clause is unattainable: "
               "the risk-minimizing control cools during the random pulse "
               "windows, so realizations whose pulse came early are "
               "overcooled in the inter-pulse troughs where the uncontrolled "
               "system has already relaxed to ambient",
               100.0 * reduction, violations, worst_excess,
               e_unc.maxCoeff()));
}

void criterion9_determinism() {
    ExperimentConfig c = example1_defaults();
    c.optimizer.iters = 10;
    c.diagnostics.state_samples = 10;
    c.diagnostics.risk_samples = 5;
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    c.out_dir = a.string();
    run_experiment(c);
    c.out_dir = b.string();
    run_experiment(c);
    int compared = 0, mismatched = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        ++compared;
        if (read_file(entry.path()) != read_file(b / entry.path().filename()))
            ++mismatched;
    }
    report(9, compared > 0 && mismatched == 0,
           fmt("repeated run with identical config and seed: %d/%d output "
               "files byte-identical",
               compared - mismatched, compared));
}

} // namespace

int main() {
    criterion1_gradient();
    criterion2_solver();
    criterion3_convexity_lipschitz();
    criterion4_example1();
    criterion5_robustness();
    criterion6_rate();
    criterion7_kl();
    criterion8_example2();
    criterion9_determinism();
    std::printf("%d of 9 criteria failed\n", g_failures);
    return g_failures;
}
