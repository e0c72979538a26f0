#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "pdeopt/experiment.hpp"
#include "pdeopt/objective.hpp"

using namespace pdeopt;

namespace {

const double kPi = std::acos(-1.0);

Field random_field(const SpaceTimeGrid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Field f = Field::zeros(g);
    for (int n = 0; n < f.values.cols(); ++n)
        for (int i = 0; i < f.values.rows(); ++i) f.values(i, n) = dist(rng);
    return f;
}

// deterministic tracking problem on a reduced grid (fixed operators,
// no random inputs): every draw returns the same realization
struct FixedProblem {
    std::unique_ptr<SpaceTimeGrid> grid;
    std::shared_ptr<DiscreteOperators> ops;
    ControlProblem problem;
};

FixedProblem make_fixed_problem(double alpha = 0.1) {
    FixedProblem fp;
    fp.grid = std::make_unique<SpaceTimeGrid>(
        build_grid({0.0, 1.0}, 20, 0.2, 40));
    fp.ops = std::make_shared<DiscreteOperators>(
        assemble_operators(*fp.grid, DiffusivityField::uniform(*fp.grid, 1.0)));
    fp.problem.grid = fp.grid.get();
    fp.problem.alpha = alpha;
    fp.problem.a_min = 0.1;
    fp.problem.y0.resize(fp.grid->n_nodes);
    for (int i = 0; i < fp.grid->n_nodes; ++i)
        fp.problem.y0[i] = fp.grid->node_x[i] * (1.0 - fp.grid->node_x[i]);
    fp.problem.y_d = Field::zeros(*fp.grid);
    fp.problem.g_fixed = Field::zeros(*fp.grid);
    fp.problem.fixed_ops = fp.ops;
    return fp;
}

} // namespace

TEST_CASE("control norm cache is consistent with the quadrature") {
    const SpaceTimeGrid g = build_grid({0.0, 1.0}, 20, 0.2, 40);
    const Field f = random_field(g, 4);
    const ControlFunction c = ControlFunction::make(f);
    CHECK(std::abs(c.l2_norm - norm(c.field)) <= 1e-12 * c.l2_norm);
}

TEST_CASE("sample cost: zero data and vanishing tracking term") {
    FixedProblem fp = make_fixed_problem();
    RngStream rng(1, 0);
    const Sample s = draw_sample(fp.problem, rng);
    SUBCASE("everything zero gives zero cost") {
        ControlProblem p = fp.problem;
        p.y0.setZero();
        const Field u = Field::zeros(*fp.grid);
        CHECK(sample_cost(p, u, s) == 0.0);
    }
    SUBCASE("y_d equal to the achieved state leaves only the penalty") {
        const Field u = random_field(*fp.grid, 7);
        ControlProblem p = fp.problem;
        p.y_d = solve_state(p, u, s);
        const double cost = sample_cost(p, u, s);
        const double penalty = 0.5 * p.alpha * inner_product(u, u);
        CHECK(std::abs(cost - penalty) <= 1e-12 * penalty);
        // and the adjoint term of the gradient vanishes
        const Field grad = sample_gradient(p, u, s);
        CHECK(norm(grad - p.alpha * u) <= 1e-12 * norm(grad));
    }
}

TEST_CASE("gradient matches central finite differences of the cost") {
    FixedProblem fp = make_fixed_problem();
    RngStream rng(2, 0);
    const Sample s = draw_sample(fp.problem, rng);
    const Field u = random_field(*fp.grid, 12);
    const Field grad = sample_gradient(fp.problem, u, s);
    const double eps = 1e-4;
    for (unsigned d = 0; d < 3; ++d) {
        Field v = random_field(*fp.grid, 50 + d);
        v *= 1.0 / norm(v);
        const double fd = (sample_cost(fp.problem, u + eps * v, s) -
                           sample_cost(fp.problem, u - eps * v, s)) /
                          (2.0 * eps);
        const double dir = inner_product(grad, v);
        CHECK(std::abs(fd - dir) <= 1e-6 * std::abs(dir));
    }
}

TEST_CASE("gradient vanishes at the fixed-realization minimizer") {
    FixedProblem fp = make_fixed_problem();
    RngStream rng(3, 0);
    const std::vector<Sample> pool{draw_sample(fp.problem, rng)};
    const Field u_star = saa_minimize(fp.problem, pool, 1e-10);
    const Field grad = sample_gradient(fp.problem, u_star, pool[0]);
    CHECK(norm(grad) <= 1e-10);
}

TEST_CASE("risk estimation: degenerate counts and deterministic problems") {
    FixedProblem fp = make_fixed_problem();
    const Field u = random_field(*fp.grid, 19);
    SUBCASE("N = 1 is flagged degenerate with zero variance") {
        const RiskEstimate r = estimate_risk(fp.problem, u, 42, 1);
        CHECK(r.degenerate);
        CHECK(r.sample_count == 1);
        CHECK(r.var_cost == 0.0);
        CHECK(r.gradient_variance == 0.0);
        RngStream rng(42, 0);
        const Sample s = draw_sample(fp.problem, rng);
        CHECK(r.mean_cost == doctest::Approx(sample_cost(fp.problem, u, s))
                                 .epsilon(1e-14));
    }
    SUBCASE("identical realizations give exactly zero variance") {
        const RiskEstimate r = estimate_risk(fp.problem, u, 42, 5);
        CHECK(r.var_cost == 0.0);
        CHECK(r.gradient_variance == 0.0);
        CHECK_FALSE(r.degenerate);
    }
}

TEST_CASE("Monte Carlo risk is stable under doubling the sample size") {
    const BuiltProblem bp = build_problem(example1_defaults());
    const Field u = Field::constant(*bp.grid, 2.0);
    const RiskEstimate half = estimate_risk(bp.problem, u, 42, 50);
    const RiskEstimate full = estimate_risk(bp.problem, u, 42, 100);
    const double bound =
        4.0 * std::sqrt(full.var_cost) / std::sqrt(50.0);
    CHECK(std::abs(full.mean_cost - half.mean_cost) <= bound);
}

TEST_CASE("theory constants on the unit interval") {
    const BuiltProblem bp = build_problem(example1_defaults());
    CHECK(dirichlet_eigenvalue(*bp.grid) ==
          doctest::Approx(kPi * kPi).epsilon(1e-14));

    // cross-check against the discrete generalized eigenproblem A x = l M x
    const DiscreteOperators ops =
        assemble_operators(*bp.grid, DiffusivityField::uniform(*bp.grid, 1.0));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Eigen::MatrixXd(ops.stiffness), Eigen::MatrixXd(ops.mass));
    CHECK(es.eigenvalues()[0] == doctest::Approx(kPi * kPi).epsilon(1e-3));

    const ProblemConstants c =
        compute_constants(bp.problem, bp.u0, 42, 20);
    const double cp = 1.0 / kPi;
    CHECK(c.poincare == doctest::Approx(cp).epsilon(1e-14));
    CHECK(c.lipschitz ==
          doctest::Approx(0.1 + std::pow(cp, 4) / 0.01).epsilon(1e-14));
    CHECK(c.lipschitz == doctest::Approx(1.1266).epsilon(1e-4));
    CHECK(c.envelope ==
          doctest::Approx(std::max(c.lipschitz, cp * cp / 0.1)).epsilon(1e-14));
    CHECK(c.envelope == c.lipschitz); // max{1.1266, 1.0132}
    CHECK(c.u_max > std::sqrt(2.0 * c.risk_at_u0 / c.alpha));

    ControlProblem bad = bp.problem;
    bad.a_min = 0.0;
    CHECK_THROWS_AS(compute_constants(bad, bp.u0, 42, 5), CoercivityError);
}

TEST_CASE("strong convexity and Lipschitz inequalities on random triples") {
    const BuiltProblem bp = build_problem(example1_defaults());
    const ProblemConstants c = compute_constants(bp.problem, bp.u0, 42, 20);
    for (unsigned trial = 0; trial < 10; ++trial) {
        RngStream rng(60, trial);
        const Sample s = draw_sample(bp.problem, rng);
        const Field u = random_field(*bp.grid, 300 + trial);
        const Field v = random_field(*bp.grid, 400 + trial);
        const Field du = v - u;
        const Field dg = sample_gradient(bp.problem, v, s) -
                         sample_gradient(bp.problem, u, s);
        const double nd2 = inner_product(du, du);
        CHECK(inner_product(dg, du) >= (bp.problem.alpha - 1e-10) * nd2);
        CHECK(norm(dg) <= 1.01 * c.lipschitz * std::sqrt(nd2));
    }
}

TEST_CASE("heat energy: zero, constant, and dissipative trajectories") {
    const SpaceTimeGrid g = build_grid({0.0, 1.0}, 30, 0.2, 40);
    CHECK(heat_energy(Field::zeros(g)).cwiseAbs().maxCoeff() == 0.0);

    const Field c3 = Field::constant(g, 3.0);
    const Eigen::VectorXd e = heat_energy(c3);
    for (int n = 0; n <= g.n_t; ++n)
        CHECK(e[n] == doctest::Approx(9.0 * g.domain_measure).epsilon(1e-12));
    // a baseline shift cancels a constant field exactly
    CHECK(heat_energy(c3, 3.0).cwiseAbs().maxCoeff() == 0.0);

    const DiscreteOperators ops =
        assemble_operators(g, DiffusivityField::uniform(g, 1.0));
    Eigen::VectorXd y0(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i) y0[i] = std::sin(kPi * g.node_x[i]);
    const Field zero = Field::zeros(g);
    const Eigen::VectorXd ed =
        heat_energy(solve_forward(ops, zero, zero, y0));
    for (int n = 1; n <= g.n_t; ++n) CHECK(ed[n] <= ed[n - 1] * (1.0 + 1e-13));
}

TEST_CASE("variance envelope check") {
    SUBCASE("zero deviations trivially satisfy the bound") {
        const std::vector<double> dev(10, 0.0);
        const VarianceEnvelopeReport r = variance_envelope_check(dev, 0.5);
        for (bool ok : r.satisfied) CHECK(ok);
        CHECK(r.calibrated_sigma2 == 0.0);
        // j = 1: the bound reduces to sigma^2 itself
        CHECK(r.bound[0] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("the calibrated sigma^2 is the tightest satisfying value") {
        const std::vector<double> dev{1.0, 4.0, 2.0};
        const VarianceEnvelopeReport r = variance_envelope_check(dev, 1.0);
        CHECK_FALSE(r.satisfied[1]);
        const VarianceEnvelopeReport tight =
            variance_envelope_check(dev, r.calibrated_sigma2 * (1 + 1e-12));
        for (bool ok : tight.satisfied) CHECK(ok);
    }
    SUBCASE("empty trace is invalid") {
        CHECK_THROWS_AS(variance_envelope_check({}, 1.0), InvalidConfigError);
    }
}

TEST_CASE("variance assumption check is coherent and validates its input") {
    const BuiltProblem bp = build_problem(example1_defaults());
    const ProblemConstants c = compute_constants(bp.problem, bp.u0, 42, 10);
    const VarianceAssumptionReport r =
        check_variance_assumption(bp.problem, c, 1.0, 42, 10);
    CHECK(r.satisfiable == (r.lhs <= r.rhs));
    CHECK_THROWS_AS(check_variance_assumption(bp.problem, c, 0.0, 42, 10),
                    InvalidConfigError);
}

TEST_CASE("pool risk equals the average of the sample costs") {
    FixedProblem fp = make_fixed_problem();
    const auto pool = draw_pool(fp.problem, 8, 3);
    const Field u = random_field(*fp.grid, 77);
    double mean = 0.0;
    for (const Sample& s : pool) mean += sample_cost(fp.problem, u, s) / 3.0;
    CHECK(pool_risk(fp.problem, u, pool) ==
          doctest::Approx(mean).epsilon(1e-14));
}
