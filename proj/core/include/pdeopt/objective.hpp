#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "pdeopt/grid.hpp"
#include "pdeopt/pde.hpp"
#include "pdeopt/randomness.hpp"

namespace pdeopt {

/// A control with its cached space-time L2 norm.
struct ControlFunction {
    Field field;
    double l2_norm = 0.0;

    static ControlFunction make(Field f) {
        ControlFunction c;
        c.l2_norm = norm(f);
        c.field = std::move(f);
        return c;
    }
};

/// The stochastic tracking problem: state dynamics, target, regularization,
/// and the random inputs (lognormal diffusivity and/or random pulse load).
/// When no KL basis is set, the diffusivity is deterministic and fixed_ops
/// is shared across all samples.
struct ControlProblem {
    const SpaceTimeGrid* grid = nullptr;
    double alpha = 0.1;
    double a_min = 0.1; // coercivity bound, used by the theory constants
    Eigen::VectorXd y0; // nodal initial condition (physical units)
    Field y_d;
    Field g_fixed;               // deterministic load component
    double boundary_value = 0.0; // constant Dirichlet lift

    std::shared_ptr<const KlBasis> kl;          // random diffusivity, or null
    std::shared_ptr<const PulseConfig> pulses;  // random load, or null
    std::shared_ptr<const DiscreteOperators> fixed_ops; // required if !kl
};

/// One realization of the uncertain inputs, with its operators factorized.
struct Sample {
    std::shared_ptr<const DiscreteOperators> ops;
    Field g; // total load for this realization
    std::optional<Eigen::VectorXd> xi;
    std::optional<PulseRealization> pulse;
    std::uint64_t stream_id = 0;
};

Sample draw_sample(const ControlProblem& problem, RngStream& rng);

/// Draws N samples from sub-streams (seed, 0..N-1).
std::vector<Sample> draw_pool(const ControlProblem& problem,
                              std::uint64_t master_seed, int n);

/// Forward solve for one realization; returns the physical trajectory
/// (boundary nodes carry the Dirichlet value at every level).
Field solve_state(const ControlProblem& problem, const Field& u,
                  const Sample& sample);

double sample_cost(const ControlProblem& problem, const Field& u,
                   const Sample& sample);

Field sample_gradient(const ControlProblem& problem, const Field& u,
                      const Sample& sample);

/// Shares the forward solve between the cost and the gradient.
std::pair<double, Field> sample_cost_and_gradient(const ControlProblem& problem,
                                                  const Field& u,
                                                  const Sample& sample);

struct RiskEstimate {
    double mean_cost = 0.0;
    double var_cost = 0.0; // unbiased sample variance
    Field mean_gradient;
    double gradient_variance = 0.0; // mean of ||grad_i - mean||^2
    int sample_count = 0;
    bool degenerate = false; // single-sample estimate
};

RiskEstimate estimate_risk(const ControlProblem& problem, const Field& u,
                           std::uint64_t master_seed, int n);
RiskEstimate estimate_risk(const ControlProblem& problem, const Field& u,
                           const std::vector<Sample>& samples);

/// Theory constants of the problem.
struct ProblemConstants {
    double alpha = 0.0;
    double a_min = 0.0;
    double poincare = 0.0;        // C_p with ||v|| <= C_p ||grad v||
    double lipschitz = 0.0;       // M = alpha + C_p^4 / a_min^2
    double envelope = 0.0;        // K = max{M, C_p^2 / a_min}
    double u_max = 0.0;           // margin * sqrt(2 F(u0) / alpha)
    double risk_at_u0 = 0.0;      // Monte Carlo estimate behind u_max
};

/// Analytic first Dirichlet eigenvalue of the unit-diffusivity Laplacian on
/// the grid's box domain.
double dirichlet_eigenvalue(const SpaceTimeGrid& grid);

ProblemConstants compute_constants(const ControlProblem& problem,
                                   const Field& u0, std::uint64_t master_seed,
                                   int n_samples, double margin = 2.0);

/// E(t_n) = integral over D of (y - baseline)^2 at each time level.
Eigen::VectorXd heat_energy(const Field& y, double baseline = 0.0);

/// Check of the iteration-wise variance envelope sigma^2 (1 + ln j) against
/// recorded squared gradient deviations ||grad f_k(u_k) - grad F(u_k)||^2.
struct VarianceEnvelopeReport {
    std::vector<double> running_max; // max over k <= j of deviations
    std::vector<double> bound;       // sigma^2 (1 + ln j)
    std::vector<bool> satisfied;
    double calibrated_sigma2 = 0.0;  // smallest sigma^2 satisfying all j
};

VarianceEnvelopeReport variance_envelope_check(
    const std::vector<double>& deviation_sq, double sigma2);

/// Monte Carlo check of the exponential-moment inequality that implies the
/// strengthened variance condition for a supplied sigma^2.
struct VarianceAssumptionReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfiable = false;
};

VarianceAssumptionReport check_variance_assumption(
    const ControlProblem& problem, const ProblemConstants& constants,
    double sigma2, std::uint64_t master_seed, int n_samples);

/// Deterministic minimizer of the empirical (fixed-pool) risk by conjugate
/// gradients on the pooled optimality system; the independent reference
/// oracle for optimizer tests and rate studies.
Field saa_minimize(const ControlProblem& problem,
                   const std::vector<Sample>& pool, double grad_tol,
                   int max_iters = 1000);

/// Empirical risk over a fixed pool.
double pool_risk(const ControlProblem& problem, const Field& u,
                 const std::vector<Sample>& pool);

} // namespace pdeopt
