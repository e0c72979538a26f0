#include "pdeopt/pde.hpp"

#include <cmath>

namespace pdeopt {

namespace {

Eigen::VectorXd gather_interior(const SpaceTimeGrid& g,
                                const Eigen::Ref<const Eigen::VectorXd>& full) {
    Eigen::VectorXd out(g.n_interior());
    for (int k = 0; k < g.n_interior(); ++k) out[k] = full[g.interior_nodes[k]];
    return out;
}

void scatter_interior(const SpaceTimeGrid& g, const Eigen::VectorXd& interior,
                      Eigen::Ref<Eigen::MatrixXd> values, int level) {
    for (int k = 0; k < g.n_interior(); ++k)
        values(g.interior_nodes[k], level) = interior[k];
}

Eigen::VectorXd step_solve(const DiscreteOperators& ops,
                           const Eigen::VectorXd& rhs,
                           const LinearSolveContract& contract) {
    Eigen::VectorXd x = ops.stepping_factor->solve(rhs);
    if (contract.check_residual) {
        const double rhs_norm = rhs.norm();
        const double res = (ops.stepping * x - rhs).norm();
        if (rhs_norm > 0.0 && res > contract.rel_tol * rhs_norm)
            throw SolverError("implicit step residual exceeds tolerance",
                              res / rhs_norm);
    }
    return x;
}

void check_grid(const DiscreteOperators& ops, const Field& f,
                const char* what) {
    if (f.grid == nullptr || !f.grid->same_layout(*ops.grid))
        throw ShapeError(std::string(what) + ": field grid mismatch");
}

// forward solve with a single combined interior source per level
Field forward_core(const DiscreteOperators& ops,
                   const std::vector<Eigen::VectorXd>& source_int,
                   const Eigen::VectorXd& w0,
                   const LinearSolveContract& contract) {
    const SpaceTimeGrid& g = *ops.grid;
    Field y = Field::zeros(g);
    Eigen::VectorXd w = w0;
    scatter_interior(g, w, y.values, 0);
    for (int n = 1; n <= g.n_t; ++n) {
        const Eigen::VectorXd rhs =
            ops.mass * (w + g.dt * source_int[n]);
        w = step_solve(ops, rhs, contract);
        scatter_interior(g, w, y.values, n);
    }
    return y;
}

} // namespace

Field solve_forward(const DiscreteOperators& ops, const Field& g,
                    const Field& u, const Eigen::VectorXd& y0,
                    const LinearSolveContract& contract) {
    check_grid(ops, g, "solve_forward(g)");
    check_grid(ops, u, "solve_forward(u)");
    const SpaceTimeGrid& grid = *ops.grid;
    if (y0.size() != grid.n_nodes)
        throw ShapeError("solve_forward: initial condition size mismatch");

    std::vector<Eigen::VectorXd> source_int(grid.n_t + 1);
    for (int n = 1; n <= grid.n_t; ++n)
        source_int[n] =
            gather_interior(grid, g.values.col(n) + u.values.col(n));
    return forward_core(ops, source_int, gather_interior(grid, y0), contract);
}

Field solve_sensitivity(const DiscreteOperators& ops, const Field& v,
                        const LinearSolveContract& contract) {
    check_grid(ops, v, "solve_sensitivity");
    const SpaceTimeGrid& grid = *ops.grid;
    std::vector<Eigen::VectorXd> source_int(grid.n_t + 1);
    for (int n = 1; n <= grid.n_t; ++n)
        source_int[n] = gather_interior(grid, v.values.col(n));
    return forward_core(ops, source_int,
                        Eigen::VectorXd::Zero(grid.n_interior()), contract);
}

Field solve_adjoint(const DiscreteOperators& ops, const Field& y,
                    const Field& y_d, const LinearSolveContract& contract) {
    check_grid(ops, y, "solve_adjoint(y)");
    check_grid(ops, y_d, "solve_adjoint(y_d)");
    const SpaceTimeGrid& grid = *ops.grid;

    Eigen::VectorXd w_int = gather_interior(grid, grid.quad_weights);
    Field p = Field::zeros(grid);
    // multiplier recursion: (M + dt A) lam_n = dt W r_n + M lam_{n+1},
    // lam_{nt} = 0 because the terminal level carries zero temporal weight
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(grid.n_interior());
    for (int n = grid.n_t - 1; n >= 1; --n) {
        const Eigen::VectorXd r_int =
            gather_interior(grid, y.values.col(n) - y_d.values.col(n));
        const Eigen::VectorXd rhs =
            grid.dt * w_int.cwiseProduct(r_int) + ops.mass * lam;
        lam = step_solve(ops, rhs, contract);
        // representer of the gradient in the grid inner product
        const Eigen::VectorXd p_int =
            (ops.mass * lam).cwiseQuotient(w_int);
        scatter_interior(grid, p_int, p.values, n);
    }
    return p;
}

} // namespace pdeopt
