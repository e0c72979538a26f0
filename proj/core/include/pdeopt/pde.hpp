#pragma once

#include "pdeopt/grid.hpp"

namespace pdeopt {

/// Residual contract for the implicit time steps.
struct LinearSolveContract {
    double rel_tol = 1e-10;
    bool check_residual = true;
};

/// Implicit Euler solve of M dy/dt + A y = M (g + u) with homogeneous
/// Dirichlet data and initial condition y0 (nodal spatial values; boundary
/// entries are ignored). Returns the full space-time trajectory.
///
/// Sources are applied through the interior mass matrix at the new time
/// level, so the map from (g + u) to y is linear and its exact algebraic
/// transpose is realized by solve_adjoint.
Field solve_forward(const DiscreteOperators& ops, const Field& g,
                    const Field& u, const Eigen::VectorXd& y0,
                    const LinearSolveContract& contract = {});

/// Discrete adjoint of the forward map: returns the space-time field p such
/// that <s(v), y - y_d> = <v, p> holds exactly (in the grid inner product)
/// for every direction v, where s is the sensitivity map. The terminal and
/// initial slices of p are exactly zero; p is the backward implicit Euler
/// solution of -M dp/dt + A p = residual.
Field solve_adjoint(const DiscreteOperators& ops, const Field& y,
                    const Field& y_d, const LinearSolveContract& contract = {});

/// Sensitivity solve: forward solve with zero initial condition and source v.
Field solve_sensitivity(const DiscreteOperators& ops, const Field& v,
                        const LinearSolveContract& contract = {});

} // namespace pdeopt
