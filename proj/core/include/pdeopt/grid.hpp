#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <memory>
#include <vector>

#include "pdeopt/errors.hpp"

namespace pdeopt {

/// Tensor discretization of D x [0,T] on a structured grid.
///
/// Nodes are ordered x-fastest; in 2D node (ix, iy) has flat index
/// ix + iy * nodes_x. Spatial quadrature weights are the tensor trapezoid
/// weights (the lumped linear-FE mass), temporal weights are the left
/// rectangle rule: dt on levels 0..n_t-1 and 0 on the terminal level.
/// The zero terminal weight is what makes the discrete adjoint an exact
/// transpose of the implicit-Euler forward map while keeping the adjoint
/// terminal slice exactly zero.
struct SpaceTimeGrid {
    int dim = 1;
    std::array<double, 2> x_extent{0.0, 1.0};
    std::array<double, 2> y_extent{0.0, 0.0};
    int cells_x = 0;
    int cells_y = 0; // 0 in 1D
    double T = 0.0;
    int n_t = 0;
    double dx = 0.0;
    double dy = 0.0;
    double dt = 0.0;

    int n_nodes = 0;
    int n_elements = 0;
    double domain_measure = 0.0;

    Eigen::VectorXd node_x; // size n_nodes
    Eigen::VectorXd node_y; // size n_nodes (zero in 1D)
    Eigen::VectorXd quad_weights; // spatial nodal weights, sums to |D|
    Eigen::VectorXd time_weights; // size n_t + 1, sums to T

    std::vector<int> boundary_nodes;
    std::vector<int> interior_nodes;
    std::vector<int> interior_index; // node -> interior index, -1 on boundary

    int nodes_x() const { return cells_x + 1; }
    int nodes_y() const { return dim == 2 ? cells_y + 1 : 1; }
    int n_interior() const { return static_cast<int>(interior_nodes.size()); }
    int n_levels() const { return n_t + 1; }

    int node_index(int ix, int iy = 0) const { return ix + iy * nodes_x(); }

    bool same_layout(const SpaceTimeGrid& other) const {
        return dim == other.dim && cells_x == other.cells_x &&
               cells_y == other.cells_y && n_t == other.n_t &&
               x_extent == other.x_extent && y_extent == other.y_extent &&
               T == other.T;
    }
};

/// Builds a 1D grid on [extent0, extent1] with n_cells sub-intervals.
SpaceTimeGrid build_grid(const std::array<double, 2>& x_extent, int n_cells,
                         double T, int n_t);

/// Builds a 2D tensor grid on a rectangle.
SpaceTimeGrid build_grid(const std::array<double, 2>& x_extent,
                         const std::array<double, 2>& y_extent, int cells_x,
                         int cells_y, double T, int n_t);

/// A scalar space-time field: nodal values per time level.
struct Field {
    const SpaceTimeGrid* grid = nullptr;
    Eigen::MatrixXd values; // n_nodes x (n_t + 1)

    static Field zeros(const SpaceTimeGrid& g) {
        Field f;
        f.grid = &g;
        f.values = Eigen::MatrixXd::Zero(g.n_nodes, g.n_levels());
        return f;
    }

    static Field constant(const SpaceTimeGrid& g, double c) {
        Field f = zeros(g);
        f.values.setConstant(c);
        return f;
    }

    /// Samples f(x, y, t) at every node and time level (y passed as 0 in 1D).
    template <class F>
    static Field from_function(const SpaceTimeGrid& g, F&& f) {
        Field out = zeros(g);
        for (int n = 0; n <= g.n_t; ++n) {
            const double t = n * g.dt;
            for (int i = 0; i < g.n_nodes; ++i) {
                out.values(i, n) = f(g.node_x[i], g.node_y[i], t);
            }
        }
        return out;
    }

    Eigen::VectorXd slice(int level) const { return values.col(level); }

    Field& operator+=(const Field& other) {
        values += other.values;
        return *this;
    }
    Field& operator-=(const Field& other) {
        values -= other.values;
        return *this;
    }
    Field& operator*=(double s) {
        values *= s;
        return *this;
    }
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double s, Field a) { return a *= s; }

/// Space-time L2 inner product by grid quadrature.
double inner_product(const Field& u, const Field& v);

inline double norm(const Field& u) { return std::sqrt(inner_product(u, u)); }

/// Spatial L2 inner product of two nodal vectors.
double spatial_inner(const SpaceTimeGrid& g, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b);

inline double spatial_norm(const SpaceTimeGrid& g, const Eigen::VectorXd& a) {
    return std::sqrt(spatial_inner(g, a, a));
}

/// Per-element diffusivity. In 2D the two vectors carry the per-axis
/// (anisotropic) values; in 1D only ax is used.
struct DiffusivityField {
    Eigen::VectorXd ax;
    Eigen::VectorXd ay;

    static DiffusivityField uniform(const SpaceTimeGrid& g, double a) {
        DiffusivityField d;
        d.ax = Eigen::VectorXd::Constant(g.n_elements, a);
        if (g.dim == 2) d.ay = Eigen::VectorXd::Constant(g.n_elements, a);
        return d;
    }

    static DiffusivityField anisotropic(const SpaceTimeGrid& g, double a_x,
                                        double a_y) {
        DiffusivityField d;
        d.ax = Eigen::VectorXd::Constant(g.n_elements, a_x);
        d.ay = Eigen::VectorXd::Constant(g.n_elements, a_y);
        return d;
    }
};

/// Interior-node mass and stiffness matrices plus the factorized
/// implicit-Euler stepping matrix M + dt A, reused across all time steps
/// and across forward/adjoint solves for one diffusivity sample.
struct DiscreteOperators {
    const SpaceTimeGrid* grid = nullptr;
    Eigen::SparseMatrix<double> mass;      // interior x interior
    Eigen::SparseMatrix<double> stiffness; // interior x interior
    Eigen::SparseMatrix<double> stepping;  // mass + dt * stiffness
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> stepping_factor;
};

/// Assembles linear (1D) / bilinear (2D) finite-element operators over the
/// interior nodes. Throws CoercivityError if the diffusivity is nonpositive
/// anywhere.
DiscreteOperators assemble_operators(const SpaceTimeGrid& grid,
                                     const DiffusivityField& a);

} // namespace pdeopt
