#include "pdeopt/grid.hpp"

#include <cmath>
#include <sstream>

namespace pdeopt {

namespace {

void check_axis(double lo, double hi, int n_cells, const char* name) {
    if (!(hi > lo)) {
        std::ostringstream os;
        os << "grid: " << name << " extent must be increasing, got [" << lo
           << ", " << hi << "]";
        throw InvalidConfigError(os.str());
    }
    if (n_cells < 2) {
        std::ostringstream os;
        os << "grid: " << name << " needs at least 2 cells, got " << n_cells;
        throw InvalidConfigError(os.str());
    }
}

void check_time(double T, int n_t) {
    if (!(T > 0.0)) throw InvalidConfigError("grid: final time must be positive");
    if (n_t < 1) throw InvalidConfigError("grid: need at least 1 time sub-interval");
}

void finish_time(SpaceTimeGrid& g) {
    g.dt = g.T / g.n_t;
    g.time_weights = Eigen::VectorXd::Constant(g.n_t + 1, g.dt);
    g.time_weights[g.n_t] = 0.0; // left rectangle rule; sums to T
}

Eigen::VectorXd axis_weights(double h, int n_cells) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n_cells + 1, h);
    w[0] = 0.5 * h;
    w[n_cells] = 0.5 * h;
    return w;
}

} // namespace

SpaceTimeGrid build_grid(const std::array<double, 2>& x_extent, int n_cells,
                         double T, int n_t) {
    check_axis(x_extent[0], x_extent[1], n_cells, "x");
    check_time(T, n_t);

    SpaceTimeGrid g;
    g.dim = 1;
    g.x_extent = x_extent;
    g.cells_x = n_cells;
    g.T = T;
    g.n_t = n_t;
    g.dx = (x_extent[1] - x_extent[0]) / n_cells;
    g.n_nodes = n_cells + 1;
    g.n_elements = n_cells;
    g.domain_measure = x_extent[1] - x_extent[0];
    finish_time(g);

    g.node_x.resize(g.n_nodes);
    g.node_y = Eigen::VectorXd::Zero(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i) g.node_x[i] = x_extent[0] + i * g.dx;

    g.quad_weights = axis_weights(g.dx, n_cells);

    g.interior_index.assign(g.n_nodes, -1);
    g.boundary_nodes = {0, n_cells};
    for (int i = 1; i < n_cells; ++i) {
        g.interior_index[i] = static_cast<int>(g.interior_nodes.size());
        g.interior_nodes.push_back(i);
    }
    return g;
}

SpaceTimeGrid build_grid(const std::array<double, 2>& x_extent,
                         const std::array<double, 2>& y_extent, int cells_x,
                         int cells_y, double T, int n_t) {
    check_axis(x_extent[0], x_extent[1], cells_x, "x");
    check_axis(y_extent[0], y_extent[1], cells_y, "y");
    check_time(T, n_t);

    SpaceTimeGrid g;
    g.dim = 2;
    g.x_extent = x_extent;
    g.y_extent = y_extent;
    g.cells_x = cells_x;
    g.cells_y = cells_y;
    g.T = T;
    g.n_t = n_t;
    g.dx = (x_extent[1] - x_extent[0]) / cells_x;
    g.dy = (y_extent[1] - y_extent[0]) / cells_y;
    g.n_nodes = (cells_x + 1) * (cells_y + 1);
    g.n_elements = cells_x * cells_y;
    g.domain_measure =
        (x_extent[1] - x_extent[0]) * (y_extent[1] - y_extent[0]);
    finish_time(g);

    g.node_x.resize(g.n_nodes);
    g.node_y.resize(g.n_nodes);
    const Eigen::VectorXd wx = axis_weights(g.dx, cells_x);
    const Eigen::VectorXd wy = axis_weights(g.dy, cells_y);
    g.quad_weights.resize(g.n_nodes);
    g.interior_index.assign(g.n_nodes, -1);
    for (int iy = 0; iy <= cells_y; ++iy) {
        for (int ix = 0; ix <= cells_x; ++ix) {
            const int i = g.node_index(ix, iy);
            g.node_x[i] = x_extent[0] + ix * g.dx;
            g.node_y[i] = y_extent[0] + iy * g.dy;
            g.quad_weights[i] = wx[ix] * wy[iy];
            const bool boundary =
                ix == 0 || ix == cells_x || iy == 0 || iy == cells_y;
            if (boundary) {
                g.boundary_nodes.push_back(i);
            } else {
                g.interior_index[i] = static_cast<int>(g.interior_nodes.size());
                g.interior_nodes.push_back(i);
            }
        }
    }
    return g;
}

double inner_product(const Field& u, const Field& v) {
    if (u.grid == nullptr || v.grid == nullptr)
        throw ShapeError("inner_product: field without a grid");
    if (!u.grid->same_layout(*v.grid))
        throw ShapeError("inner_product: fields on different grids");
    const SpaceTimeGrid& g = *u.grid;
    // per-level spatial quadrature, then temporal quadrature
    const Eigen::VectorXd per_level =
        (u.values.cwiseProduct(v.values)).transpose() * g.quad_weights;
    return per_level.dot(g.time_weights);
}

double spatial_inner(const SpaceTimeGrid& g, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
    if (a.size() != g.n_nodes || b.size() != g.n_nodes)
        throw ShapeError("spatial_inner: vector size does not match node count");
    return a.cwiseProduct(b).dot(g.quad_weights);
}

namespace {

// 1D linear-element matrices on an interval of length h.
struct Element1D {
    double k[2][2];
    double m[2][2];
    explicit Element1D(double h) {
        k[0][0] = 1.0 / h; k[0][1] = -1.0 / h;
        k[1][0] = -1.0 / h; k[1][1] = 1.0 / h;
        m[0][0] = h / 3.0; m[0][1] = h / 6.0;
        m[1][0] = h / 6.0; m[1][1] = h / 3.0;
    }
};

using Triplet = Eigen::Triplet<double>;

void add_entry(std::vector<Triplet>& trip, const SpaceTimeGrid& g, int gi,
               int gj, double value) {
    const int ii = g.interior_index[gi];
    const int jj = g.interior_index[gj];
    if (ii >= 0 && jj >= 0) trip.emplace_back(ii, jj, value);
}

} // namespace

DiscreteOperators assemble_operators(const SpaceTimeGrid& grid,
                                     const DiffusivityField& a) {
    if (a.ax.size() != grid.n_elements)
        throw ShapeError("assemble_operators: diffusivity not per-element");
    if (grid.dim == 2 && a.ay.size() != grid.n_elements)
        throw ShapeError("assemble_operators: 2D diffusivity needs both axes");
    if (a.ax.minCoeff() <= 0.0 ||
        (grid.dim == 2 && a.ay.minCoeff() <= 0.0))
        throw CoercivityError(
            "assemble_operators: diffusivity must be strictly positive");

    const int n = grid.n_interior();
    std::vector<Triplet> tm, tk;
    tm.reserve(grid.n_elements * (grid.dim == 1 ? 4 : 16));
    tk.reserve(tm.capacity());

    if (grid.dim == 1) {
        const Element1D ex(grid.dx);
        for (int e = 0; e < grid.n_elements; ++e) {
            const int nodes[2] = {e, e + 1};
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    add_entry(tm, grid, nodes[i], nodes[j], ex.m[i][j]);
                    add_entry(tk, grid, nodes[i], nodes[j],
                              a.ax[e] * ex.k[i][j]);
                }
            }
        }
    } else {
        const Element1D ex(grid.dx);
        const Element1D ey(grid.dy);
        for (int ecy = 0; ecy < grid.cells_y; ++ecy) {
            for (int ecx = 0; ecx < grid.cells_x; ++ecx) {
                const int e = ecx + ecy * grid.cells_x;
                int nodes[4];
                for (int iy = 0; iy < 2; ++iy)
                    for (int ix = 0; ix < 2; ++ix)
                        nodes[ix + 2 * iy] = grid.node_index(ecx + ix, ecy + iy);
                for (int iy = 0; iy < 2; ++iy)
                    for (int ix = 0; ix < 2; ++ix)
                        for (int jy = 0; jy < 2; ++jy)
                            for (int jx = 0; jx < 2; ++jx) {
                                const int li = ix + 2 * iy;
                                const int lj = jx + 2 * jy;
                                const double m2 = ex.m[ix][jx] * ey.m[iy][jy];
                                const double k2 =
                                    a.ax[e] * ex.k[ix][jx] * ey.m[iy][jy] +
                                    a.ay[e] * ex.m[ix][jx] * ey.k[iy][jy];
                                add_entry(tm, grid, nodes[li], nodes[lj], m2);
                                add_entry(tk, grid, nodes[li], nodes[lj], k2);
                            }
            }
        }
    }

    DiscreteOperators ops;
    ops.grid = &grid;
    ops.mass.resize(n, n);
    ops.stiffness.resize(n, n);
    ops.mass.setFromTriplets(tm.begin(), tm.end());
    ops.stiffness.setFromTriplets(tk.begin(), tk.end());
    ops.stepping = ops.mass + grid.dt * ops.stiffness;
    ops.stepping_factor =
        std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    ops.stepping_factor->compute(ops.stepping);
    if (ops.stepping_factor->info() != Eigen::Success)
        throw SolverError("assemble_operators: stepping matrix factorization failed",
                          std::nan(""));
    return ops;
}

} // namespace pdeopt
