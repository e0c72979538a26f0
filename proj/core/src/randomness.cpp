#include "pdeopt/randomness.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace pdeopt {

std::vector<RngStream> make_rng_streams(std::uint64_t master_seed, int count) {
    if (count < 1)
        throw InvalidConfigError("make_rng_streams: count must be at least 1");
    std::vector<RngStream> streams;
    streams.reserve(count);
    for (int j = 0; j < count; ++j)
        streams.emplace_back(master_seed, static_cast<std::uint64_t>(j));
    return streams;
}

double gaussian_kernel(double sigma2, double corr_length, double x1, double y1,
                       double x2, double y2) {
    const double d2 = (x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2);
    return sigma2 * std::exp(-d2 / (2.0 * corr_length * corr_length));
}

KlBasis kl_decompose(double sigma2, double corr_length,
                     const SpaceTimeGrid& grid, int modes, double a_min) {
    if (sigma2 < 0.0)
        throw InvalidConfigError("kl_decompose: variance must be nonnegative");
    if (corr_length <= 0.0)
        throw InvalidConfigError("kl_decompose: correlation length must be positive");
    if (modes < 1 || modes > grid.n_nodes) {
        std::ostringstream os;
        os << "kl_decompose: mode count " << modes << " outside [1, "
           << grid.n_nodes << "]";
        throw InvalidConfigError(os.str());
    }

    const int n = grid.n_nodes;
    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double k = gaussian_kernel(sigma2, corr_length, grid.node_x[i],
                                             grid.node_y[i], grid.node_x[j],
                                             grid.node_y[j]);
            kernel(i, j) = k;
            kernel(j, i) = k;
        }

    // symmetric Galerkin eigenproblem of W^(1/2) K W^(1/2)
    const Eigen::VectorXd sqrt_w = grid.quad_weights.cwiseSqrt();
    Eigen::MatrixXd sym = sqrt_w.asDiagonal() * kernel * sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw SolverError("kl_decompose: eigendecomposition failed", std::nan(""));

    KlBasis basis;
    basis.grid = &grid;
    basis.sigma2 = sigma2;
    basis.corr_length = corr_length;
    basis.a_min = a_min;
    basis.modes = modes;
    basis.eigenvalues.resize(modes);
    basis.eigenvectors.resize(n, modes);
    const Eigen::VectorXd inv_sqrt_w = sqrt_w.cwiseInverse();
    for (int k = 0; k < modes; ++k) {
        const int src = n - 1 - k; // Eigen sorts ascending
        basis.eigenvalues[k] = std::max(eig.eigenvalues()[src], 0.0);
        basis.eigenvectors.col(k) =
            inv_sqrt_w.cwiseProduct(eig.eigenvectors().col(src));
    }
    return basis;
}

DiffusivitySample sample_lognormal_field(const KlBasis& basis, RngStream& rng) {
    const SpaceTimeGrid& grid = *basis.grid;
    DiffusivitySample s;
    s.a_min = basis.a_min;
    s.stream_id = rng.id();
    s.xi.resize(basis.modes);
    for (int k = 0; k < basis.modes; ++k) s.xi[k] = rng.normal();

    const Eigen::VectorXd amp = basis.eigenvalues.cwiseSqrt().cwiseProduct(s.xi);
    s.log_nodal = basis.eigenvectors * amp;
    s.nodal = s.log_nodal.array().exp() + basis.a_min;

    // element midpoint values by linear interpolation of the Gaussian field
    s.element_ax.resize(grid.n_elements);
    if (grid.dim == 1) {
        for (int e = 0; e < grid.n_elements; ++e)
            s.element_ax[e] = basis.a_min +
                std::exp(0.5 * (s.log_nodal[e] + s.log_nodal[e + 1]));
    } else {
        for (int ecy = 0; ecy < grid.cells_y; ++ecy)
            for (int ecx = 0; ecx < grid.cells_x; ++ecx) {
                const int e = ecx + ecy * grid.cells_x;
                const double mid =
                    0.25 * (s.log_nodal[grid.node_index(ecx, ecy)] +
                            s.log_nodal[grid.node_index(ecx + 1, ecy)] +
                            s.log_nodal[grid.node_index(ecx, ecy + 1)] +
                            s.log_nodal[grid.node_index(ecx + 1, ecy + 1)]);
                s.element_ax[e] = basis.a_min + std::exp(mid);
            }
    }
    return s;
}

std::pair<PulseRealization, Field> sample_pulse_load(const PulseConfig& config,
                                                     RngStream& rng,
                                                     const SpaceTimeGrid& grid) {
    auto check_range = [](const std::array<double, 2>& r, const char* name) {
        if (r[1] < r[0]) {
            std::ostringstream os;
            os << "sample_pulse_load: empty range for " << name;
            throw InvalidConfigError(os.str());
        }
    };
    check_range(config.onset1, "onset1");
    check_range(config.onset2, "onset2");
    check_range(config.duration, "duration");
    check_range(config.intensity, "intensity");

    PulseRealization r;
    r.stream_id = rng.id();
    r.onset1 = rng.uniform(config.onset1[0], config.onset1[1]);
    r.onset2 = rng.uniform(config.onset2[0], config.onset2[1]);
    r.duration1 = rng.uniform(config.duration[0], config.duration[1]);
    r.duration2 = rng.uniform(config.duration[0], config.duration[1]);
    r.intensity1 = rng.uniform(config.intensity[0], config.intensity[1]);
    r.intensity2 = rng.uniform(config.intensity[0], config.intensity[1]);

    Field g = Field::zeros(grid);
    auto snap = [&](double t) {
        int n = static_cast<int>(std::lround(t / grid.dt));
        return std::clamp(n, 0, grid.n_t);
    };
    auto add_pulse = [&](double onset, double duration, double intensity) {
        const int n_on = snap(onset);
        const int n_off = snap(onset + duration);
        const double value = intensity * config.intensity_scale;
        for (int n = n_on; n < n_off; ++n)
            g.values.col(n).array() += value;
    };
    add_pulse(r.onset1, r.duration1, r.intensity1);
    add_pulse(r.onset2, r.duration2, r.intensity2);
    return {r, std::move(g)};
}

} // namespace pdeopt
