#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pdeopt/grid.hpp"

namespace pdeopt {

/// Reproducible RNG sub-stream: a pure function of (master_seed, id).
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t id)
        : id_(id) {
        std::seed_seq seq{master_seed, id};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::uint64_t id() const { return id_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t id_;
};

std::vector<RngStream> make_rng_streams(std::uint64_t master_seed, int count);

/// Truncated Karhunen-Loeve basis of the squared-exponential covariance
/// kernel, discretized by Galerkin projection on the grid nodes with the
/// spatial quadrature weights.
struct KlBasis {
    const SpaceTimeGrid* grid = nullptr;
    double sigma2 = 0.0;
    double corr_length = 0.0;
    double a_min = 0.0;
    int modes = 0;
    Eigen::VectorXd eigenvalues; // nonincreasing, clipped at 0
    Eigen::MatrixXd eigenvectors; // n_nodes x modes, orthonormal in the
                                  // discrete spatial L2 inner product
};

KlBasis kl_decompose(double sigma2, double corr_length,
                     const SpaceTimeGrid& grid, int modes, double a_min);

/// Squared-exponential kernel value for two points.
double gaussian_kernel(double sigma2, double corr_length, double x1, double y1,
                       double x2, double y2);

/// One draw of the lognormal diffusivity a = a_min + exp(a_tilde).
struct DiffusivitySample {
    Eigen::VectorXd xi;          // KL coefficients of this draw
    Eigen::VectorXd log_nodal;   // a_tilde at nodes
    Eigen::VectorXd nodal;       // a at nodes
    Eigen::VectorXd element_ax;  // a at element midpoints (assembly values)
    double a_min = 0.0;
    std::uint64_t stream_id = 0;
};

DiffusivitySample sample_lognormal_field(const KlBasis& basis, RngStream& rng);

/// Uniform ranges for the two-pulse random heat load. Intensities are
/// multiplied by intensity_scale when the load field is built (used to
/// express the load in the rho*c_p-scaled equation).
struct PulseConfig {
    std::array<double, 2> onset1{2400.0, 3600.0};   // seconds
    std::array<double, 2> onset2{12000.0, 13200.0}; // seconds
    std::array<double, 2> duration{1800.0, 3600.0}; // seconds, both pulses
    std::array<double, 2> intensity{200.0, 400.0};  // W m^-3, both pulses
    double intensity_scale = 1.0;
};

struct PulseRealization {
    double onset1 = 0.0, onset2 = 0.0;
    double duration1 = 0.0, duration2 = 0.0;
    double intensity1 = 0.0, intensity2 = 0.0;
    std::uint64_t stream_id = 0;
};

/// Draws pulse parameters and builds the space-time load, uniform over D,
/// with pulse edges snapped to the nearest time grid point.
std::pair<PulseRealization, Field> sample_pulse_load(const PulseConfig& config,
                                                     RngStream& rng,
                                                     const SpaceTimeGrid& grid);

} // namespace pdeopt
