#include <benchmark/benchmark.h>

#include "pdeopt/config.hpp"
#include "pdeopt/experiment.hpp"
#include "pdeopt/pde.hpp"

namespace {

using namespace pdeopt;

void bm_forward_solve(benchmark::State& state) {
    const auto bp = build_problem(example1_defaults());
    RngStream rng(1, 0);
    const Sample sample = draw_sample(bp.problem, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_state(bp.problem, bp.u0, sample));
}
BENCHMARK(bm_forward_solve);

void bm_sample_gradient(benchmark::State& state) {
    const auto bp = build_problem(example1_defaults());
    RngStream rng(1, 0);
    const Sample sample = draw_sample(bp.problem, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_gradient(bp.problem, bp.u0, sample));
}
BENCHMARK(bm_sample_gradient);

void bm_sample_draw(benchmark::State& state) {
    // dominated by assembly + factorization of the sampled operators
    const auto bp = build_problem(example1_defaults());
    RngStream rng(1, 0);
    for (auto _ : state)
        benchmark::DoNotOptimize(draw_sample(bp.problem, rng));
}
BENCHMARK(bm_sample_draw);

void bm_kl_decompose(benchmark::State& state) {
    const ExperimentConfig c = example1_defaults();
    const SpaceTimeGrid g =
        build_grid(c.grid.x_extent, c.grid.cells_x, c.grid.T, c.grid.n_t);
    for (auto _ : state)
        benchmark::DoNotOptimize(kl_decompose(c.kl.sigma2, c.kl.corr_length, g,
                                              c.kl.modes, c.kl.a_min));
}
BENCHMARK(bm_kl_decompose);

void bm_forward_solve_2d(benchmark::State& state) {
    const auto bp = build_problem(example2_defaults());
    RngStream rng(1, 0);
    const Sample sample = draw_sample(bp.problem, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_state(bp.problem, bp.u0, sample));
}
BENCHMARK(bm_forward_solve_2d);

} // namespace

BENCHMARK_MAIN();
