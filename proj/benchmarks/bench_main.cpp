#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kef/disteq.hpp"
#include "kef/estimators.hpp"
#include "kef/levy.hpp"
#include "kef/path_sim.hpp"
#include "kef/reference.hpp"
#include "kef/special.hpp"

namespace {

using namespace kef;

void BM_CharExponentClosedForm(benchmark::State& st) {
    const auto t = LevyTriplet::from_drift(0.5, LevyMeasure::two_sided_exp(2.0, 1.0, 0.5) + LevyMeasure::atom(1.0, 1.0), 0.2);
    double z = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(char_exponent(t, z));
        z += 1e-6;
    }
}
BENCHMARK(BM_CharExponentClosedForm);

void BM_CharExponentImageMeasure(benchmark::State& st) {
    const auto u = xi_to_U(LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(1.0, 2.0), 0.0));
    double z = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(char_exponent(u, z));
        z += 1e-6;
    }
}
BENCHMARK(BM_CharExponentImageMeasure);

void BM_TripletRoundTrip(benchmark::State& st) {
    const auto xi = LevyTriplet::from_location(0.3, LevyMeasure::two_sided_exp(2.0, 0.5, 1.0), 0.4);
    for (auto _ : st) benchmark::DoNotOptimize(U_to_xi(xi_to_U(xi)));
}
BENCHMARK(BM_TripletRoundTrip);

void run_batch(benchmark::State& st, const Setup& s, Sampler kind) {
    const auto xi = ProcessSpec::make(s.xi, Role::Xi);
    const auto eta = ProcessSpec::make(s.eta, Role::Eta);
    SimConfig cfg;
    cfg.master_seed = 1;
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(batch(n, kind, xi, eta, s.q, cfg, 1));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}

void BM_BatchTrivialDirect(benchmark::State& st) {
    run_batch(st, reference("trivial_kef").setup, Sampler::Direct);
}
BENCHMARK(BM_BatchTrivialDirect)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_BatchRatioLawDirect(benchmark::State& st) {
    run_batch(st, reference("yor").setup, Sampler::Direct);
}
BENCHMARK(BM_BatchRatioLawDirect)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BatchRatioLawSde(benchmark::State& st) {
    run_batch(st, reference("yor").setup, Sampler::Sde);
}
BENCHMARK(BM_BatchRatioLawSde)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BatchMittagLeffler(benchmark::State& st) {
    run_batch(st, reference("mittag_leffler_law").setup, Sampler::Direct);
}
BENCHMARK(BM_BatchMittagLeffler)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_KolmogorovSmirnov(benchmark::State& st) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(static_cast<std::size_t>(st.range(0)));
    for (double& x : v) x = e(rng);
    const auto s = sorted_copy(v);
    const auto cdf = [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); };
    for (auto _ : st) benchmark::DoNotOptimize(ks(s, cdf));
}
BENCHMARK(BM_KolmogorovSmirnov)->Arg(100000);

void BM_MittagLefflerFunction(benchmark::State& st) {
    double x = -0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(special::mittag_leffler(0.5, x));
        x = x < -20.0 ? -0.1 : x - 0.37;
    }
}
BENCHMARK(BM_MittagLefflerFunction);

void BM_Hypergeometric(benchmark::State& st) {
    double u = 0.1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(special::hyp2f1(1.0, -1.0 / 3.0, 2.0, {0.0, u}));
        u = u > 10.0 ? 0.1 : u + 0.13;
    }
}
BENCHMARK(BM_Hypergeometric);

void BM_ResidualFiniteVariation(benchmark::State& st) {
    const auto r = reference("laplace01");
    const auto grid = linear_grid(-5.0, 5.0, 41, std::array{0.0});
    CheckOptions opt;
    opt.threads = 1;
    for (auto _ : st) benchmark::DoNotOptimize(residual_mu_fv(grid, r.setup.xi, r.setup.eta, 0.0, r.rep(), opt));
}
BENCHMARK(BM_ResidualFiniteVariation)->Unit(benchmark::kMillisecond);

void BM_ResidualCharacteristic(benchmark::State& st) {
    const auto r = reference("cf_bessel");
    const auto grid = linear_grid(0.1, 10.0, 25);
    CheckOptions opt;
    opt.threads = 1;
    for (auto _ : st) benchmark::DoNotOptimize(residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, r.rep(), opt));
}
BENCHMARK(BM_ResidualCharacteristic)->Unit(benchmark::kMillisecond);

void BM_ResidualMeasure(benchmark::State& st) {
    const auto r = reference("laplace01");
    const auto grid = linear_grid(-5.0, 5.0, 21, std::array{0.0});
    CheckOptions opt;
    opt.threads = 1;
    for (auto _ : st) benchmark::DoNotOptimize(residual_mu(grid, r.setup.xi, r.setup.eta, 0.0, r.rep(), opt));
}
BENCHMARK(BM_ResidualMeasure)->Unit(benchmark::kMillisecond);

void BM_GeneratorPairing(benchmark::State& st) {
    const auto r = reference("uniform_over_2exp");
    const PolyBump f{0.1, 1.5, 1.0};
    for (auto _ : st) benchmark::DoNotOptimize(generator_pairing(f, r.setup.xi, r.setup.eta, r.setup.q, r.rep()));
}
BENCHMARK(BM_GeneratorPairing)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
