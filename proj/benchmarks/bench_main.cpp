#include <benchmark/benchmark.h>

#include <hom/analysis.hpp>
#include <hom/analytic.hpp>
#include <hom/config.hpp>
#include <hom/fit.hpp>

namespace {

hom::RunConfig reference() {
    hom::RunConfig rc;
    rc.emitter.dephasing_rate = hom::dephasing_rate_for_coherence_time(rc.emitter.t1_radiative, 60.0);
    rc.jitter.sigma = 31.0;
    rc.detector.timing_sigma = 50.0;
    rc.interferometer.delay = rc.waveform.period();
    return rc;
}

void BM_PairVisibility(benchmark::State& state) {
    const auto rc = reference();
    const auto gate = rc.gate();
    const auto packet = hom::make_gated_packet(rc.emitter, gate);
    hom::PairConfig pair{packet, packet, static_cast<double>(state.range(0)),
                         rc.emitter.dephasing_rate};
    for (auto _ : state) benchmark::DoNotOptimize(hom::pair_visibility(pair));
}
BENCHMARK(BM_PairVisibility)->Arg(0)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_DipCentralArea(benchmark::State& state) {
    auto setup = reference().dip_setup();
    setup.chirp_on = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(hom::dip_central_area(50.0, setup));
}
BENCHMARK(BM_DipCentralArea)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DipCurve(benchmark::State& state) {
    const auto rc = reference();
    const auto setup = rc.dip_setup();
    const auto grid = hom::delta_grid(-400.0, 400.0, 25.0);
    for (auto _ : state) benchmark::DoNotOptimize(hom::dip_curve(grid, setup));
}
BENCHMARK(BM_DipCurve)->Unit(benchmark::kMillisecond);

void BM_SimulateHom(benchmark::State& state) {
    const auto rc = reference();
    const auto source = rc.source();
    const auto cycles = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(hom::simulate_hom(source, rc.interferometer, rc.detector, cycles, 7));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateHom)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_PeakAreas(benchmark::State& state) {
    const auto rc = reference();
    const auto h = hom::simulate_hbt(rc.source(), rc.detector, 20000, 3);
    const double period = rc.waveform.period();
    for (auto _ : state) benchmark::DoNotOptimize(hom::peak_areas(h, period, hom::default_window(period)));
}
BENCHMARK(BM_PeakAreas)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
