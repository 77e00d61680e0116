// Serial reference versus OpenMP kernels on identical inputs. Arg 0 is the
// serial path, arg 1 the parallel one; outputs are identical by construction.

#include <benchmark/benchmark.h>

#include "bratteli/census.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/parallel.hpp"
#include "bratteli/vershik.hpp"
#include "bratteli/wrightfisher.hpp"

using namespace bratteli;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::serial : Execution::parallel; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(worker_count()));
}

void BM_WrightFisher(benchmark::State& state) {
  const auto sizes = SizeRule::parse("const:50").sizes(40);
  std::vector<std::uint32_t> labels(50, 0);
  for (std::size_t v = 0; v < 25; ++v) labels[v] = 1;
  for (auto _ : state) {
    auto runs = simulate_trials(sizes, 1, labels, 1, 2000, 7, 40, mode(state));
    benchmark::DoNotOptimize(runs.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
  label(state);
}
BENCHMARK(BM_WrightFisher)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TribeCensus(benchmark::State& state) {
  const auto d = make_diagram(SizeRule::parse("poly:(n+2)^2"), 40, Generator::all_ones());
  const std::size_t depths[] = {10, 20, 40};
  for (auto _ : state) {
    auto est = estimate_j(d, 1, depths, 500, 11, mode(state));
    benchmark::DoNotOptimize(est.histogram.data());
  }
  state.SetItemsProcessed(state.iterations() * 500);
  label(state);
}
BENCHMARK(BM_TribeCensus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ImperfectionProbe(benchmark::State& state) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 5, 9, 9, 9, 9}, Generator::all_ones());
  EstimateOptions options;
  options.execution = mode(state);
  for (auto _ : state) {
    auto est = estimate_E_probability(d, 1, 2, 5, 2000, 13, options);
    benchmark::DoNotOptimize(est.in_E);
  }
  state.SetItemsProcessed(state.iterations() * 2000);
  label(state);
}
BENCHMARK(BM_ImperfectionProbe)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EquitabilityFailureRate(benchmark::State& state) {
  const auto d = make_diagram(std::vector<std::uint64_t>{1, 3000, 10}, Generator::parse("cyclic(2)"));
  for (auto _ : state) {
    auto rate = equitability_failure_rate(d, 1, Rational(55, 1000), 1000, 17, mode(state));
    benchmark::DoNotOptimize(rate.failures);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
  label(state);
}
BENCHMARK(BM_EquitabilityFailureRate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
