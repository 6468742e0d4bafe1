#include <benchmark/benchmark.h>

#include "qkdfs/authsim.hpp"
#include "qkdfs/parallel.hpp"
#include "qkdfs/simulate.hpp"

using namespace qkdfs;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Execution::serial : Execution::openmp; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "openmp"); }

void BM_ExpectedRateVariable(benchmark::State& state) {
  ChannelModel ch;
  ch.misalignment_deg = 1.0;
  ProtocolParams p;
  p.source = SourceKind::qubit;
  p.n = 1e8;
  p.budget = EpsilonBudget::default_qubit();
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_key_rate(RateMode::variable(), ch, p, 64, 1, exec_of(state)).mean);
  }
  label(state);
}
BENCHMARK(BM_ExpectedRateVariable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AuthCampaign(benchmark::State& state) {
  CampaignConfig cfg;
  cfg.runs = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign(cfg, 1, exec_of(state)).runs);
  label(state);
}
BENCHMARK(BM_AuthCampaign)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DecoyLossSweep(benchmark::State& state) {
  ProtocolParams p;
  for (auto _ : state) {
    const auto rates = parallel_map(
        81,
        [&](std::size_t i) {
          ChannelModel ch;
          ch.loss_db = 0.5 * static_cast<double>(i);
          ch.misalignment_deg = 2.0;
          ch.detector.delta_eta = ch.detector.delta_dc = 0.1;
          ch.detector.swap = true;
          return honest_key_length(ch, p).key_length;
        },
        exec_of(state));
    benchmark::DoNotOptimize(rates.data());
  }
  label(state);
}
BENCHMARK(BM_DecoyLossSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
