#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "urbanmas/evaluation.hpp"
#include "urbanmas/llm/mock_backend.hpp"
#include "urbanmas/pipeline.hpp"
#include "urbanmas/reliability.hpp"

namespace {

std::vector<std::string> sentences(std::size_t n, std::size_t words) {
  static const char* vocab[] = {"quiet", "street", "with", "dense", "trees", "and", "a",
                                "busy",  "cafe",   "near", "the",   "park",  "entrance", "Lamps!"};
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> pick(0, 13);
  std::vector<std::string> out(n);
  for (auto& s : out)
    for (std::size_t w = 0; w < words; ++w) s += std::string(w ? " " : "") + vocab[pick(rng)];
  return out;
}

void BM_SoftSim(benchmark::State& state) {
  const auto texts = sentences(64, static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(urbanmas::soft_sim(texts[i % 64], texts[(i + 7) % 64]));
    ++i;
  }
}
BENCHMARK(BM_SoftSim)->Arg(4)->Arg(16)->Arg(64);

void BM_SeqRatioAscii(benchmark::State& state) {
  const auto texts = sentences(64, static_cast<std::size_t>(state.range(0)));
  std::vector<std::string> norm;
  for (const auto& t : texts) norm.push_back(urbanmas::normalize(t));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(urbanmas::seq_ratio(norm[i % 64], norm[(i + 3) % 64]));
    ++i;
  }
}
BENCHMARK(BM_SeqRatioAscii)->Arg(8)->Arg(64);

void BM_Metrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  std::vector<double> p(n), t(n);
  for (auto& x : p) x = d(rng);
  for (auto& x : t) x = d(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        urbanmas::metrics(std::span<const double>(p), std::span<const double>(t)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(100000);

void BM_FullPipelineMock(benchmark::State& state) {
  using namespace urbanmas;
  const TaskSpec task{"running_amount", "Running activity.", "running_amount"};
  const LocationSample sample{"loc", 35.0, 139.0, "Tokyo", std::string("1 Main St"),
                              {{"Park", "leisure=park", 40}}, {}, {}};
  PipelineConfig cfg;
  cfg.extraction.concurrent = false;
  const Pipeline pipeline(llm::MockBackend::synthetic(), cfg);
  const auto factors = generic_factor_map(task.id);
  for (auto _ : state)
    benchmark::DoNotOptimize(pipeline.predict(sample, task, Variant::Full, &factors));
}
BENCHMARK(BM_FullPipelineMock);

}  // namespace
BENCHMARK_MAIN();
