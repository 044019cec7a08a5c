#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "esma/es.hpp"
#include "esma/reward.hpp"
#include "esma/sdt.hpp"
#include "esma/surrogate.hpp"

using namespace esma;

namespace {

std::vector<EvalRecord> confident_records(std::size_t n) {
  std::mt19937_64 g(7);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<EvalRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].item_id = std::to_string(i);
    out[i].correct = coin(g);
    out[i].meta = MetaAnswer::yes;
    out[i].confidence = sdt::confidence(z(g) + (out[i].correct ? 0.5 : 0.0), 0.0);
  }
  return out;
}

void BM_RocAuc(benchmark::State& state) {
  const auto records = confident_records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sdt::auc(sdt::roc_curve(records)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocAuc)->Arg(100)->Arg(1000)->Arg(10000);

void BM_InverseNormalCdf(benchmark::State& state) {
  double p = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sdt::inverse_normal_cdf(p));
    p += 0.0137;
    if (p >= 1.0) p -= 1.0 - 1e-6;
  }
}
BENCHMARK(BM_InverseNormalCdf);

void BM_EsStep(benchmark::State& state) {
  auto cfg = es::EsConfig::surrogate_defaults();
  cfg.population = static_cast<std::size_t>(state.range(1));
  const std::vector<double> theta(static_cast<std::size_t>(state.range(0)), 0.0);
  const auto noise = es::sample_population(theta, cfg, 0);
  std::vector<double> f(cfg.population);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i % 3);
  const auto stats = es::z_standardize(f);
  for (auto _ : state) benchmark::DoNotOptimize(es::es_step(theta, noise, stats, cfg));
}
BENCHMARK(BM_EsStep)->Args({192, 32})->Args({3072, 32});

void BM_SurrogateFitness(benchmark::State& state) {
  surrogate::SurrogateConfig cfg;
  auto world = std::make_shared<const surrogate::SurrogateWorld>(surrogate::SurrogateWorld::make(cfg, 1));
  const surrogate::SurrogateModel model(world);
  const auto data = surrogate::make_dataset(*world);
  const auto theta = surrogate::init_params(cfg, 2);
  std::vector<const QaItem*> batch;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)) && i < data.size(); ++i) {
    batch.push_back(&data.items[i]);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fitness(model, theta, batch, RewardVariant::joint));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_SurrogateFitness)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
