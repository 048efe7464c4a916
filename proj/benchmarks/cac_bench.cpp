#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <cac/banks.hpp>
#include <cac/config.hpp>
#include <cac/data.hpp>
#include <cac/harness.hpp>
#include <cac/losses.hpp>
#include <cac/matrix.hpp>
#include <cac/network.hpp>

namespace {

using cac::Matrix;

Matrix random_inputs(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  Matrix x(rows, cols);
  for (auto& v : x.data()) v = normal(gen);
  return x;
}

struct Fixture {
  cac::ModelParams model = cac::init_model({2, 32, 16, 3}, 0);
  Matrix x;
  cac::Banks banks;
  std::vector<std::size_t> batch;

  Fixture(std::size_t n, std::size_t s, std::size_t k)
      : x(random_inputs(n, 2, 1)), banks(cac::init_banks(model, x, k, 1.0, 0)) {
    batch.resize(s);
    std::iota(batch.begin(), batch.end(), std::size_t{0});
  }
};

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Fixture f(n, 32, 3);
  const Matrix query = cac::gather_rows(f.banks.features(), f.batch);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cac::topk_neighbors(f.banks, query, 3, f.batch));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TopK)->RangeMultiplier(4)->Range(256, 16384);

void BM_CacLoss(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Fixture f(4096, s, 3);
  const Matrix xb = cac::gather_rows(f.x, f.batch);
  const Matrix probs = cac::model_forward(f.model, xb).probs;
  const auto mask = cac::build_similarity_mask(f.batch, f.banks);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cac::cac_loss(probs, f.batch, f.banks, mask, 0.5, cac::LossMode::full));
  }
}
BENCHMARK(BM_CacLoss)->RangeMultiplier(2)->Range(16, 256);

void BM_SimilarityMask(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Fixture f(4096, s, 5);
  for (auto _ : state) benchmark::DoNotOptimize(cac::build_similarity_mask(f.batch, f.banks));
}
BENCHMARK(BM_SimilarityMask)->RangeMultiplier(2)->Range(16, 256);

void BM_AdaptEpoch(benchmark::State& state) {
  cac::TrainConfig config;
  config.adapt_epochs = 1;
  config.shift.n_target = static_cast<std::size_t>(state.range(0));
  const auto [source, target] = cac::generate_two_domain_blobs(config.shift);
  const auto model = cac::pretrain_source(config, source);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cac::adapt_target(model, target.x, config, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(target.size()));
}
BENCHMARK(BM_AdaptEpoch)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
