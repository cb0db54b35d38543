#include <benchmark/benchmark.h>

#include <filesystem>

#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/detector/nms.hpp"
#include "bafrcnn/eval/metrics.hpp"
#include "bafrcnn/harness/train.hpp"
#include "bafrcnn/synthgen/dataset.hpp"
#include "bafrcnn/synthgen/scene.hpp"
#include "bafrcnn/tensor/ops.hpp"

namespace {

using namespace bafrcnn;
using Tensor = tensor::Tensor<float>;

Tensor random_tensor(tensor::Shape shape, Rng& rng, bool grad) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal(0.0, 0.5));
  return Tensor(std::move(shape), std::move(v), grad);
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor x = random_tensor({1, channels, 32, 32}, rng, true);
  const Tensor w = random_tensor({channels, channels, 3, 3}, rng, true);
  const Tensor b = random_tensor({channels}, rng, true);
  for (auto _ : state) {
    tensor::Tape<float> tape;
    const Tensor y = tensor::conv2d(tape, x, w, b, {1, 1});
    Tensor loss = tensor::sum(tape, y);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(8)->Arg(16)->Arg(32);

void BM_Nms(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<detector::ScoredBox> boxes(n);
  for (auto& b : boxes) {
    const double x = rng.uniform(0, 56), y = rng.uniform(0, 56);
    b = {{x, y, x + rng.uniform(4, 20), y + rng.uniform(4, 20)}, rng.uniform(0, 1)};
  }
  for (auto _ : state) benchmark::DoNotOptimize(detector::nms(boxes, 0.5));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_EvaluateAp(benchmark::State& state) {
  const auto images = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<std::vector<detector::Detection>> dets(images);
  std::vector<std::vector<detector::Annotation>> gt(images);
  for (std::size_t i = 0; i < images; ++i) {
    for (int k = 0; k < 2; ++k) {
      const double x = rng.uniform(0, 40), y = rng.uniform(0, 40);
      gt[i].push_back({1 + static_cast<int>(rng.index(4)), {x, y, x + 16, y + 16}});
    }
    for (int k = 0; k < 20; ++k) {
      const double x = rng.uniform(0, 40), y = rng.uniform(0, 40);
      dets[i].push_back({1 + static_cast<int>(rng.index(4)), static_cast<float>(rng.uniform(0, 1)),
                         {x, y, x + 16, y + 16}});
    }
    std::sort(dets[i].begin(), dets[i].end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate_ap(dets, gt).map);
}
BENCHMARK(BM_EvaluateAp)->Arg(100)->Arg(400);

void BM_GenerateScene(benchmark::State& state) {
  const synthgen::SynthConfig c;
  std::uint64_t seed = 0;
  const Domain d = state.range(0) == 0 ? Domain::kHC : Domain::kSOC;
  for (auto _ : state) benchmark::DoNotOptimize(synthgen::generate_scene(c, d, seed++).image.pixels.data());
}
BENCHMARK(BM_GenerateScene)->Arg(0)->Arg(1);

const harness::TrainingData& bench_data() {
  static const harness::TrainingData data = [] {
    const auto dir = std::filesystem::temp_directory_path() / "bafrcnn_bench_data";
    std::filesystem::remove_all(dir);
    synthgen::DatasetCounts n{32, 32, 8, 8, 8};
    synthgen::generate_dataset(synthgen::SynthConfig{}, n, 5, dir);
    return harness::TrainingData::load(harness::DatasetPaths::in_directory(dir), 64);
  }();
  return data;
}

void BM_TrainingStep(benchmark::State& state) {
  const auto mode = harness::kAllModes[state.range(0)];
  harness::ExperimentConfig config;
  const harness::RunSpec spec{"bench", mode, 0, config.lambda_da};
  harness::TrainingState ts(config, spec);
  const auto& data = bench_data();
  for (auto _ : state) benchmark::DoNotOptimize(harness::training_step(config, spec, data, ts, true).total);
  state.SetLabel(std::string(harness::to_string(mode)));
}
BENCHMARK(BM_TrainingStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
  const harness::ExperimentConfig config;
  const harness::TrainingState ts(config, harness::RunSpec{});
  const auto& img = bench_data().hc_test.images.front();
  for (auto _ : state) benchmark::DoNotOptimize(ts.detector.detect(detector::image_tensor(img, 64, 64)).size());
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
