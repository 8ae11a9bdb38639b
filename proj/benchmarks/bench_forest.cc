//
// Copyright 2026 The reqaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "reqaug/detect.h"

namespace {

// Two shifted Gaussian blobs with desk feature width (hidden 128 + 4).
void make_data(std::size_t n, reqaug::Matrix& x, std::vector<reqaug::Label>& y) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  x.resize(static_cast<Eigen::Index>(n), 132);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 4 == 0 ? reqaug::Label::kAbnormal : reqaug::Label::kNormal;
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      x(static_cast<Eigen::Index>(i), d) = g(rng) + (y[i] == reqaug::Label::kAbnormal && d < 8 ? 1.0 : 0.0);
    }
  }
}

void BM_TrainForest(benchmark::State& state) {
  reqaug::Matrix x;
  std::vector<reqaug::Label> y;
  make_data(static_cast<std::size_t>(state.range(0)), x, y);
  reqaug::ForestConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(reqaug::train_forest(x, y, c));
}
BENCHMARK(BM_TrainForest)->Arg(280)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ForestProbability(benchmark::State& state) {
  reqaug::Matrix x;
  std::vector<reqaug::Label> y;
  make_data(280, x, y);
  const reqaug::RandomForest f = reqaug::train_forest(x, y, reqaug::ForestConfig{});
  const std::span<const double> row(x.data(), static_cast<std::size_t>(x.cols()));
  for (auto _ : state) benchmark::DoNotOptimize(f.probability(row));
}
BENCHMARK(BM_ForestProbability);

}  // namespace
