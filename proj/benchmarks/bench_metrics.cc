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

#include "reqaug/metrics.h"

namespace {

void BM_Emd(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  reqaug::Matrix cost(n, n);
  for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
  const std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(reqaug::emd(w, w, cost));
}
BENCHMARK(BM_Emd)->Arg(8)->Arg(32)->Arg(64);

void BM_Bleu(benchmark::State& state) {
  std::vector<std::string> a, b;
  for (int i = 0; i < 40; ++i) {
    a.push_back(std::to_string(i % 7));
    b.push_back(std::to_string(i % 5));
  }
  for (auto _ : state) benchmark::DoNotOptimize(reqaug::bleu(a, b));
}
BENCHMARK(BM_Bleu);

}  // namespace
