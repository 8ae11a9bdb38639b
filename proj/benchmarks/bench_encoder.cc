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

#include "reqaug/encoder.h"

namespace {

// Desk-sized encoder over one sequence of state.range(0) ids.
void BM_Forward(benchmark::State& state) {
  const reqaug::EncoderShape shape{
      .vocab_size = 2048, .hidden = 128, .heads = 4, .layers = 2, .max_positions = 512, .ffn = 512};
  std::mt19937_64 rng(1);
  const reqaug::TransformerEncoder enc(shape, rng);
  std::vector<int> ids(static_cast<std::size_t>(state.range(0)));
  std::uniform_int_distribution<int> id(6, 2047);
  for (auto& x : ids) x = id(rng);
  for (auto _ : state) benchmark::DoNotOptimize(enc.forward(ids, nullptr));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

}  // namespace
