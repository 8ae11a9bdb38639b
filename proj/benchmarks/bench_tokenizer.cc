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

#include <string>

#include <benchmark/benchmark.h>

#include "reqaug/bbpe.h"
#include "reqaug/ingest.h"

namespace {

const reqaug::RequestCorpus& corpus() {
  static const reqaug::RequestCorpus c = reqaug::make_smoke_corpus(150, 50, 1);
  return c;
}

void BM_TrainBbpe(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reqaug::train_bbpe(corpus(), vocab));
}
BENCHMARK(BM_TrainBbpe)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const reqaug::BbpeTokenizer tok = reqaug::train_bbpe(corpus(), 2048);
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& r : corpus().records()) {
      benchmark::DoNotOptimize(tok.encode(r.raw));
      bytes += r.raw.size();
    }
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_Encode);

void BM_TokenizeEntities(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& r : corpus().records()) benchmark::DoNotOptimize(reqaug::tokenize_entities(r.raw));
  }
}
BENCHMARK(BM_TokenizeEntities);

}  // namespace
