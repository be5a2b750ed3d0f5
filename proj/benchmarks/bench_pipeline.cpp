/*
 * Copyright (c) 2026 the nf4quant authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nf4/model.hpp"
#include "nf4/prng.hpp"

#include <benchmark/benchmark.h>

using namespace nf4;

namespace
{

const Model &toy_model()
{
  static const Model m = [] {
    ToyTransformerConfig cfg;
    cfg.seed = 7;
    return build_model(cfg);
  }();
  return m;
}

const Model &toy_model_q4(std::size_t group)
{
  static const Model m16 = [] {
    QuantConfig cfg;
    cfg.group_size = 16;
    return quantize_model(toy_model(), {}, cfg).model;
  }();
  static const Model m64 = [] {
    QuantConfig cfg;
    cfg.group_size = 64;
    return quantize_model(toy_model(), {}, cfg).model;
  }();
  return group == 16 ? m16 : m64;
}

} // namespace

static void BM_ForwardFp32(benchmark::State &state)
{
  const auto corpus = synthetic_corpus(1234, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
  {
    auto logits = forward(toy_model(), corpus);
    benchmark::DoNotOptimize(logits);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ForwardFp32)->Arg(64)->Arg(256);

static void BM_ForwardQ4(benchmark::State &state)
{
  const auto corpus = synthetic_corpus(1234, 64);
  const Model &m = toy_model_q4(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
  {
    auto logits = forward(m, corpus);
    benchmark::DoNotOptimize(logits);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 64);
}
BENCHMARK(BM_ForwardQ4)->Arg(16)->Arg(64);

static void BM_GenerateFp32(benchmark::State &state)
{
  const auto corpus = synthetic_corpus(1234, 8);
  for (auto _ : state)
  {
    auto tokens = generate(toy_model(), corpus, 16);
    benchmark::DoNotOptimize(tokens);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 16);
}
BENCHMARK(BM_GenerateFp32);

BENCHMARK_MAIN();
