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

#include "nf4/kernels.hpp"
#include "nf4/prng.hpp"

#include <benchmark/benchmark.h>

using namespace nf4;

static void BM_GemmF32(benchmark::State &state)
{
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Matrix x = seeded_random_matrix(n, 128, 11);
  const Matrix w = seeded_random_matrix(128, 128, 12);
  for (auto _ : state)
  {
    auto y = gemm_f32(x, w);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * n * 128 * 128);
}
BENCHMARK(BM_GemmF32)->Arg(8)->Arg(64);

static void BM_GemmQ4Fused(benchmark::State &state)
{
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t group = static_cast<std::size_t>(state.range(1));
  const Matrix x = seeded_random_matrix(n, 128, 13);
  const Matrix w = seeded_random_matrix(128, 128, 14);
  QuantConfig cfg;
  cfg.group_size = group;
  LinearLayer layer;
  layer.weights = quantize_rtn(w, cfg);
  for (auto _ : state)
  {
    auto y = gemm_q4(x, layer);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * n * 128 * 128);
}
BENCHMARK(BM_GemmQ4Fused)->Args({8, 16})->Args({8, 64})->Args({64, 16})->Args({64, 64});

static void BM_GemmQ4DequantThenGemm(benchmark::State &state)
{
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Matrix x = seeded_random_matrix(n, 128, 15);
  const Matrix w = seeded_random_matrix(128, 128, 16);
  QuantConfig cfg;
  cfg.group_size = 16;
  const QuantizedTensor qt = quantize_rtn(w, cfg);
  for (auto _ : state)
  {
    auto y = gemm_f32(x, dequantize(qt));
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * n * 128 * 128);
}
BENCHMARK(BM_GemmQ4DequantThenGemm)->Arg(8)->Arg(64);
