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

#include "nf4/gptq.hpp"
#include "nf4/gsq.hpp"
#include "nf4/prng.hpp"
#include "nf4/quant.hpp"

#include <benchmark/benchmark.h>

using namespace nf4;

namespace
{

QuantConfig cfg_for(std::size_t group, Method m = Method::RTN)
{
  QuantConfig cfg;
  cfg.method = m;
  cfg.group_size = group;
  return cfg;
}

} // namespace

static void BM_QuantizeRtn(benchmark::State &state)
{
  const std::size_t group = static_cast<std::size_t>(state.range(0));
  const Matrix w = seeded_random_matrix(128, 128, 1);
  const QuantConfig cfg = cfg_for(group);
  for (auto _ : state)
  {
    auto qt = quantize_rtn(w, cfg);
    benchmark::DoNotOptimize(qt);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * w.size());
}
BENCHMARK(BM_QuantizeRtn)->Arg(16)->Arg(64);

static void BM_Dequantize(benchmark::State &state)
{
  const Matrix w = seeded_random_matrix(128, 128, 2);
  const QuantizedTensor qt = quantize_rtn(w, cfg_for(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state)
  {
    auto back = dequantize(qt);
    benchmark::DoNotOptimize(back);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * w.size());
}
BENCHMARK(BM_Dequantize)->Arg(16)->Arg(64);

static void BM_GsqSearch(benchmark::State &state)
{
  const Matrix w = seeded_random_matrix(64, 64, 3);
  const CalibrationSet calib{seeded_random_matrix(64, 64, 4)};
  const QuantConfig cfg = cfg_for(16, Method::GSQ);
  for (auto _ : state)
  {
    auto result = gsq_quantize(w, calib, cfg);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_GsqSearch);

static void BM_GptqQuantize(benchmark::State &state)
{
  const Matrix w = seeded_random_matrix(64, 64, 5);
  const CalibrationSet calib{seeded_random_matrix(64, 64, 6)};
  const Hessian h = build_hessian(calib, 0.01f);
  const QuantConfig cfg = cfg_for(16, Method::GPTQ);
  for (auto _ : state)
  {
    auto qt = gptq_quantize(w, h, cfg);
    benchmark::DoNotOptimize(qt);
  }
}
BENCHMARK(BM_GptqQuantize);

static void BM_BuildHessian(benchmark::State &state)
{
  const CalibrationSet calib{seeded_random_matrix(128, 64, 7)};
  for (auto _ : state)
  {
    auto h = build_hessian(calib, 0.01f);
    benchmark::DoNotOptimize(h);
  }
}
BENCHMARK(BM_BuildHessian);
