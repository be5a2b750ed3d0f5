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

#ifndef NF4_BENCH_HPP
#define NF4_BENCH_HPP

#include "nf4/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace nf4
{

class BenchError : public std::runtime_error
{
public:
  explicit BenchError(const std::string &msg) : std::runtime_error(msg) {}
};

/// All timing goes through this interface so contract tests can inject a manual
/// clock; real measurements use the monotonic clock.
class Clock
{
public:
  virtual ~Clock() = default;
  virtual int64_t now_ns() const = 0;
};

class MonotonicClock final : public Clock
{
public:
  int64_t now_ns() const override;
};

class ManualClock final : public Clock
{
public:
  int64_t now_ns() const override { return _now; }
  void advance_ns(int64_t ns) { _now += ns; }

private:
  int64_t _now = 0;
};

struct LatencyStats
{
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double stddev_ms = 0.0;
  std::size_t n_runs = 0;
};

/// Time `runner` n_runs times after n_warmup excluded warmups. Only the runner
/// itself sits inside the timed region.
LatencyStats measure_latency(const std::function<void()> &runner, std::size_t n_warmup,
                             std::size_t n_runs, const Clock &clock);

/// Tokens per wall-clock second over all prompts. `run_prompt` returns the number
/// of tokens it generated.
double measure_throughput(const std::function<std::size_t(std::size_t)> &run_prompt,
                          std::size_t n_prompts, const Clock &clock);

/// Analytic weight-byte accounting. FP32 weights cost 4 bytes per parameter; a
/// packed layer costs codes + 4-byte scales + its 12-byte container header.
struct WeightMemory
{
  uint64_t model_bytes_fp32 = 0;   // every parameter at FP32
  uint64_t model_bytes_actual = 0; // packed layers at their packed size
  uint64_t proj_bytes_fp32 = 0;    // quantizable projections at FP32
  uint64_t proj_bytes_actual = 0;  // quantizable projections as stored
  uint64_t code_bytes = 0;
  uint64_t scale_bytes = 0;
  uint64_t header_bytes = 0;
};

WeightMemory measure_memory(const Model &model);

uint64_t q4_packed_bytes(const QuantizedTensor &qt);

/// Process peak RSS in bytes as reported by the platform, 0 when unavailable.
/// Measured footprints are reported alongside the analytic ones, never instead.
uint64_t peak_rss_bytes();

/// Ideal FP32->INT4 ratio 32/(4 + 32/g), headers excluded.
double closed_form_compression_ratio(std::size_t group_size);

/// Everything measured for one model variant. `measured` fields vary run to run;
/// everything else is deterministic for fixed seeds.
struct MetricBundle
{
  std::string model_file;
  std::string method = "fp32"; // fp32 | rtn | gsq | gptq
  std::size_t group_size = 0;  // 0 for fp32
  uint64_t corpus_seed = 0;
  std::size_t corpus_len = 0;

  EvalResult eval;
  WeightMemory memory;
  std::map<std::string, double> per_layer_mse;

  LatencyStats latency;
  double throughput_tok_per_s = 0.0;
  double setup_ms = 0.0; // quantization time, reported separately from latency
  uint64_t peak_rss = 0;
};

/// Pre/post comparison mirroring the measurement methodology: deltas on every
/// metric, compression ratios, and a memory-paradox flag whenever any post
/// footprint exceeds its pre counterpart.
struct BenchReport
{
  MetricBundle pre;
  MetricBundle post;
  double compression_ratio = 0.0;       // proj fp32 bytes / proj packed bytes
  double model_compression_ratio = 0.0; // whole-model bytes ratio
  bool memory_paradox = false;
  std::string memory_paradox_detail;
};

/// Validates that both bundles were produced on the same corpus/config.
BenchReport compare_report(const MetricBundle &pre, const MetricBundle &post);

std::string metric_bundle_to_json(const MetricBundle &bundle);
MetricBundle metric_bundle_from_json(const std::string &json_text);

std::string report_to_json(const BenchReport &report);
/// Aligned-column text table; deterministic given deterministic inputs.
std::string report_to_text(const BenchReport &report);

} // namespace nf4

#endif // NF4_BENCH_HPP
