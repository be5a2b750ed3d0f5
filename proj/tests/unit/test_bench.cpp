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

#include "nf4/bench.hpp"
#include "nf4/prng.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace nf4;

namespace
{

// Fixture with fixed numbers for rendering and round-trip tests.
MetricBundle fixture_bundle(bool post)
{
  MetricBundle b;
  b.model_file = post ? "model.q4.nf4" : "model.nf4";
  b.method = post ? "gsq" : "fp32";
  b.group_size = post ? 16 : 0;
  b.corpus_seed = 1234;
  b.corpus_len = 2048;
  b.eval = {post ? 64.52 : 63.98, post ? 0.0152 : 0.0161, 2047};
  b.memory.model_bytes_fp32 = 428544;
  b.memory.model_bytes_actual = post ? 215696 : 428544;
  b.memory.proj_bytes_fp32 = 262144;
  b.memory.proj_bytes_actual = post ? 49296 : 262144;
  b.memory.code_bytes = post ? 32768 : 0;
  b.memory.scale_bytes = post ? 16384 : 0;
  b.memory.header_bytes = post ? 144 : 0;
  if (post)
  {
    b.per_layer_mse["blocks.0.attn.q_proj"] = 2.5e-4;
    b.per_layer_mse["blocks.0.ffn.fc1"] = 1.25e-4;
  }
  b.latency = {post ? 12.400 : 10.000, post ? 12.300 : 10.000, post ? 13.100 : 10.100,
               post ? 0.350 : 0.050, 5};
  b.throughput_tok_per_s = post ? 980.0 : 1200.0;
  b.setup_ms = post ? 42.5 : 0.0;
  b.peak_rss = post ? 9000000 : 9500000;
  return b;
}

} // namespace

TEST_CASE("manual clock latency: a 10 ms runner measures exactly 10 ms")
{
  ManualClock clock;
  auto runner = [&]() { clock.advance_ns(10'000'000); };
  const LatencyStats s = measure_latency(runner, 2, 5, clock);
  CHECK(s.mean_ms == 10.0);
  CHECK(s.p50_ms == 10.0);
  CHECK(s.p95_ms == 10.0);
  CHECK(s.stddev_ms == 0.0);
  CHECK(s.n_runs == 5);
}

TEST_CASE("warmup runs are excluded from the timed region")
{
  ManualClock clock;
  int calls = 0;
  auto runner = [&]() {
    ++calls;
    clock.advance_ns(calls <= 2 ? 100'000'000 : 10'000'000); // slow warmups
  };
  const LatencyStats s = measure_latency(runner, 2, 3, clock);
  CHECK(s.mean_ms == 10.0);
}

TEST_CASE("latency requires at least three runs")
{
  ManualClock clock;
  auto runner = [&]() { clock.advance_ns(1); };
  CHECK_THROWS_AS(measure_latency(runner, 0, 2, clock), std::invalid_argument);
  CHECK_NOTHROW(measure_latency(runner, 0, 3, clock));
}

TEST_CASE("percentiles are ordered on uneven runs")
{
  ManualClock clock;
  int i = 0;
  const int64_t durations[] = {5, 1, 9, 3, 7}; // ms
  auto runner = [&]() { clock.advance_ns(durations[i++ % 5] * 1'000'000); };
  const LatencyStats s = measure_latency(runner, 0, 5, clock);
  CHECK(s.p50_ms == 5.0);
  CHECK(s.p95_ms == 9.0);
  CHECK(s.p95_ms >= s.p50_ms);
  CHECK(s.p50_ms >= 0.0);
}

TEST_CASE("throughput with an injected constant-rate clock")
{
  ManualClock clock;
  auto run_prompt = [&](std::size_t) -> std::size_t {
    clock.advance_ns(1'000'000'000);
    return 100;
  };
  CHECK(measure_throughput(run_prompt, 1, clock) == 100.0);
  // doubling prompts at the same rate leaves throughput unchanged
  CHECK(measure_throughput(run_prompt, 2, clock) == 100.0);
}

TEST_CASE("analytic packed-byte accounting matches the worked example")
{
  QuantConfig cfg;
  cfg.group_size = 16;
  const Matrix w = seeded_random_matrix(64, 64, 1001);
  const QuantizedTensor q16 = quantize_rtn(w, cfg);
  CHECK(q16.code_bytes() == 2048);
  CHECK(q16.scale_bytes() == 1024);
  CHECK(q16.code_bytes() + q16.scale_bytes() == 3072); // ratio 16384/3072 = 5.33x
  CHECK(q4_packed_bytes(q16) == 3072 + 12);

  cfg.group_size = 64;
  const QuantizedTensor q64 = quantize_rtn(w, cfg);
  CHECK(q64.code_bytes() + q64.scale_bytes() == 2048 + 256); // ratio 7.11x
  CHECK(closed_form_compression_ratio(16) == doctest::Approx(16384.0 / 3072.0).epsilon(1e-12));
  CHECK(closed_form_compression_ratio(64) == doctest::Approx(16384.0 / 2304.0).epsilon(1e-12));
}

TEST_CASE("whole-model memory accounting")
{
  ToyTransformerConfig mc;
  mc.seed = 5;
  const Model m = build_model(mc);
  const WeightMemory pre = measure_memory(m);
  CHECK(pre.model_bytes_fp32 == 107136 * 4);
  CHECK(pre.model_bytes_actual == pre.model_bytes_fp32);
  CHECK(pre.proj_bytes_fp32 == 65536 * 4);
  CHECK(pre.proj_bytes_actual == pre.proj_bytes_fp32);

  QuantConfig cfg;
  cfg.group_size = 16;
  const Model qm = quantize_model(m, {}, cfg).model;
  const WeightMemory post = measure_memory(qm);
  CHECK(post.model_bytes_fp32 == pre.model_bytes_fp32);
  CHECK(post.code_bytes == 65536 / 2);
  CHECK(post.scale_bytes == 65536 / 16 * 4);
  CHECK(post.header_bytes == 12 * 12);
  CHECK(post.proj_bytes_actual == post.code_bytes + post.scale_bytes + post.header_bytes);
  CHECK(post.model_bytes_actual ==
        pre.model_bytes_fp32 - pre.proj_bytes_fp32 + post.proj_bytes_actual);
}

TEST_CASE("identical bundles compare with zero deltas and no paradox")
{
  const MetricBundle b = fixture_bundle(false);
  const BenchReport r = compare_report(b, b);
  CHECK(r.post.eval.perplexity - r.pre.eval.perplexity == 0.0);
  CHECK(r.post.latency.mean_ms - r.pre.latency.mean_ms == 0.0);
  CHECK(!r.memory_paradox);
}

TEST_CASE("growing footprints raise the memory-paradox flag")
{
  const MetricBundle pre = fixture_bundle(false);
  MetricBundle post = fixture_bundle(true);
  post.peak_rss = pre.peak_rss + 123456;
  const BenchReport r = compare_report(pre, post);
  CHECK(r.memory_paradox);
  CHECK(r.memory_paradox_detail.find("RSS") != std::string::npos);

  MetricBundle bloated = fixture_bundle(true);
  bloated.memory.model_bytes_actual = pre.memory.model_bytes_actual + 1;
  CHECK(compare_report(pre, bloated).memory_paradox);
}

TEST_CASE("bundles from different corpora refuse to compare")
{
  const MetricBundle pre = fixture_bundle(false);
  MetricBundle post = fixture_bundle(true);
  post.corpus_seed = 9999;
  CHECK_THROWS_AS(compare_report(pre, post), BenchError);
}

TEST_CASE("metric bundles survive the JSON round trip")
{
  const MetricBundle b = fixture_bundle(true);
  const MetricBundle back = metric_bundle_from_json(metric_bundle_to_json(b));
  CHECK(back.method == b.method);
  CHECK(back.group_size == b.group_size);
  CHECK(back.eval.perplexity == b.eval.perplexity);
  CHECK(back.eval.n_tokens == b.eval.n_tokens);
  CHECK(back.memory.proj_bytes_actual == b.memory.proj_bytes_actual);
  CHECK(back.per_layer_mse == b.per_layer_mse);
  CHECK(back.latency.p95_ms == b.latency.p95_ms);
  CHECK(back.setup_ms == b.setup_ms);
  CHECK(metric_bundle_to_json(back) == metric_bundle_to_json(b));
}

TEST_CASE("report JSON carries the compression arithmetic")
{
  const BenchReport r = compare_report(fixture_bundle(false), fixture_bundle(true));
  CHECK(r.compression_ratio == doctest::Approx(262144.0 / 49296.0).epsilon(1e-12));
  const std::string json = report_to_json(r);
  CHECK(json.find("\"compression_ratio\"") != std::string::npos);
  CHECK(json.find("\"memory_paradox\"") != std::string::npos);
}

TEST_CASE("text rendering is byte-identical to the golden file")
{
  const BenchReport r = compare_report(fixture_bundle(false), fixture_bundle(true));
  const std::string text = report_to_text(r);

  const std::string golden_path = std::string(NF4_TEST_DATA_DIR) + "/report_golden.txt";
  if (std::getenv("NF4_REGEN_GOLDEN"))
  {
    std::ofstream os(golden_path, std::ios::binary | std::ios::trunc);
    os << text;
  }
  std::ifstream is(golden_path, std::ios::binary);
  REQUIRE_MESSAGE(is.good(), "golden file missing (set NF4_REGEN_GOLDEN=1 to create)");
  std::ostringstream golden;
  golden << is.rdbuf();
  CHECK(text == golden.str());
}

TEST_CASE("monotonic clock advances")
{
  MonotonicClock clock;
  const int64_t a = clock.now_ns();
  const int64_t b = clock.now_ns();
  CHECK(b >= a);
}
