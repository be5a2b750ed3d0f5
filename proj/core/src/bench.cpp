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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace nf4
{

using ordered_json = nlohmann::ordered_json;

int64_t MonotonicClock::now_ns() const
{
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
           std::chrono::steady_clock::now().time_since_epoch())
    .count();
}

LatencyStats measure_latency(const std::function<void()> &runner, std::size_t n_warmup,
                             std::size_t n_runs, const Clock &clock)
{
  if (n_runs < 3)
    throw std::invalid_argument("measure_latency: n_runs must be >= 3");

  for (std::size_t i = 0; i < n_warmup; ++i)
    runner();

  std::vector<double> runs_ms(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i)
  {
    const int64_t t0 = clock.now_ns();
    runner();
    const int64_t t1 = clock.now_ns();
    runs_ms[i] = static_cast<double>(t1 - t0) / 1e6;
  }

  std::vector<double> sorted = runs_ms;
  std::sort(sorted.begin(), sorted.end());
  auto percentile = [&](double q) {
    // Nearest-rank percentile.
    const std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n_runs)));
    return sorted[std::max<std::size_t>(rank, 1) - 1];
  };

  LatencyStats s;
  s.n_runs = n_runs;
  for (double v : runs_ms)
    s.mean_ms += v;
  s.mean_ms /= static_cast<double>(n_runs);
  double var = 0.0;
  for (double v : runs_ms)
    var += (v - s.mean_ms) * (v - s.mean_ms);
  s.stddev_ms = std::sqrt(var / static_cast<double>(n_runs));
  s.p50_ms = percentile(0.50);
  s.p95_ms = percentile(0.95);
  return s;
}

double measure_throughput(const std::function<std::size_t(std::size_t)> &run_prompt,
                          std::size_t n_prompts, const Clock &clock)
{
  if (n_prompts < 1)
    throw std::invalid_argument("measure_throughput: need at least one prompt");
  const int64_t t0 = clock.now_ns();
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < n_prompts; ++i)
    tokens += run_prompt(i);
  const int64_t t1 = clock.now_ns();
  const double seconds = static_cast<double>(t1 - t0) / 1e9;
  if (seconds <= 0.0)
    throw BenchError("measure_throughput: timed region has zero duration");
  return static_cast<double>(tokens) / seconds;
}

uint64_t q4_packed_bytes(const QuantizedTensor &qt)
{
  return static_cast<uint64_t>(qt.code_bytes()) + qt.scale_bytes() + 12;
}

WeightMemory measure_memory(const Model &model)
{
  WeightMemory wm;
  auto fp32_bytes = [](std::size_t params) { return static_cast<uint64_t>(params) * 4; };

  wm.model_bytes_fp32 = fp32_bytes(parameter_count(model));

  uint64_t non_proj = wm.model_bytes_fp32;
  for (auto [name, layer] : model.projection_layers())
  {
    const uint64_t dense = fp32_bytes(layer->out_features() * layer->in_features());
    non_proj -= dense;
    wm.proj_bytes_fp32 += dense;
    if (layer->is_quantized())
    {
      const QuantizedTensor &qt = layer->quantized();
      wm.proj_bytes_actual += q4_packed_bytes(qt);
      wm.code_bytes += qt.code_bytes();
      wm.scale_bytes += qt.scale_bytes();
      wm.header_bytes += 12;
    }
    else
    {
      wm.proj_bytes_actual += dense;
    }
  }
  wm.model_bytes_actual = non_proj + wm.proj_bytes_actual;
  return wm;
}

uint64_t peak_rss_bytes()
{
#if defined(__unix__) || defined(__APPLE__)
  rusage ru{};
  if (getrusage(RUSAGE_SELF, &ru) == 0)
  {
#if defined(__APPLE__)
    return static_cast<uint64_t>(ru.ru_maxrss);
#else
    return static_cast<uint64_t>(ru.ru_maxrss) * 1024;
#endif
  }
#endif
  return 0;
}

double closed_form_compression_ratio(std::size_t group_size)
{
  return 32.0 / (4.0 + 32.0 / static_cast<double>(group_size));
}

BenchReport compare_report(const MetricBundle &pre, const MetricBundle &post)
{
  if (pre.corpus_seed != post.corpus_seed || pre.corpus_len != post.corpus_len)
    throw BenchError("compare_report: bundles were measured on different corpora");
  if (pre.memory.model_bytes_fp32 != post.memory.model_bytes_fp32)
    throw BenchError("compare_report: bundles come from different model shapes");

  BenchReport r;
  r.pre = pre;
  r.post = post;
  if (post.memory.proj_bytes_actual > 0)
    r.compression_ratio = static_cast<double>(post.memory.proj_bytes_fp32) /
                          static_cast<double>(post.memory.proj_bytes_actual);
  if (post.memory.model_bytes_actual > 0)
    r.model_compression_ratio = static_cast<double>(pre.memory.model_bytes_actual) /
                                static_cast<double>(post.memory.model_bytes_actual);

  std::ostringstream paradox;
  if (post.memory.model_bytes_actual > pre.memory.model_bytes_actual)
    paradox << "analytic weight bytes grew; ";
  if (post.peak_rss > pre.peak_rss && pre.peak_rss > 0)
    paradox << "measured peak RSS grew; ";
  r.memory_paradox_detail = paradox.str();
  r.memory_paradox = !r.memory_paradox_detail.empty();
  return r;
}

namespace
{

ordered_json eval_to_json(const EvalResult &e)
{
  return ordered_json{{"perplexity", e.perplexity},
                      {"token_accuracy", e.token_accuracy},
                      {"n_tokens", e.n_tokens}};
}

EvalResult eval_from_json(const ordered_json &j)
{
  EvalResult e;
  e.perplexity = j.at("perplexity").get<double>();
  e.token_accuracy = j.at("token_accuracy").get<double>();
  e.n_tokens = j.at("n_tokens").get<std::size_t>();
  return e;
}

ordered_json memory_to_json(const WeightMemory &m)
{
  return ordered_json{{"model_bytes_fp32", m.model_bytes_fp32},
                      {"model_bytes_actual", m.model_bytes_actual},
                      {"proj_bytes_fp32", m.proj_bytes_fp32},
                      {"proj_bytes_actual", m.proj_bytes_actual},
                      {"code_bytes", m.code_bytes},
                      {"scale_bytes", m.scale_bytes},
                      {"header_bytes", m.header_bytes}};
}

WeightMemory memory_from_json(const ordered_json &j)
{
  WeightMemory m;
  m.model_bytes_fp32 = j.at("model_bytes_fp32").get<uint64_t>();
  m.model_bytes_actual = j.at("model_bytes_actual").get<uint64_t>();
  m.proj_bytes_fp32 = j.at("proj_bytes_fp32").get<uint64_t>();
  m.proj_bytes_actual = j.at("proj_bytes_actual").get<uint64_t>();
  m.code_bytes = j.at("code_bytes").get<uint64_t>();
  m.scale_bytes = j.at("scale_bytes").get<uint64_t>();
  m.header_bytes = j.at("header_bytes").get<uint64_t>();
  return m;
}

ordered_json bundle_to_json_obj(const MetricBundle &b)
{
  ordered_json j;
  j["schema_version"] = 1;
  j["model_file"] = b.model_file;
  j["method"] = b.method;
  j["group_size"] = b.group_size;
  j["corpus"] = ordered_json{{"seed", b.corpus_seed}, {"len", b.corpus_len}};
  j["eval"] = eval_to_json(b.eval);
  j["memory"] = memory_to_json(b.memory);
  j["per_layer_mse"] = ordered_json::object();
  for (const auto &[k, v] : b.per_layer_mse)
    j["per_layer_mse"][k] = v;
  // Wall-clock figures live under one key so determinism checks can drop them.
  j["measured"] = ordered_json{{"latency_ms",
                                ordered_json{{"mean", b.latency.mean_ms},
                                             {"p50", b.latency.p50_ms},
                                             {"p95", b.latency.p95_ms},
                                             {"stddev", b.latency.stddev_ms},
                                             {"n_runs", b.latency.n_runs}}},
                               {"throughput_tok_per_s", b.throughput_tok_per_s},
                               {"setup_ms", b.setup_ms},
                               {"peak_rss_bytes", b.peak_rss}};
  return j;
}

MetricBundle bundle_from_json_obj(const ordered_json &j)
{
  MetricBundle b;
  if (j.at("schema_version").get<int>() != 1)
    throw BenchError("unsupported bench report schema version");
  b.model_file = j.at("model_file").get<std::string>();
  b.method = j.at("method").get<std::string>();
  b.group_size = j.at("group_size").get<std::size_t>();
  b.corpus_seed = j.at("corpus").at("seed").get<uint64_t>();
  b.corpus_len = j.at("corpus").at("len").get<std::size_t>();
  b.eval = eval_from_json(j.at("eval"));
  b.memory = memory_from_json(j.at("memory"));
  for (const auto &[k, v] : j.at("per_layer_mse").items())
    b.per_layer_mse[k] = v.get<double>();
  const auto &m = j.at("measured");
  b.latency.mean_ms = m.at("latency_ms").at("mean").get<double>();
  b.latency.p50_ms = m.at("latency_ms").at("p50").get<double>();
  b.latency.p95_ms = m.at("latency_ms").at("p95").get<double>();
  b.latency.stddev_ms = m.at("latency_ms").at("stddev").get<double>();
  b.latency.n_runs = m.at("latency_ms").at("n_runs").get<std::size_t>();
  b.throughput_tok_per_s = m.at("throughput_tok_per_s").get<double>();
  b.setup_ms = m.at("setup_ms").get<double>();
  b.peak_rss = m.at("peak_rss_bytes").get<uint64_t>();
  return b;
}

std::string fmt(double v, int prec = 4)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

} // namespace

std::string metric_bundle_to_json(const MetricBundle &bundle)
{
  return bundle_to_json_obj(bundle).dump(2) + "\n";
}

MetricBundle metric_bundle_from_json(const std::string &json_text)
{
  try
  {
    return bundle_from_json_obj(ordered_json::parse(json_text));
  }
  catch (const nlohmann::json::exception &e)
  {
    throw BenchError(std::string("malformed bench report: ") + e.what());
  }
}

std::string report_to_json(const BenchReport &report)
{
  ordered_json j;
  j["schema_version"] = 1;
  j["pre"] = bundle_to_json_obj(report.pre);
  j["post"] = bundle_to_json_obj(report.post);
  j["comparison"] =
    ordered_json{{"compression_ratio", report.compression_ratio},
                 {"model_compression_ratio", report.model_compression_ratio},
                 {"closed_form_ratio",
                  report.post.group_size
                    ? closed_form_compression_ratio(report.post.group_size)
                    : 0.0},
                 {"perplexity_delta", report.post.eval.perplexity - report.pre.eval.perplexity},
                 {"accuracy_delta",
                  report.post.eval.token_accuracy - report.pre.eval.token_accuracy},
                 {"memory_paradox", report.memory_paradox},
                 {"memory_paradox_detail", report.memory_paradox_detail}};
  return j.dump(2) + "\n";
}

std::string report_to_text(const BenchReport &report)
{
  const MetricBundle &a = report.pre;
  const MetricBundle &b = report.post;
  std::ostringstream os;

  auto line = [&](const std::string &name, const std::string &pre, const std::string &post,
                  const std::string &delta) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-28s %16s %16s %16s\n", name.c_str(), pre.c_str(),
                  post.c_str(), delta.c_str());
    os << buf;
  };

  os << "quantization benchmark report\n";
  os << "  pre:  " << a.method << " (" << a.model_file << ")\n";
  os << "  post: " << b.method << " group_size=" << b.group_size << " (" << b.model_file << ")\n";
  os << "  corpus: seed=" << a.corpus_seed << " len=" << a.corpus_len << "\n\n";

  line("metric", "pre", "post", "delta");
  line("------", "---", "----", "-----");
  line("perplexity", fmt(a.eval.perplexity), fmt(b.eval.perplexity),
       fmt(b.eval.perplexity - a.eval.perplexity));
  line("token_accuracy", fmt(a.eval.token_accuracy), fmt(b.eval.token_accuracy),
       fmt(b.eval.token_accuracy - a.eval.token_accuracy));
  line("latency_mean_ms", fmt(a.latency.mean_ms, 3), fmt(b.latency.mean_ms, 3),
       fmt(b.latency.mean_ms - a.latency.mean_ms, 3));
  line("latency_p50_ms", fmt(a.latency.p50_ms, 3), fmt(b.latency.p50_ms, 3),
       fmt(b.latency.p50_ms - a.latency.p50_ms, 3));
  line("latency_p95_ms", fmt(a.latency.p95_ms, 3), fmt(b.latency.p95_ms, 3),
       fmt(b.latency.p95_ms - a.latency.p95_ms, 3));
  line("latency_stddev_ms", fmt(a.latency.stddev_ms, 3), fmt(b.latency.stddev_ms, 3),
       fmt(b.latency.stddev_ms - a.latency.stddev_ms, 3));
  line("throughput_tok_per_s", fmt(a.throughput_tok_per_s, 2), fmt(b.throughput_tok_per_s, 2),
       fmt(b.throughput_tok_per_s - a.throughput_tok_per_s, 2));
  line("setup_ms", fmt(a.setup_ms, 3), fmt(b.setup_ms, 3), fmt(b.setup_ms - a.setup_ms, 3));
  line("model_bytes", std::to_string(a.memory.model_bytes_actual),
       std::to_string(b.memory.model_bytes_actual),
       std::to_string(static_cast<int64_t>(b.memory.model_bytes_actual) -
                      static_cast<int64_t>(a.memory.model_bytes_actual)));
  line("proj_bytes", std::to_string(a.memory.proj_bytes_actual),
       std::to_string(b.memory.proj_bytes_actual),
       std::to_string(static_cast<int64_t>(b.memory.proj_bytes_actual) -
                      static_cast<int64_t>(a.memory.proj_bytes_actual)));
  line("peak_rss_bytes", std::to_string(a.peak_rss), std::to_string(b.peak_rss),
       std::to_string(static_cast<int64_t>(b.peak_rss) - static_cast<int64_t>(a.peak_rss)));
  os << "\n";
  os << "compression_ratio (projections): " << fmt(report.compression_ratio, 4);
  if (b.group_size)
    os << "  (closed form for g=" << b.group_size << ": "
       << fmt(closed_form_compression_ratio(b.group_size), 4) << ")";
  os << "\n";
  os << "compression_ratio (whole model): " << fmt(report.model_compression_ratio, 4) << "\n";
  os << "memory_paradox: " << (report.memory_paradox ? "YES - " + report.memory_paradox_detail
                                                     : "no")
     << "\n";

  if (!b.per_layer_mse.empty())
  {
    os << "\nper-layer reconstruction MSE\n";
    for (const auto &[k, v] : b.per_layer_mse)
    {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "  %-28s %.9e\n", k.c_str(), v);
      os << buf;
    }
  }
  return os.str();
}

} // namespace nf4
