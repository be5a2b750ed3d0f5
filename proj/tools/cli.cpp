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

#include "cli.hpp"

#include "nf4/bench.hpp"
#include "nf4/gptq.hpp"
#include "nf4/gsq.hpp"
#include "nf4/model.hpp"
#include "nf4/prng.hpp"
#include "nf4/quant.hpp"
#include "nf4/tensor_file.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace nf4
{

namespace
{

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_text_atomic(const fs::path &path, const std::string &content)
{
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw TensorFileError("cannot open for writing: " + tmp.string());
    os << content;
    if (!os)
      throw TensorFileError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw TensorFileError("rename failed: " + path.string() + ": " + ec.message());
}

std::string read_text(const fs::path &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw TensorFileError("cannot open: " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct CorpusOptions
{
  uint64_t seed = 1234;
  std::size_t length = 2048;

  void attach(CLI::App *cmd)
  {
    cmd->add_option("--corpus-seed", seed, "synthetic corpus seed")->capture_default_str();
    cmd->add_option("--corpus-len", length, "synthetic corpus length in tokens")
      ->check(CLI::Range(static_cast<std::size_t>(2), static_cast<std::size_t>(1u << 24)))
      ->capture_default_str();
  }
};

bool is_model_file(const TensorFile &tf) { return tf.contains("config"); }

// --- gen-model ------------------------------------------------------------

struct GenModelArgs
{
  uint64_t seed = 7;
  std::string out;
};

int cmd_gen_model(const GenModelArgs &args)
{
  ToyTransformerConfig cfg;
  cfg.seed = args.seed;
  const Model model = build_model(cfg);
  write_tensor_file(args.out, model_to_tensor_file(model));
  std::cout << "wrote model (" << parameter_count(model) << " parameters, seed " << args.seed
            << ") to " << args.out << "\n";
  return 0;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateArgs
{
  std::string model;
  std::string out;
  CorpusOptions corpus;
  std::size_t n_samples = 128;
  uint64_t sample_seed = 99;
};

int cmd_calibrate(const CalibrateArgs &args)
{
  const Model model = model_from_tensor_file(read_tensor_file(args.model));
  const std::vector<int> corpus =
    synthetic_corpus(args.corpus.seed, args.corpus.length, model.config.vocab);
  const auto calib = capture_calibration(model, corpus, args.n_samples, args.sample_seed);

  TensorFile tf;
  for (const auto &[name, cs] : calib)
    tf.add(name + ".calib", cs.samples);
  write_tensor_file(args.out, tf);
  std::cout << "wrote " << calib.size() << " calibration sets (" << args.n_samples
            << " samples each) to " << args.out << "\n";
  return 0;
}

// --- quantize ---------------------------------------------------------------

struct QuantizeArgs
{
  std::string model;
  std::string calib;
  std::string out;
  std::string method = "rtn";
  std::size_t group_size = 16;
  bool group_size_given = false;
  std::string preset;
  float damping = 0.01f;
  std::vector<float> alpha_grid;
  bool clip_search = false;
};

QuantConfig make_quant_config(const QuantizeArgs &args)
{
  QuantConfig cfg;
  cfg.method = method_from_name(args.method);
  cfg.group_size = args.group_size;
  if (!args.preset.empty() && !args.group_size_given)
    cfg.group_size = 64; // group64-seq512 preset; seq length is already 512
  cfg.hessian_damping = args.damping;
  cfg.clip_search = args.clip_search;
  if (!args.alpha_grid.empty())
    cfg.awq_alpha_grid = args.alpha_grid;
  return cfg;
}

std::map<std::string, CalibrationSet> load_calibration(const std::string &path,
                                                       const std::vector<std::string> &layers)
{
  const TensorFile tf = read_tensor_file(path);
  std::map<std::string, CalibrationSet> out;
  for (const std::string &layer : layers)
  {
    const TensorEntry *e = tf.find(layer + ".calib");
    if (!e)
      throw QuantError(QuantErrorKind::EmptyCalibration,
                       "calibration file has no entry for layer " + layer);
    out.emplace(layer, CalibrationSet{e->matrix()});
  }
  return out;
}

int quantize_model_file(const QuantizeArgs &args, const TensorFile &in, const QuantConfig &cfg)
{
  const Model model = model_from_tensor_file(in);

  // Fail fast on shapes before any calibration work.
  for (auto [name, layer] : model.projection_layers())
    validate_shape(layer->dense(), cfg.group_size);

  std::map<std::string, CalibrationSet> calib;
  if (cfg.method != Method::RTN)
  {
    if (args.calib.empty())
      throw CLI::RequiredError("--calib (required for gsq/gptq)");
    calib = load_calibration(args.calib, quantizable_layer_names(model.config));
  }

  MonotonicClock clock;
  const int64_t t0 = clock.now_ns();
  const QuantizeModelResult result = quantize_model(model, calib, cfg);
  const double setup_ms = static_cast<double>(clock.now_ns() - t0) / 1e6;

  write_tensor_file(args.out, model_to_tensor_file(result.model));

  ordered_json meta;
  meta["method"] = method_name(cfg.method);
  meta["group_size"] = cfg.group_size;
  meta["setup_ms"] = setup_ms;
  meta["per_layer_mse"] = ordered_json::object();
  for (const auto &[k, v] : result.per_layer_mse)
    meta["per_layer_mse"][k] = v;
  write_text_atomic(args.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "quantized " << result.per_layer_mse.size() << " layers (" << method_name(cfg.method)
            << ", group_size " << cfg.group_size << ") in " << setup_ms << " ms -> " << args.out
            << "\n";
  return 0;
}

int quantize_generic_file(const QuantizeArgs &args, const TensorFile &in, const QuantConfig &cfg)
{
  // Plain weights container: every F32 matrix entry is a quantization target.
  std::vector<std::string> targets;
  for (const auto &e : in.entries)
    if (!e.is_quantized())
      targets.push_back(e.name);
  if (targets.empty())
    throw TensorFileError("no F32 entries to quantize in " + args.model);

  for (const std::string &name : targets)
    validate_shape(in.get(name).matrix(), cfg.group_size);

  std::map<std::string, CalibrationSet> calib;
  if (cfg.method != Method::RTN)
  {
    if (args.calib.empty())
      throw CLI::RequiredError("--calib (required for gsq/gptq)");
    calib = load_calibration(args.calib, targets);
  }

  MonotonicClock clock;
  const int64_t t0 = clock.now_ns();

  TensorFile out;
  ordered_json mse = ordered_json::object();
  for (const std::string &name : targets)
  {
    const Matrix &w = in.get(name).matrix();
    switch (cfg.method)
    {
      case Method::RTN:
      {
        QuantizedTensor qt = quantize_rtn(w, cfg);
        mse[name] = reconstruction_mse(w, qt);
        out.add(name, std::move(qt));
        break;
      }
      case Method::GSQ:
      {
        auto [qt, scales] = gsq_quantize(w, calib.at(name), cfg);
        Matrix w_eff = dequantize(qt);
        for (std::size_t r = 0; r < w_eff.rows(); ++r)
          for (std::size_t c = 0; c < w_eff.cols(); ++c)
            w_eff.at(r, c) /= scales.per_channel[c];
        double sse = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
        {
          const double d =
            static_cast<double>(w.data()[i]) - static_cast<double>(w_eff.data()[i]);
          sse += d * d;
        }
        mse[name] = sse / static_cast<double>(w.size());
        out.add(name, qt);
        out.add(name + ".gsq_scales", Matrix(1, scales.per_channel.size(), scales.per_channel));
        out.add(name + ".gsq_alpha", Matrix(1, 1, {scales.alpha}));
        break;
      }
      case Method::GPTQ:
      {
        const Hessian h = build_hessian(calib.at(name), cfg.hessian_damping);
        QuantizedTensor qt = gptq_quantize(w, h, cfg);
        mse[name] = reconstruction_mse(w, qt);
        out.add(name, std::move(qt));
        break;
      }
    }
  }
  const double setup_ms = static_cast<double>(clock.now_ns() - t0) / 1e6;

  write_tensor_file(args.out, out);
  ordered_json meta;
  meta["method"] = method_name(cfg.method);
  meta["group_size"] = cfg.group_size;
  meta["setup_ms"] = setup_ms;
  meta["per_layer_mse"] = mse;
  write_text_atomic(args.out + ".meta.json", meta.dump(2) + "\n");

  std::cout << "quantized " << targets.size() << " tensors -> " << args.out << "\n";
  return 0;
}

int cmd_quantize(const QuantizeArgs &args)
{
  const QuantConfig cfg = make_quant_config(args);
  cfg.validate();
  const TensorFile in = read_tensor_file(args.model);
  return is_model_file(in) ? quantize_model_file(args, in, cfg)
                           : quantize_generic_file(args, in, cfg);
}

// --- eval -------------------------------------------------------------------

struct EvalArgs
{
  std::string model;
  std::string out;
  CorpusOptions corpus;
};

ordered_json eval_json(const EvalResult &r)
{
  return ordered_json{
    {"perplexity", r.perplexity}, {"token_accuracy", r.token_accuracy}, {"n_tokens", r.n_tokens}};
}

int cmd_eval(const EvalArgs &args)
{
  const TensorFile tf = read_tensor_file(args.model);
  if (!is_model_file(tf))
    throw TensorFileError(args.model + " is not a model file (no config entry)");
  const Model model = model_from_tensor_file(tf);
  const std::vector<int> corpus =
    synthetic_corpus(args.corpus.seed, args.corpus.length, model.config.vocab);
  const EvalResult r = evaluate(model, corpus);

  ordered_json j;
  j["schema_version"] = 1;
  j["model_file"] = args.model;
  j["corpus"] = ordered_json{{"seed", args.corpus.seed}, {"len", args.corpus.length}};
  j["eval"] = eval_json(r);
  if (!args.out.empty())
    write_text_atomic(args.out, j.dump(2) + "\n");
  std::cout << "perplexity " << r.perplexity << ", token_accuracy " << r.token_accuracy << " over "
            << r.n_tokens << " tokens\n";
  return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs
{
  std::string model;
  std::string out;
  CorpusOptions corpus;
  std::size_t n_runs = 5;
  std::size_t n_warmup = 2;
  std::size_t prompt_len = 8;
  std::size_t gen_tokens = 32;
  std::size_t n_prompts = 4;
};

int cmd_bench(const BenchArgs &args)
{
  const TensorFile tf = read_tensor_file(args.model);
  if (!is_model_file(tf))
    throw TensorFileError(args.model + " is not a model file (no config entry)");
  const Model model = model_from_tensor_file(tf);
  const std::vector<int> corpus =
    synthetic_corpus(args.corpus.seed, args.corpus.length, model.config.vocab);
  if (corpus.size() < args.prompt_len * (args.n_prompts + 1))
    throw BenchError("corpus too short for the requested prompts");

  MetricBundle b;
  b.model_file = args.model;
  b.corpus_seed = args.corpus.seed;
  b.corpus_len = args.corpus.length;

  // Sidecar metadata from the quantize step, if this file has one.
  const fs::path meta_path = args.model + ".meta.json";
  if (fs::exists(meta_path))
  {
    const ordered_json meta = ordered_json::parse(read_text(meta_path));
    b.method = meta.at("method").get<std::string>();
    b.group_size = meta.at("group_size").get<std::size_t>();
    b.setup_ms = meta.at("setup_ms").get<double>();
    for (const auto &[k, v] : meta.at("per_layer_mse").items())
      b.per_layer_mse[k] = v.get<double>();
  }

  b.eval = evaluate(model, corpus);
  b.memory = measure_memory(model);

  MonotonicClock clock;
  const std::vector<int> prompt(corpus.begin(), corpus.begin() + args.prompt_len);
  b.latency = measure_latency([&]() { generate(model, prompt, args.gen_tokens); }, args.n_warmup,
                              args.n_runs, clock);
  b.throughput_tok_per_s = measure_throughput(
    [&](std::size_t i) {
      const std::vector<int> p(corpus.begin() + i * args.prompt_len,
                               corpus.begin() + (i + 1) * args.prompt_len);
      return generate(model, p, args.gen_tokens).size() - p.size();
    },
    args.n_prompts, clock);
  b.peak_rss = peak_rss_bytes();

  if (!args.out.empty())
    write_text_atomic(args.out, metric_bundle_to_json(b));
  std::cout << "bench " << b.method << ": ppl " << b.eval.perplexity << ", latency mean "
            << b.latency.mean_ms << " ms, throughput " << b.throughput_tok_per_s << " tok/s\n";
  return 0;
}

// --- compare ----------------------------------------------------------------

struct CompareArgs
{
  std::string pre;
  std::string post;
  std::string out;
  std::string format = "both";
};

int cmd_compare(const CompareArgs &args)
{
  const MetricBundle pre = metric_bundle_from_json(read_text(args.pre));
  const MetricBundle post = metric_bundle_from_json(read_text(args.post));
  const BenchReport report = compare_report(pre, post);

  const std::string text = report_to_text(report);
  if (!args.out.empty())
  {
    if (args.format == "json" || args.format == "both")
      write_text_atomic(args.out + ".json", report_to_json(report));
    if (args.format == "text" || args.format == "both")
      write_text_atomic(args.out + ".txt", text);
  }
  std::cout << text;
  return 0;
}

} // namespace

int run_cli(int argc, const char *const *argv)
{
  CLI::App app{"4-bit group-quantization engine and benchmark harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read option defaults from a key=value file");
  app.set_version_flag("--version", "nf4quant 0.1.0");

  GenModelArgs gen_args;
  CLI::App *gen = app.add_subcommand("gen-model", "generate the seeded toy transformer");
  gen->add_option("--seed", gen_args.seed, "weight initialization seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "output tensor file")
    ->required()
    ->envname("NF4_OUT");

  CalibrateArgs cal_args;
  CLI::App *cal = app.add_subcommand("calibrate", "capture per-layer activation statistics");
  cal->add_option("--model", cal_args.model, "model tensor file")
    ->required()
    ->envname("NF4_MODEL");
  cal->add_option("--out", cal_args.out, "output calibration tensor file")
    ->required()
    ->envname("NF4_OUT");
  cal_args.corpus.attach(cal);
  cal->add_option("--n-samples", cal_args.n_samples, "activation rows kept per layer")
    ->check(CLI::Range(static_cast<std::size_t>(1), static_cast<std::size_t>(1u << 20)))
    ->capture_default_str();
  cal->add_option("--sample-seed", cal_args.sample_seed, "row subsampling seed")
    ->capture_default_str();

  QuantizeArgs q_args;
  CLI::App *qz = app.add_subcommand("quantize", "quantize weights to packed INT4");
  qz->add_option("--model", q_args.model, "input tensor file (model or plain weights)")
    ->required()
    ->envname("NF4_MODEL");
  qz->add_option("--calib", q_args.calib, "calibration tensor file (gsq/gptq)")
    ->envname("NF4_CALIB");
  qz->add_option("--out", q_args.out, "output tensor file")->required()->envname("NF4_OUT");
  qz->add_option("--method", q_args.method, "rtn | gsq | gptq")
    ->check(CLI::IsMember({"rtn", "gsq", "gptq"}))
    ->capture_default_str();
  CLI::Option *gs_opt =
    qz->add_option("--group-size", q_args.group_size, "columns sharing one scale")
      ->check(CLI::Range(static_cast<std::size_t>(1), static_cast<std::size_t>(1u << 16)))
      ->capture_default_str();
  qz->add_option("--preset", q_args.preset, "named configuration preset")
    ->check(CLI::IsMember({"group64-seq512"}));
  qz->add_option("--damping", q_args.damping, "GPTQ Hessian damping fraction")
    ->check(CLI::PositiveNumber)
    ->capture_default_str();
  qz->add_option("--alpha-grid", q_args.alpha_grid, "GSQ scaling exponent grid")
    ->delimiter(',')
    ->check(CLI::Range(0.0f, 1.0f));
  qz->add_flag("--clip-search", q_args.clip_search, "per-group clip fraction search");

  EvalArgs e_args;
  CLI::App *ev = app.add_subcommand("eval", "teacher-forced perplexity and accuracy");
  ev->add_option("--model", e_args.model, "model tensor file")
    ->required()
    ->envname("NF4_MODEL");
  ev->add_option("--out", e_args.out, "output JSON path")->envname("NF4_OUT");
  e_args.corpus.attach(ev);

  BenchArgs b_args;
  CLI::App *bn = app.add_subcommand("bench", "measure latency, throughput, memory, quality");
  bn->add_option("--model", b_args.model, "model tensor file")
    ->required()
    ->envname("NF4_MODEL");
  bn->add_option("--out", b_args.out, "output JSON path")->envname("NF4_OUT");
  b_args.corpus.attach(bn);
  bn->add_option("--n-runs", b_args.n_runs, "timed generation runs")
    ->check(CLI::Range(static_cast<std::size_t>(3), static_cast<std::size_t>(10000)))
    ->capture_default_str();
  bn->add_option("--warmup", b_args.n_warmup, "excluded warmup runs")->capture_default_str();
  bn->add_option("--prompt-len", b_args.prompt_len, "prompt length in tokens")
    ->check(CLI::Range(static_cast<std::size_t>(1), static_cast<std::size_t>(256)))
    ->capture_default_str();
  bn->add_option("--gen-tokens", b_args.gen_tokens, "tokens generated per run")
    ->check(CLI::Range(static_cast<std::size_t>(1), static_cast<std::size_t>(256)))
    ->capture_default_str();
  bn->add_option("--n-prompts", b_args.n_prompts, "prompts in the throughput pass")
    ->check(CLI::Range(static_cast<std::size_t>(1), static_cast<std::size_t>(64)))
    ->capture_default_str();

  CompareArgs c_args;
  CLI::App *cp = app.add_subcommand("compare", "render a pre/post quantization report");
  cp->add_option("--pre", c_args.pre, "baseline bench JSON")->required()->envname("NF4_PRE");
  cp->add_option("--post", c_args.post, "quantized bench JSON")->required()->envname("NF4_POST");
  cp->add_option("--out", c_args.out, "output base path (.json/.txt appended)")
    ->envname("NF4_OUT");
  cp->add_option("--format", c_args.format, "text | json | both")
    ->check(CLI::IsMember({"text", "json", "both"}))
    ->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e); // 0
  }
  catch (const CLI::CallForVersion &e)
  {
    return app.exit(e); // 0
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return 2;
  }

  q_args.group_size_given = gs_opt->count() > 0;

  try
  {
    if (gen->parsed())
      return cmd_gen_model(gen_args);
    if (cal->parsed())
      return cmd_calibrate(cal_args);
    if (qz->parsed())
      return cmd_quantize(q_args);
    if (ev->parsed())
      return cmd_eval(e_args);
    if (bn->parsed())
      return cmd_bench(b_args);
    if (cp->parsed())
      return cmd_compare(c_args);
  }
  catch (const CLI::ParseError &e)
  {
    // Late usage errors (e.g. a method that needs --calib without one).
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

} // namespace nf4
