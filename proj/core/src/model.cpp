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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nf4
{

void ToyTransformerConfig::validate() const
{
  if (d_model % n_heads != 0)
    throw std::invalid_argument("d_model must be divisible by n_heads");
  if (vocab < 1 || d_model < 1 || n_layers < 1 || d_ff < 1 || max_seq_len < 1)
    throw std::invalid_argument("all model dimensions must be >= 1");
}

namespace
{

std::string block_prefix(std::size_t b) { return "blocks." + std::to_string(b) + "."; }

std::vector<float> layer_norm_row(std::span<const float> x, const std::vector<float> &gain,
                                  const std::vector<float> &bias)
{
  const std::size_t d = x.size();
  double mean = 0.0;
  for (float v : x)
    mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (float v : x)
  {
    const double c = static_cast<double>(v) - mean;
    var += c * c;
  }
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + 1e-5);
  std::vector<float> out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = static_cast<float>((static_cast<double>(x[i]) - mean) * inv) * gain[i] + bias[i];
  return out;
}

Matrix layer_norm(const Matrix &x, const std::vector<float> &gain, const std::vector<float> &bias)
{
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
  {
    const std::vector<float> row = layer_norm_row(x.row(r), gain, bias);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

float gelu(float x)
{
  const double xd = x;
  const double t = std::tanh(0.7978845608028654 * (xd + 0.044715 * xd * xd * xd));
  return static_cast<float>(0.5 * xd * (1.0 + t));
}

} // namespace

Matrix softmax_rows(const Matrix &logits)
{
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r)
  {
    const auto row = logits.row(r);
    double mx = row[0];
    for (float v : row)
      mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    std::vector<double> e(row.size());
    for (std::size_t i = 0; i < row.size(); ++i)
    {
      e[i] = std::exp(static_cast<double>(row[i]) - mx);
      sum += e[i];
    }
    for (std::size_t i = 0; i < row.size(); ++i)
      probs.at(r, i) = static_cast<float>(e[i] / sum);
  }
  return probs;
}

std::vector<std::pair<std::string, LinearLayer *>> Model::projection_layers()
{
  std::vector<std::pair<std::string, LinearLayer *>> out;
  for (std::size_t b = 0; b < blocks.size(); ++b)
  {
    const std::string p = block_prefix(b);
    out.emplace_back(p + "attn.q_proj", &blocks[b].q_proj);
    out.emplace_back(p + "attn.k_proj", &blocks[b].k_proj);
    out.emplace_back(p + "attn.v_proj", &blocks[b].v_proj);
    out.emplace_back(p + "attn.o_proj", &blocks[b].o_proj);
    out.emplace_back(p + "ffn.fc1", &blocks[b].fc1);
    out.emplace_back(p + "ffn.fc2", &blocks[b].fc2);
  }
  return out;
}

std::vector<std::pair<std::string, const LinearLayer *>> Model::projection_layers() const
{
  std::vector<std::pair<std::string, const LinearLayer *>> out;
  for (const auto &[name, layer] : const_cast<Model *>(this)->projection_layers())
    out.emplace_back(name, layer);
  return out;
}

std::vector<std::string> quantizable_layer_names(const ToyTransformerConfig &config)
{
  std::vector<std::string> names;
  for (std::size_t b = 0; b < config.n_layers; ++b)
  {
    const std::string p = block_prefix(b);
    for (const char *s : {"attn.q_proj", "attn.k_proj", "attn.v_proj", "attn.o_proj", "ffn.fc1",
                          "ffn.fc2"})
      names.push_back(p + s);
  }
  return names;
}

Model build_model(const ToyTransformerConfig &config)
{
  config.validate();
  Model m;
  m.config = config;

  uint64_t tensor_idx = 0;
  auto next_seed = [&]() { return split_mix_at(config.seed, tensor_idx++); };
  auto gaussian = [&](std::size_t rows, std::size_t cols, float sigma) {
    return seeded_random_matrix(rows, cols, next_seed(), Distribution::Gaussian, sigma);
  };

  const float proj_sigma = 1.0f / std::sqrt(static_cast<float>(config.d_model));
  const float fc2_sigma = 1.0f / std::sqrt(static_cast<float>(config.d_ff));

  m.tok_embed = gaussian(config.vocab, config.d_model, 1.0f);
  m.pos_embed = gaussian(config.max_seq_len, config.d_model, 0.1f);

  m.blocks.resize(config.n_layers);
  for (auto &blk : m.blocks)
  {
    blk.ln1_gain.assign(config.d_model, 1.0f);
    blk.ln1_bias.assign(config.d_model, 0.0f);
    blk.ln2_gain.assign(config.d_model, 1.0f);
    blk.ln2_bias.assign(config.d_model, 0.0f);
    blk.q_proj.weights = gaussian(config.d_model, config.d_model, proj_sigma);
    blk.k_proj.weights = gaussian(config.d_model, config.d_model, proj_sigma);
    blk.v_proj.weights = gaussian(config.d_model, config.d_model, proj_sigma);
    blk.o_proj.weights = gaussian(config.d_model, config.d_model, proj_sigma);
    blk.fc1.weights = gaussian(config.d_ff, config.d_model, proj_sigma);
    blk.fc2.weights = gaussian(config.d_model, config.d_ff, fc2_sigma);
  }
  for (auto [name, layer] : m.projection_layers())
    layer->name = name;

  m.ln_f_gain.assign(config.d_model, 1.0f);
  m.ln_f_bias.assign(config.d_model, 0.0f);
  m.lm_head = gaussian(config.vocab, config.d_model, proj_sigma);
  return m;
}

std::size_t parameter_count(const Model &m)
{
  std::size_t n = m.tok_embed.size() + m.pos_embed.size() + m.lm_head.size();
  n += m.ln_f_gain.size() + m.ln_f_bias.size();
  for (const auto &blk : m.blocks)
  {
    n += blk.ln1_gain.size() + blk.ln1_bias.size() + blk.ln2_gain.size() + blk.ln2_bias.size();
    for (const LinearLayer *l : {&blk.q_proj, &blk.k_proj, &blk.v_proj, &blk.o_proj, &blk.fc1,
                                 &blk.fc2})
      n += l->out_features() * l->in_features();
  }
  return n;
}

std::vector<int> synthetic_corpus(uint64_t seed, std::size_t length, std::size_t vocab)
{
  if (length == 0 || vocab == 0)
    throw std::invalid_argument("synthetic_corpus: length and vocab must be >= 1");
  std::vector<int> tokens(length);
  uint64_t cur = split_mix_at(seed, 0) % vocab;
  tokens[0] = static_cast<int>(cur);
  for (std::size_t i = 1; i < length; ++i)
  {
    const uint64_t r = split_mix_at(seed, i);
    // Peaked Markov chain: 3/4 deterministic successor, 1/4 uniform jump.
    cur = (r % 4 != 0) ? (5 * cur + 11) % vocab : (r >> 8) % vocab;
    tokens[i] = static_cast<int>(cur);
  }
  return tokens;
}

Matrix forward(const Model &model, std::span<const int> tokens, const CaptureHook *hook)
{
  const auto &cfg = model.config;
  const std::size_t t_len = tokens.size();
  if (t_len == 0)
    throw std::invalid_argument("forward: empty token sequence");
  if (t_len > cfg.max_seq_len)
    throw std::invalid_argument("forward: sequence exceeds max_seq_len");
  for (int t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab)
      throw std::invalid_argument("forward: token id out of vocabulary");

  auto capture = [&](const std::string &name, const Matrix &input) {
    if (hook)
      (*hook)(name, input);
  };

  Matrix h(t_len, cfg.d_model);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t i = 0; i < cfg.d_model; ++i)
      h.at(t, i) = model.tok_embed.at(static_cast<std::size_t>(tokens[t]), i) +
                   model.pos_embed.at(t, i);

  const std::size_t d_head = cfg.d_model / cfg.n_heads;
  const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(d_head));

  for (std::size_t b = 0; b < model.blocks.size(); ++b)
  {
    const TransformerBlock &blk = model.blocks[b];
    const std::string p = block_prefix(b);

    const Matrix x1 = layer_norm(h, blk.ln1_gain, blk.ln1_bias);
    capture(p + "attn.q_proj", x1);
    capture(p + "attn.k_proj", x1);
    capture(p + "attn.v_proj", x1);
    const Matrix q = linear_forward(x1, blk.q_proj);
    const Matrix k = linear_forward(x1, blk.k_proj);
    const Matrix v = linear_forward(x1, blk.v_proj);

    Matrix attn_out(t_len, cfg.d_model);
    std::vector<double> scores;
    for (std::size_t head = 0; head < cfg.n_heads; ++head)
    {
      const std::size_t off = head * d_head;
      for (std::size_t i = 0; i < t_len; ++i)
      {
        scores.assign(i + 1, 0.0);
        double mx = -1e300;
        for (std::size_t j = 0; j <= i; ++j)
        {
          float dot = 0.0f;
          for (std::size_t c = 0; c < d_head; ++c)
            dot += q.at(i, off + c) * k.at(j, off + c);
          scores[j] = static_cast<double>(dot * inv_sqrt_dh);
          mx = std::max(mx, scores[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j <= i; ++j)
        {
          scores[j] = std::exp(scores[j] - mx);
          denom += scores[j];
        }
        for (std::size_t c = 0; c < d_head; ++c)
        {
          double acc = 0.0;
          for (std::size_t j = 0; j <= i; ++j)
            acc += scores[j] * static_cast<double>(v.at(j, off + c));
          attn_out.at(i, off + c) = static_cast<float>(acc / denom);
        }
      }
    }

    capture(p + "attn.o_proj", attn_out);
    const Matrix o = linear_forward(attn_out, blk.o_proj);
    for (std::size_t i = 0; i < h.size(); ++i)
      h.data()[i] += o.data()[i];

    const Matrix x2 = layer_norm(h, blk.ln2_gain, blk.ln2_bias);
    capture(p + "ffn.fc1", x2);
    Matrix u = linear_forward(x2, blk.fc1);
    for (float &f : u.data())
      f = gelu(f);
    capture(p + "ffn.fc2", u);
    const Matrix y = linear_forward(u, blk.fc2);
    for (std::size_t i = 0; i < h.size(); ++i)
      h.data()[i] += y.data()[i];
  }

  const Matrix hf = layer_norm(h, model.ln_f_gain, model.ln_f_bias);
  return gemm_f32(hf, model.lm_head);
}

void accumulate_eval(const Matrix &logits, std::span<const int> targets, double &sum_nll,
                     std::size_t &correct, std::size_t &count)
{
  for (std::size_t t = 0; t < targets.size(); ++t)
  {
    const auto row = logits.row(t);
    double mx = row[0];
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < row.size(); ++i)
    {
      if (row[i] > row[argmax])
        argmax = i;
      mx = std::max(mx, static_cast<double>(row[i]));
    }
    double lse = 0.0;
    for (float v : row)
      lse += std::exp(static_cast<double>(v) - mx);
    lse = mx + std::log(lse);
    sum_nll += lse - static_cast<double>(row[static_cast<std::size_t>(targets[t])]);
    if (argmax == static_cast<std::size_t>(targets[t]))
      ++correct;
    ++count;
  }
}

EvalResult evaluate(const Model &model, const std::vector<int> &corpus)
{
  if (corpus.size() < 2)
    throw std::invalid_argument("evaluate: corpus must contain at least 2 tokens");

  double sum_nll = 0.0;
  std::size_t correct = 0, count = 0;
  const std::size_t window = model.config.max_seq_len;
  for (std::size_t start = 0; start + 1 < corpus.size(); start += window)
  {
    const std::size_t len = std::min(window, corpus.size() - start);
    if (len < 2)
      break;
    const std::span<const int> tokens(corpus.data() + start, len);
    const Matrix logits = forward(model, tokens);
    // Row t predicts token t+1; the last row has no target inside this window.
    accumulate_eval(logits, tokens.subspan(1), sum_nll, correct, count);
  }

  EvalResult r;
  r.n_tokens = count;
  r.perplexity = std::exp(sum_nll / static_cast<double>(count));
  r.token_accuracy = static_cast<double>(correct) / static_cast<double>(count);
  return r;
}

std::vector<int> generate(const Model &model, const std::vector<int> &prompt,
                          std::size_t n_tokens)
{
  if (n_tokens < 1)
    throw std::invalid_argument("generate: n_tokens must be >= 1");
  if (prompt.empty())
    throw std::invalid_argument("generate: prompt must be nonempty");
  if (prompt.size() + n_tokens > model.config.max_seq_len)
    throw std::invalid_argument("generate: prompt length + n_tokens exceeds max_seq_len");

  std::vector<int> tokens = prompt;
  for (std::size_t step = 0; step < n_tokens; ++step)
  {
    const Matrix logits = forward(model, tokens);
    const auto last = logits.row(logits.rows() - 1);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < last.size(); ++i)
      if (last[i] > last[argmax])
        argmax = i;
    tokens.push_back(static_cast<int>(argmax));
  }
  return tokens;
}

std::map<std::string, CalibrationSet> capture_calibration(const Model &model,
                                                          const std::vector<int> &corpus,
                                                          std::size_t n_samples,
                                                          uint64_t sample_seed)
{
  if (corpus.empty())
    throw std::invalid_argument("capture_calibration: empty corpus");
  if (n_samples < 1)
    throw std::invalid_argument("capture_calibration: n_samples must be >= 1");

  std::map<std::string, std::vector<std::vector<float>>> rows;
  CaptureHook hook = [&](const std::string &layer, const Matrix &input) {
    auto &dst = rows[layer];
    for (std::size_t r = 0; r < input.rows(); ++r)
    {
      const auto row = input.row(r);
      dst.emplace_back(row.begin(), row.end());
    }
  };

  const std::size_t window = model.config.max_seq_len;
  for (std::size_t start = 0; start < corpus.size(); start += window)
  {
    const std::size_t len = std::min(window, corpus.size() - start);
    const std::span<const int> tokens(corpus.data() + start, len);
    forward(model, tokens, &hook);
  }

  std::map<std::string, CalibrationSet> out;
  for (auto &[name, captured] : rows)
  {
    std::vector<std::size_t> keep(captured.size());
    std::iota(keep.begin(), keep.end(), 0);
    if (captured.size() > n_samples)
    {
      // Seeded partial Fisher-Yates, then ascending order for stable row layout.
      for (std::size_t i = 0; i < n_samples; ++i)
      {
        const std::size_t j = i + split_mix_at(sample_seed, i) % (keep.size() - i);
        std::swap(keep[i], keep[j]);
      }
      keep.resize(n_samples);
      std::sort(keep.begin(), keep.end());
    }
    Matrix samples(keep.size(), captured[0].size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      std::copy(captured[keep[i]].begin(), captured[keep[i]].end(), samples.row(i).begin());
    out.emplace(name, CalibrationSet{std::move(samples)});
  }
  return out;
}

QuantizeModelResult quantize_model(const Model &model,
                                   const std::map<std::string, CalibrationSet> &calib,
                                   const QuantConfig &config)
{
  config.validate();
  QuantizeModelResult result;
  result.model = model;

  const bool needs_calib = config.method != Method::RTN;
  for (auto [name, layer] : result.model.projection_layers())
  {
    const Matrix &w = layer->dense();
    const CalibrationSet *cs = nullptr;
    if (needs_calib)
    {
      auto it = calib.find(name);
      if (it == calib.end())
        throw QuantError(QuantErrorKind::EmptyCalibration,
                         "no calibration captured for layer " + name);
      cs = &it->second;
    }

    QuantizedTensor qt;
    std::optional<ChannelScales> gsq_scales;
    switch (config.method)
    {
      case Method::RTN:
        qt = quantize_rtn(w, config);
        break;
      case Method::GSQ:
      {
        auto [q, sc] = gsq_quantize(w, *cs, config);
        qt = std::move(q);
        gsq_scales = std::move(sc);
        break;
      }
      case Method::GPTQ:
      {
        const Hessian h = build_hessian(*cs, config.hessian_damping);
        qt = gptq_quantize(w, h, config);
        break;
      }
    }

    // Weight-space reconstruction error against the original weights, with GSQ
    // column scales folded back out.
    Matrix w_eff = dequantize(qt);
    if (gsq_scales)
      for (std::size_t r = 0; r < w_eff.rows(); ++r)
        for (std::size_t c = 0; c < w_eff.cols(); ++c)
          w_eff.at(r, c) /= gsq_scales->per_channel[c];
    double sse = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
    {
      const double d = static_cast<double>(w.data()[i]) - static_cast<double>(w_eff.data()[i]);
      sse += d * d;
    }
    result.per_layer_mse[name] = sse / static_cast<double>(w.size());

    layer->weights = std::move(qt);
    layer->gsq_scales = std::move(gsq_scales);
  }
  return result;
}

Model dequantize_model(const Model &model)
{
  Model out = model;
  for (auto [name, layer] : out.projection_layers())
  {
    if (!layer->is_quantized())
      continue;
    Matrix w = dequantize(layer->quantized());
    if (layer->gsq_scales)
      for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c)
          w.at(r, c) /= layer->gsq_scales->per_channel[c];
    layer->weights = std::move(w);
    layer->gsq_scales.reset();
  }
  return out;
}

namespace
{

Matrix vector_as_row(const std::vector<float> &v) { return Matrix(1, v.size(), v); }

std::vector<float> row_as_vector(const Matrix &m, const std::string &name, std::size_t want)
{
  if (m.rows() != 1 || m.cols() != want)
    throw TensorFileError("expected 1x" + std::to_string(want) + " vector entry: " + name);
  return m.data();
}

void check_dims(const TensorEntry &e, std::size_t rows, std::size_t cols)
{
  const std::size_t r = e.is_quantized() ? e.quantized().rows : e.matrix().rows();
  const std::size_t c = e.is_quantized() ? e.quantized().cols : e.matrix().cols();
  if (r != rows || c != cols)
    throw TensorFileError("entry " + e.name + " has shape " + std::to_string(r) + "x" +
                          std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
}

} // namespace

TensorFile model_to_tensor_file(const Model &model)
{
  const auto &cfg = model.config;
  TensorFile tf;

  // Shape header so the loader can rebuild the architecture. The build seed is
  // provenance, not state, and is deliberately not stored.
  tf.add("config", Matrix(1, 6,
                          {static_cast<float>(cfg.vocab), static_cast<float>(cfg.d_model),
                           static_cast<float>(cfg.n_layers), static_cast<float>(cfg.n_heads),
                           static_cast<float>(cfg.d_ff), static_cast<float>(cfg.max_seq_len)}));
  tf.add("tok_embed", model.tok_embed);
  tf.add("pos_embed", model.pos_embed);

  for (std::size_t b = 0; b < model.blocks.size(); ++b)
  {
    const TransformerBlock &blk = model.blocks[b];
    const std::string p = block_prefix(b);
    tf.add(p + "ln1.gain", vector_as_row(blk.ln1_gain));
    tf.add(p + "ln1.bias", vector_as_row(blk.ln1_bias));
    tf.add(p + "ln2.gain", vector_as_row(blk.ln2_gain));
    tf.add(p + "ln2.bias", vector_as_row(blk.ln2_bias));
  }

  for (auto [name, layer] : model.projection_layers())
  {
    if (layer->is_quantized())
    {
      tf.add(name, layer->quantized());
      if (layer->gsq_scales)
      {
        tf.add(name + ".gsq_scales", vector_as_row(layer->gsq_scales->per_channel));
        tf.add(name + ".gsq_alpha", Matrix(1, 1, {layer->gsq_scales->alpha}));
      }
    }
    else
    {
      tf.add(name, layer->dense());
    }
  }

  tf.add("ln_f.gain", vector_as_row(model.ln_f_gain));
  tf.add("ln_f.bias", vector_as_row(model.ln_f_bias));
  tf.add("lm_head", model.lm_head);
  return tf;
}

Model model_from_tensor_file(const TensorFile &tf)
{
  const Matrix &c = tf.get("config").matrix();
  if (c.rows() != 1 || c.cols() != 6)
    throw TensorFileError("malformed config entry");

  ToyTransformerConfig cfg;
  cfg.vocab = static_cast<std::size_t>(c.at(0, 0));
  cfg.d_model = static_cast<std::size_t>(c.at(0, 1));
  cfg.n_layers = static_cast<std::size_t>(c.at(0, 2));
  cfg.n_heads = static_cast<std::size_t>(c.at(0, 3));
  cfg.d_ff = static_cast<std::size_t>(c.at(0, 4));
  cfg.max_seq_len = static_cast<std::size_t>(c.at(0, 5));
  cfg.seed = 0; // not stored; weights are the state
  cfg.validate();

  Model m;
  m.config = cfg;
  check_dims(tf.get("tok_embed"), cfg.vocab, cfg.d_model);
  check_dims(tf.get("pos_embed"), cfg.max_seq_len, cfg.d_model);
  m.tok_embed = tf.get("tok_embed").matrix();
  m.pos_embed = tf.get("pos_embed").matrix();
  m.blocks.resize(cfg.n_layers);
  for (std::size_t b = 0; b < cfg.n_layers; ++b)
  {
    const std::string p = block_prefix(b);
    TransformerBlock &blk = m.blocks[b];
    blk.ln1_gain = row_as_vector(tf.get(p + "ln1.gain").matrix(), p + "ln1.gain", cfg.d_model);
    blk.ln1_bias = row_as_vector(tf.get(p + "ln1.bias").matrix(), p + "ln1.bias", cfg.d_model);
    blk.ln2_gain = row_as_vector(tf.get(p + "ln2.gain").matrix(), p + "ln2.gain", cfg.d_model);
    blk.ln2_bias = row_as_vector(tf.get(p + "ln2.bias").matrix(), p + "ln2.bias", cfg.d_model);
  }

  for (auto [name, layer] : m.projection_layers())
  {
    const TensorEntry &e = tf.get(name);
    const bool is_fc1 = name.find("ffn.fc1") != std::string::npos;
    const bool is_fc2 = name.find("ffn.fc2") != std::string::npos;
    const std::size_t out = is_fc1 ? cfg.d_ff : cfg.d_model;
    const std::size_t in = is_fc2 ? cfg.d_ff : cfg.d_model;
    check_dims(e, out, in);
    layer->name = name;
    if (e.is_quantized())
    {
      layer->weights = e.quantized();
      if (const TensorEntry *s = tf.find(name + ".gsq_scales"))
      {
        ChannelScales cs;
        cs.per_channel = row_as_vector(s->matrix(), name + ".gsq_scales", in);
        for (float v : cs.per_channel)
          if (!(v > 0.0f))
            throw TensorFileError("non-positive channel scale in " + name + ".gsq_scales");
        cs.alpha = tf.get(name + ".gsq_alpha").matrix().at(0, 0);
        layer->gsq_scales = std::move(cs);
      }
    }
    else
    {
      layer->weights = e.matrix();
    }
  }

  m.ln_f_gain = row_as_vector(tf.get("ln_f.gain").matrix(), "ln_f.gain", cfg.d_model);
  m.ln_f_bias = row_as_vector(tf.get("ln_f.bias").matrix(), "ln_f.bias", cfg.d_model);
  check_dims(tf.get("lm_head"), cfg.vocab, cfg.d_model);
  m.lm_head = tf.get("lm_head").matrix();
  return m;
}

} // namespace nf4
