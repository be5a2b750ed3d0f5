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

#ifndef NF4_MODEL_HPP
#define NF4_MODEL_HPP

#include "nf4/gptq.hpp"
#include "nf4/gsq.hpp"
#include "nf4/kernels.hpp"
#include "nf4/matrix.hpp"
#include "nf4/quant.hpp"
#include "nf4/tensor_file.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nf4
{

/// Desk-scale decoder-only transformer. Every quantizable projection has
/// in_features divisible by both 16 and 64 so both studied group sizes apply.
struct ToyTransformerConfig
{
  std::size_t vocab = 64;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t max_seq_len = 512;
  uint64_t seed = 7;

  void validate() const;
};

struct TransformerBlock
{
  std::vector<float> ln1_gain, ln1_bias;
  std::vector<float> ln2_gain, ln2_bias;
  LinearLayer q_proj, k_proj, v_proj, o_proj;
  LinearLayer fc1, fc2;
};

struct Model
{
  ToyTransformerConfig config;
  Matrix tok_embed; // vocab x d_model
  Matrix pos_embed; // max_seq_len x d_model
  std::vector<TransformerBlock> blocks;
  std::vector<float> ln_f_gain, ln_f_bias;
  Matrix lm_head; // vocab x d_model, never quantized

  /// Quantizable projections in canonical order, name -> layer.
  std::vector<std::pair<std::string, LinearLayer *>> projection_layers();
  std::vector<std::pair<std::string, const LinearLayer *>> projection_layers() const;
};

struct EvalResult
{
  double perplexity = 0.0;     // exp(mean next-token NLL)
  double token_accuracy = 0.0; // argmax-match rate
  std::size_t n_tokens = 0;    // predicted positions
};

/// Deterministically seeded parameters; same seed, same bytes.
Model build_model(const ToyTransformerConfig &config);

std::size_t parameter_count(const Model &model);

/// Canonical names of the quantizable projections for a config.
std::vector<std::string> quantizable_layer_names(const ToyTransformerConfig &config);

Model model_from_tensor_file(const TensorFile &tf);
TensorFile model_to_tensor_file(const Model &model);

/// Deterministic Markov-chain symbol sequence over the model vocabulary. Pure
/// integer arithmetic; identical on every platform.
std::vector<int> synthetic_corpus(uint64_t seed, std::size_t length, std::size_t vocab = 64);

using CaptureHook = std::function<void(const std::string &layer, const Matrix &input)>;

/// Full forward pass; returns logits (seq_len x vocab). The hook, when given,
/// receives each quantizable layer's input rows.
Matrix forward(const Model &model, std::span<const int> tokens, const CaptureHook *hook = nullptr);

/// Row-wise softmax (double-precision reductions, FP32 output).
Matrix softmax_rows(const Matrix &logits);

/// NLL/accuracy over one window of logits against next-token targets.
/// `targets[t]` is the true token for logits row t.
void accumulate_eval(const Matrix &logits, std::span<const int> targets, double &sum_nll,
                     std::size_t &correct, std::size_t &count);

/// Teacher-forced evaluation over the corpus, chunked at max_seq_len.
EvalResult evaluate(const Model &model, const std::vector<int> &corpus);

/// Greedy argmax decoding. prompt.size() + n_tokens must fit max_seq_len.
std::vector<int> generate(const Model &model, const std::vector<int> &prompt,
                          std::size_t n_tokens);

/// Run the corpus through the model and capture per-layer input rows, sampled to
/// at most n_samples rows per layer with a fixed sampling seed.
std::map<std::string, CalibrationSet> capture_calibration(const Model &model,
                                                          const std::vector<int> &corpus,
                                                          std::size_t n_samples,
                                                          uint64_t sample_seed = 99);

struct QuantizeModelResult
{
  Model model;
  std::map<std::string, double> per_layer_mse; // original W vs effective dequantized W
};

/// Quantize every projection layer with the configured method. GSQ layers keep
/// their channel scales for inference-time input compensation.
QuantizeModelResult quantize_model(const Model &model,
                                   const std::map<std::string, CalibrationSet> &calib,
                                   const QuantConfig &config);

/// Replace packed layers with their effective dense weights (dequantized, GSQ
/// channel scales folded back out). FP32 reference path for equivalence tests.
Model dequantize_model(const Model &model);

} // namespace nf4

#endif // NF4_MODEL_HPP
