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

#ifndef NF4_KERNELS_HPP
#define NF4_KERNELS_HPP

#include "nf4/gsq.hpp"
#include "nf4/matrix.hpp"
#include "nf4/quant.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace nf4
{

/// Linear layer y = x * W^T (+ bias). Weights are out_features x in_features,
/// either dense FP32 or packed Q4; quantized GSQ layers carry the channel scales
/// the kernel compensates with (x / s).
struct LinearLayer
{
  std::string name;
  std::variant<Matrix, QuantizedTensor> weights;
  std::optional<ChannelScales> gsq_scales;
  std::optional<std::vector<float>> bias;

  bool is_quantized() const { return std::holds_alternative<QuantizedTensor>(weights); }
  const Matrix &dense() const { return std::get<Matrix>(weights); }
  const QuantizedTensor &quantized() const { return std::get<QuantizedTensor>(weights); }

  std::size_t out_features() const;
  std::size_t in_features() const;
};

/// Reference FP32 GEMM: Y[i][j] = sum_t X[i][t] * W[j][t], FP32 accumulation in
/// sequential t order. This is the oracle every fused path is measured against.
Matrix gemm_f32(const Matrix &x, const Matrix &w);

/// Dequantize-on-the-fly GEMM over packed INT4. Unpacks one weight row's groups
/// at a time; the full FP32 weight matrix is never materialized. If the layer
/// carries GSQ channel scales the kernel applies the x/s compensation itself.
Matrix gemm_q4(const Matrix &x, const LinearLayer &layer);

/// Dispatch on the layer's storage: gemm_f32 for dense weights, gemm_q4 for Q4.
Matrix linear_forward(const Matrix &x, const LinearLayer &layer);

/// Scratch bytes gemm_q4 needs beyond the packed tensor itself (one row's
/// unpack buffer). Used by the memory accounting in bench.
std::size_t gemm_q4_workspace_bytes(const QuantizedTensor &qt);

} // namespace nf4

#endif // NF4_KERNELS_HPP
