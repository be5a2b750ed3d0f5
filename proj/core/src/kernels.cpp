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

namespace nf4
{

std::size_t LinearLayer::out_features() const
{
  return is_quantized() ? quantized().rows : dense().rows();
}

std::size_t LinearLayer::in_features() const
{
  return is_quantized() ? quantized().cols : dense().cols();
}

Matrix gemm_f32(const Matrix &x, const Matrix &w)
{
  if (x.cols() != w.cols())
    throw QuantError(QuantErrorKind::ShapeMismatch, "gemm_f32: inner dimensions disagree",
                     x.cols(), w.cols(), 0);
  const std::size_t n = x.rows(), m = w.rows(), k = x.cols();
  Matrix y(n, m);
  for (std::size_t i = 0; i < n; ++i)
  {
    const float *xi = x.row(i).data();
    for (std::size_t j = 0; j < m; ++j)
    {
      const float *wj = w.row(j).data();
      float acc = 0.0f;
      for (std::size_t t = 0; t < k; ++t)
        acc += xi[t] * wj[t];
      y.at(i, j) = acc;
    }
  }
  return y;
}

Matrix gemm_q4(const Matrix &x, const LinearLayer &layer)
{
  const QuantizedTensor &qt = layer.quantized();
  if (x.cols() != qt.cols)
    throw QuantError(QuantErrorKind::ShapeMismatch, "gemm_q4: inner dimensions disagree", x.cols(),
                     qt.cols, qt.group_size);
  if (layer.gsq_scales && layer.gsq_scales->per_channel.size() != qt.cols)
    throw QuantError(QuantErrorKind::ShapeMismatch, "gemm_q4: channel scale length mismatch",
                     layer.gsq_scales->per_channel.size(), qt.cols, qt.group_size);

  const std::size_t n = x.rows(), m = qt.rows, k = qt.cols;
  const std::size_t gs = qt.group_size;
  const std::size_t n_groups = qt.groups_per_row();

  // Compensated activations are activation-side memory; the weight side only ever
  // sees one unpacked group at a time.
  Matrix xc(n, k);
  if (layer.gsq_scales)
  {
    const std::vector<float> &s = layer.gsq_scales->per_channel;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < k; ++t)
        xc.at(i, t) = x.at(i, t) / s[t];
  }
  else
  {
    xc = x;
  }

  // One weight row is unpacked at a time; accumulation runs in the same
  // sequential-t order as the reference path, so the fused result matches
  // dequantize-then-gemm exactly, not just within tolerance.
  Matrix y(n, m);
  std::vector<float> row_buf(k);
  for (std::size_t j = 0; j < m; ++j)
  {
    const uint8_t *row_codes = qt.codes.data() + j * qt.row_bytes();
    for (std::size_t g = 0; g < n_groups; ++g)
    {
      const float scale = qt.scales[j * n_groups + g];
      for (std::size_t c = g * gs; c < (g + 1) * gs; ++c)
      {
        const uint8_t byte = row_codes[c / 2];
        const uint8_t nib = (c % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
        const int code = nib >= 8 ? static_cast<int>(nib) - 16 : static_cast<int>(nib);
        row_buf[c] = static_cast<float>(code) * scale;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      const float *xi = xc.row(i).data();
      float acc = 0.0f;
      for (std::size_t t = 0; t < k; ++t)
        acc += xi[t] * row_buf[t];
      y.at(i, j) = layer.bias ? acc + (*layer.bias)[j] : acc;
    }
  }
  return y;
}

Matrix linear_forward(const Matrix &x, const LinearLayer &layer)
{
  if (layer.is_quantized())
    return gemm_q4(x, layer);
  Matrix y = gemm_f32(x, layer.dense());
  if (layer.bias)
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < y.cols(); ++j)
        y.at(i, j) += (*layer.bias)[j];
  return y;
}

std::size_t gemm_q4_workspace_bytes(const QuantizedTensor &qt)
{
  return qt.cols * sizeof(float); // the row-groups unpack buffer
}

} // namespace nf4
