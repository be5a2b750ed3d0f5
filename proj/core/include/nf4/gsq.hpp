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

#ifndef NF4_GSQ_HPP
#define NF4_GSQ_HPP

#include "nf4/matrix.hpp"
#include "nf4/quant.hpp"

#include <vector>

namespace nf4
{

/// Captured layer-input activation rows; one row per observed sample. For a layer
/// computing y = x * W^T the row width must equal W.cols.
struct CalibrationSet
{
  Matrix samples;

  std::size_t n_samples() const { return samples.rows(); }
  std::size_t in_features() const { return samples.cols(); }
};

/// Per-input-channel multipliers s_j = (importance_j / geomean)^alpha, geometric
/// mean 1 by construction. Inference applies x/s to compensate; the quantized
/// weights carry W*s column-wise.
struct ChannelScales
{
  float alpha = 0.0f;
  std::vector<float> per_channel;
};

/// importance[j] = mean over samples of |x_j|, floored at 1e-8 so the exponent
/// search below never sees a zero.
std::vector<float> channel_importance(const CalibrationSet &calib);

/// Grid-search the scaling exponent: for each alpha, scale columns, quantize,
/// score the calibration output error, keep the argmin. Ties break toward the
/// smaller alpha, so alpha = 0 (plain RTN) is never beaten by an equal score.
ChannelScales search_alpha(const Matrix &w, const CalibrationSet &calib,
                           const QuantConfig &config);

/// Activation-aware group quantization: search alpha, fold the winning scales
/// into the weights, group-quantize. The returned pair fully determines the
/// effective dequantized weights (column j of dequantize(qt) divided by s_j).
std::pair<QuantizedTensor, ChannelScales> gsq_quantize(const Matrix &w,
                                                       const CalibrationSet &calib,
                                                       const QuantConfig &config);

/// Column-scaled copy: out[.][j] = w[.][j] * s[j].
Matrix scale_columns(const Matrix &w, const std::vector<float> &s);

/// Mean over calibration rows of ||x*W^T - (x/s)*dequantize(qt)^T||^2. This is the
/// objective search_alpha minimizes; tests score candidates through the same path.
double gsq_output_error(const Matrix &w, const QuantizedTensor &qt, const std::vector<float> &s,
                        const CalibrationSet &calib);

} // namespace nf4

#endif // NF4_GSQ_HPP
