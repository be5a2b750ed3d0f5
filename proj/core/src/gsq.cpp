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

#include "nf4/gsq.hpp"

#include "nf4/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace nf4
{

namespace
{
constexpr double kImportanceFloor = 1e-8;

void check_calib(const Matrix &w, const CalibrationSet &calib)
{
  if (calib.n_samples() < 1)
    throw QuantError(QuantErrorKind::EmptyCalibration, "calibration set has no samples");
  if (calib.in_features() != w.cols())
    throw QuantError(QuantErrorKind::ShapeMismatch,
                     "calibration width does not match weight cols", calib.n_samples(),
                     calib.in_features(), w.cols());
  if (!calib.samples.all_finite())
    throw QuantError(QuantErrorKind::NonFinite, "calibration set contains non-finite values");
}
} // namespace

std::vector<float> channel_importance(const CalibrationSet &calib)
{
  if (calib.n_samples() < 1)
    throw QuantError(QuantErrorKind::EmptyCalibration, "calibration set has no samples");
  const std::size_t n = calib.n_samples();
  const std::size_t k = calib.in_features();
  std::vector<float> importance(k);
  for (std::size_t j = 0; j < k; ++j)
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += std::fabs(static_cast<double>(calib.samples.at(i, j)));
    const double mean = acc / static_cast<double>(n);
    importance[j] = static_cast<float>(mean > kImportanceFloor ? mean : kImportanceFloor);
  }
  return importance;
}

Matrix scale_columns(const Matrix &w, const std::vector<float> &s)
{
  Matrix out(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c)
      out.at(r, c) = w.at(r, c) * s[c];
  return out;
}

double gsq_output_error(const Matrix &w, const QuantizedTensor &qt, const std::vector<float> &s,
                        const CalibrationSet &calib)
{
  const Matrix ref = gemm_f32(calib.samples, w);

  Matrix compensated(calib.n_samples(), calib.in_features());
  for (std::size_t i = 0; i < calib.n_samples(); ++i)
    for (std::size_t j = 0; j < calib.in_features(); ++j)
      compensated.at(i, j) = calib.samples.at(i, j) / s[j];

  const Matrix wq = dequantize(qt);
  const Matrix out = gemm_f32(compensated, wq);

  double sse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
  {
    const double d = static_cast<double>(ref.data()[i]) - static_cast<double>(out.data()[i]);
    sse += d * d;
  }
  return sse / static_cast<double>(calib.n_samples());
}

ChannelScales search_alpha(const Matrix &w, const CalibrationSet &calib, const QuantConfig &config)
{
  check_calib(w, calib);
  if (config.awq_alpha_grid.empty())
    throw std::invalid_argument("search_alpha: alpha grid is empty");

  const std::vector<float> importance = channel_importance(calib);
  const std::size_t k = importance.size();

  std::vector<double> log_imp(k);
  double mean_log = 0.0;
  for (std::size_t j = 0; j < k; ++j)
  {
    log_imp[j] = std::log(static_cast<double>(importance[j]));
    mean_log += log_imp[j];
  }
  mean_log /= static_cast<double>(k);

  std::vector<float> grid = config.awq_alpha_grid;
  std::sort(grid.begin(), grid.end()); // ascending + strict improvement = ties go to smaller alpha

  ChannelScales best;
  double best_err = 0.0;
  bool have_best = false;
  for (float alpha : grid)
  {
    std::vector<float> s(k);
    for (std::size_t j = 0; j < k; ++j)
      s[j] = static_cast<float>(std::exp(static_cast<double>(alpha) * (log_imp[j] - mean_log)));

    const Matrix scaled = scale_columns(w, s);
    const QuantizedTensor qt = quantize_rtn(scaled, config);
    const double err = gsq_output_error(w, qt, s, calib);
    if (!have_best || err < best_err)
    {
      have_best = true;
      best_err = err;
      best.alpha = alpha;
      best.per_channel = std::move(s);
    }
  }
  return best;
}

std::pair<QuantizedTensor, ChannelScales> gsq_quantize(const Matrix &w,
                                                       const CalibrationSet &calib,
                                                       const QuantConfig &config)
{
  config.validate();
  validate_shape(w, config.group_size);
  const ChannelScales scales = search_alpha(w, calib, config);
  QuantizedTensor qt = quantize_rtn(scale_columns(w, scales.per_channel), config);
  return {std::move(qt), scales};
}

} // namespace nf4
