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

#include "nf4/gptq.hpp"

#include "nf4/kernels.hpp"

#include <cmath>

namespace nf4
{

namespace
{

// In-place lower Cholesky of a symmetric matrix. Returns false if not positive
// definite (or non-finite).
bool cholesky_lower(std::vector<double> &a, std::size_t d)
{
  for (std::size_t i = 0; i < d; ++i)
  {
    for (std::size_t j = 0; j <= i; ++j)
    {
      double sum = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k)
        sum -= a[i * d + k] * a[j * d + k];
      if (i == j)
      {
        if (!(sum > 0.0) || !std::isfinite(sum))
          return false;
        a[i * d + i] = std::sqrt(sum);
      }
      else
      {
        a[i * d + j] = sum / a[j * d + j];
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      a[i * d + j] = 0.0;
  return true;
}

// H^-1 from the lower factor L of H: solve L y = e_i, then L^T x = y.
std::vector<double> invert_from_cholesky(const std::vector<double> &l, std::size_t d)
{
  std::vector<double> inv(d * d, 0.0);
  std::vector<double> y(d), x(d);
  for (std::size_t col = 0; col < d; ++col)
  {
    for (std::size_t i = 0; i < d; ++i)
    {
      double sum = (i == col) ? 1.0 : 0.0;
      for (std::size_t k = 0; k < i; ++k)
        sum -= l[i * d + k] * y[k];
      y[i] = sum / l[i * d + i];
    }
    for (std::size_t ii = d; ii-- > 0;)
    {
      double sum = y[ii];
      for (std::size_t k = ii + 1; k < d; ++k)
        sum -= l[k * d + ii] * x[k];
      x[ii] = sum / l[ii * d + ii];
    }
    for (std::size_t i = 0; i < d; ++i)
      inv[i * d + col] = x[i];
  }
  return inv;
}

// Upper Cholesky factor U of H^-1 (H^-1 = U^T U). Row j of U carries exactly the
// sequential-subproblem quantities the column loop needs: the ratio
// U[j][k]/U[j][j] equals [H_F^-1]_jk / [H_F^-1]_jj of the remaining subproblem.
std::vector<double> inverse_upper_cholesky(const Hessian &h)
{
  const std::size_t d = h.dim;
  std::vector<double> work = h.matrix;
  if (!cholesky_lower(work, d))
    throw QuantError(QuantErrorKind::SingularHessian,
                     "Hessian is not positive definite (Cholesky failed)", d, d, 0);
  std::vector<double> inv = invert_from_cholesky(work, d);
  if (!cholesky_lower(inv, d))
    throw QuantError(QuantErrorKind::SingularHessian,
                     "inverse Hessian is not positive definite", d, d, 0);
  // Transpose the lower factor of H^-1 into the upper factor U.
  std::vector<double> upper(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      upper[j * d + i] = inv[i * d + j];
  return upper;
}

} // namespace

Hessian Hessian::identity(std::size_t dim)
{
  Hessian h;
  h.dim = dim;
  h.matrix.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    h.matrix[i * dim + i] = 1.0;
  return h;
}

Hessian build_hessian(const CalibrationSet &calib, float damping)
{
  if (calib.n_samples() < 1)
    throw QuantError(QuantErrorKind::EmptyCalibration, "calibration set has no samples");
  if (!(damping > 0.0f))
    throw std::invalid_argument("build_hessian: damping must be > 0");
  if (!calib.samples.all_finite())
    throw QuantError(QuantErrorKind::NonFinite, "calibration set contains non-finite values");

  const std::size_t n = calib.n_samples();
  const std::size_t d = calib.in_features();

  Hessian h;
  h.dim = d;
  h.matrix.assign(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
  {
    for (std::size_t b = a; b < d; ++b)
    {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(calib.samples.at(i, a)) *
               static_cast<double>(calib.samples.at(i, b));
      const double v = 2.0 * acc / static_cast<double>(n);
      h.matrix[a * d + b] = v;
      h.matrix[b * d + a] = v;
    }
  }

  double diag_mean = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    diag_mean += h.at(i, i);
  diag_mean /= static_cast<double>(d);
  const double damp = static_cast<double>(damping) * diag_mean;
  h.damping_applied = damp;

  for (std::size_t i = 0; i < d; ++i)
  {
    if (h.at(i, i) == 0.0) // dead channel: floor before the uniform damping add
      h.matrix[i * d + i] = damp;
    h.matrix[i * d + i] += damp;
  }

  // Contract check: the damped Hessian must factor.
  std::vector<double> probe = h.matrix;
  if (!cholesky_lower(probe, d))
    throw QuantError(QuantErrorKind::SingularHessian,
                     "Hessian singular after damping (degenerate calibration)", d, d, 0);
  return h;
}

QuantizedTensor gptq_quantize(const Matrix &w, const Hessian &hessian, const QuantConfig &config)
{
  config.validate();
  validate_shape(w, config.group_size);
  if (hessian.dim != w.cols())
    throw QuantError(QuantErrorKind::ShapeMismatch, "Hessian dim does not match weight cols",
                     w.rows(), w.cols(), hessian.dim);

  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  const std::size_t gs = config.group_size;
  const std::size_t n_groups = cols / gs;

  const std::vector<double> u = inverse_upper_cholesky(hessian); // H^-1 = U^T U

  QuantizedTensor qt;
  qt.rows = rows;
  qt.cols = cols;
  qt.group_size = gs;
  qt.scales.resize(rows * n_groups);
  qt.codes.assign(rows * qt.row_bytes(), 0);

  Matrix work = w; // compensated working copy, FP32 like the quantizer sees
  std::vector<int8_t> col_codes(rows);

  for (std::size_t j = 0; j < cols; ++j)
  {
    if (j % gs == 0)
    {
      // Refit this group's scales from the current compensated weights.
      const std::size_t g = j / gs;
      for (std::size_t r = 0; r < rows; ++r)
        qt.scales[r * n_groups + g] =
          detail::fit_group_scale(work.row(r).data() + j, gs, config.clip_search);
    }
    const std::size_t g = j / gs;
    const double d_jj = u[j * cols + j];
    for (std::size_t r = 0; r < rows; ++r)
    {
      const float scale = qt.scales[r * n_groups + g];
      const float wv = work.at(r, j);
      const int8_t code = detail::quantize_value(wv, scale);
      col_codes[r] = code;
      const float wq = static_cast<float>(code) * scale;
      const double err = (static_cast<double>(wv) - static_cast<double>(wq)) / d_jj;
      for (std::size_t k = j + 1; k < cols; ++k)
        work.at(r, k) =
          static_cast<float>(static_cast<double>(work.at(r, k)) - err * u[j * cols + k]);
    }
    for (std::size_t r = 0; r < rows; ++r)
    {
      const uint8_t nib = static_cast<uint8_t>(col_codes[r]) & 0x0F;
      uint8_t &byte = qt.codes[r * qt.row_bytes() + j / 2];
      if (j % 2 == 0)
        byte = static_cast<uint8_t>((byte & 0xF0) | nib);
      else
        byte = static_cast<uint8_t>((byte & 0x0F) | (nib << 4));
    }
  }
  return qt;
}

double layer_output_error(const Matrix &w, const Matrix &w_hat, const CalibrationSet &calib)
{
  if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols())
    throw QuantError(QuantErrorKind::ShapeMismatch, "layer_output_error: weight shapes disagree",
                     w_hat.rows(), w_hat.cols(), 0);
  if (calib.in_features() != w.cols())
    throw QuantError(QuantErrorKind::ShapeMismatch,
                     "layer_output_error: calibration width mismatch", calib.n_samples(),
                     calib.in_features(), 0);
  const Matrix ref = gemm_f32(calib.samples, w);
  const Matrix out = gemm_f32(calib.samples, w_hat);
  double sse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
  {
    const double d = static_cast<double>(ref.data()[i]) - static_cast<double>(out.data()[i]);
    sse += d * d;
  }
  return sse / static_cast<double>(calib.n_samples());
}

} // namespace nf4
