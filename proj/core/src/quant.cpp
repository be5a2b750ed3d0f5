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

#include "nf4/quant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nf4
{

std::string method_name(Method m)
{
  switch (m)
  {
    case Method::RTN:
      return "rtn";
    case Method::GSQ:
      return "gsq";
    case Method::GPTQ:
      return "gptq";
  }
  return "?";
}

Method method_from_name(const std::string &name)
{
  if (name == "rtn")
    return Method::RTN;
  if (name == "gsq")
    return Method::GSQ;
  if (name == "gptq")
    return Method::GPTQ;
  throw std::invalid_argument("unknown method: " + name);
}

std::vector<float> QuantConfig::default_alpha_grid()
{
  std::vector<float> grid(11);
  for (int i = 0; i <= 10; ++i)
    grid[i] = static_cast<float>(i) / 10.0f;
  return grid;
}

void QuantConfig::validate() const
{
  if (bits != 4)
    throw std::invalid_argument("QuantConfig: only 4-bit quantization is supported");
  if (group_size < 1)
    throw std::invalid_argument("QuantConfig: group_size must be >= 1");
  if (method == Method::GSQ)
  {
    if (awq_alpha_grid.empty())
      throw std::invalid_argument("QuantConfig: alpha grid must be nonempty for GSQ");
    for (float a : awq_alpha_grid)
      if (!(a >= 0.0f && a <= 1.0f))
        throw std::invalid_argument("QuantConfig: alpha grid values must lie in [0,1]");
  }
  if (method == Method::GPTQ && !(hessian_damping > 0.0f))
    throw std::invalid_argument("QuantConfig: hessian damping must be > 0 for GPTQ");
}

std::string QuantError::kind_name(QuantErrorKind kind)
{
  switch (kind)
  {
    case QuantErrorKind::ShapeMismatch:
      return "ShapeMismatch";
    case QuantErrorKind::NonFinite:
      return "NonFinite";
    case QuantErrorKind::EmptyCalibration:
      return "EmptyCalibration";
    case QuantErrorKind::SingularHessian:
      return "SingularHessian";
  }
  return "?";
}

namespace
{
std::string format_error(QuantErrorKind kind, const std::string &detail, std::size_t rows,
                         std::size_t cols, std::size_t group_size)
{
  std::ostringstream os;
  os << QuantError::kind_name(kind);
  if (kind == QuantErrorKind::ShapeMismatch)
    os << "(" << rows << ", " << cols << ", " << group_size << ")";
  if (!detail.empty())
    os << ": " << detail;
  return os.str();
}
} // namespace

QuantError::QuantError(QuantErrorKind kind, std::string detail, std::size_t rows, std::size_t cols,
                       std::size_t group_size)
  : std::runtime_error(format_error(kind, detail, rows, cols, group_size)), _kind(kind),
    _rows(rows), _cols(cols), _group_size(group_size)
{
}

int8_t QuantizedTensor::code_at(std::size_t r, std::size_t c) const
{
  const uint8_t byte = codes[r * row_bytes() + c / 2];
  const uint8_t nib = (c % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
  return static_cast<int8_t>(nib >= 8 ? static_cast<int>(nib) - 16 : static_cast<int>(nib));
}

void validate_shape(const Matrix &m, std::size_t group_size)
{
  if (group_size < 1)
    throw QuantError(QuantErrorKind::ShapeMismatch, "group_size must be >= 1", m.rows(), m.cols(),
                     group_size);
  if (group_size > m.cols() || m.cols() % group_size != 0)
    throw QuantError(QuantErrorKind::ShapeMismatch,
                     "last dimension not divisible by group size", m.rows(), m.cols(), group_size);
  const std::size_t bad = m.first_non_finite();
  if (bad != Matrix::npos)
  {
    std::ostringstream os;
    os << "non-finite value at flat index " << bad << " (row " << bad / m.cols() << ", col "
       << bad % m.cols() << ")";
    throw QuantError(QuantErrorKind::NonFinite, os.str(), m.rows(), m.cols(), group_size);
  }
}

double round_half_even(double x)
{
  const double f = std::floor(x);
  const double frac = x - f;
  if (frac > 0.5)
    return f + 1.0;
  if (frac < 0.5)
    return f;
  return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

namespace detail
{

int8_t quantize_value(float w, float scale)
{
  if (scale == 0.0f)
    return 0;
  const double q = round_half_even(static_cast<double>(w) / static_cast<double>(scale));
  return static_cast<int8_t>(std::clamp(q, -8.0, 7.0));
}

namespace
{
float max_abs(const float *w, std::size_t n)
{
  float m = 0.0f;
  for (std::size_t i = 0; i < n; ++i)
    m = std::max(m, std::fabs(w[i]));
  return m;
}

double group_sse(const float *w, std::size_t n, float scale)
{
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    const float wq = static_cast<float>(quantize_value(w[i], scale)) * scale;
    const double d = static_cast<double>(w[i]) - static_cast<double>(wq);
    sse += d * d;
  }
  return sse;
}
} // namespace

float fit_group_scale(const float *w, std::size_t n, bool clip_search)
{
  const float m = max_abs(w, n);
  if (m == 0.0f)
    return 0.0f;
  const float base = m / 7.0f;
  if (!clip_search)
    return base;
  // Clip grid from the widest fit down; keep the first strict improvement so the
  // unclipped scale wins ties.
  static constexpr float kClipGrid[] = {1.0f, 0.9f, 0.8f, 0.7f};
  float best_scale = base;
  double best_sse = group_sse(w, n, base);
  for (std::size_t i = 1; i < std::size(kClipGrid); ++i)
  {
    const float s = kClipGrid[i] * base;
    const double sse = group_sse(w, n, s);
    if (sse < best_sse)
    {
      best_sse = sse;
      best_scale = s;
    }
  }
  return best_scale;
}

} // namespace detail

std::vector<float> compute_group_scales(const Matrix &m, std::size_t group_size)
{
  validate_shape(m, group_size);
  const std::size_t n_groups = m.cols() / group_size;
  std::vector<float> scales(m.rows() * n_groups);
  for (std::size_t r = 0; r < m.rows(); ++r)
  {
    const float *row = m.row(r).data();
    for (std::size_t g = 0; g < n_groups; ++g)
      scales[r * n_groups + g] = detail::fit_group_scale(row + g * group_size, group_size, false);
  }
  return scales;
}

QuantizedTensor quantize_rtn(const Matrix &m, const QuantConfig &config)
{
  config.validate();
  validate_shape(m, config.group_size);

  const std::size_t gs = config.group_size;
  const std::size_t n_groups = m.cols() / gs;

  QuantizedTensor qt;
  qt.rows = m.rows();
  qt.cols = m.cols();
  qt.group_size = gs;
  qt.scales.resize(m.rows() * n_groups);
  qt.codes.assign(m.rows() * qt.row_bytes(), 0);

  std::vector<int8_t> row_codes(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
  {
    const float *row = m.row(r).data();
    for (std::size_t g = 0; g < n_groups; ++g)
    {
      const float scale = detail::fit_group_scale(row + g * gs, gs, config.clip_search);
      qt.scales[r * n_groups + g] = scale;
      for (std::size_t c = g * gs; c < (g + 1) * gs; ++c)
        row_codes[c] = detail::quantize_value(row[c], scale);
    }
    uint8_t *out = qt.codes.data() + r * qt.row_bytes();
    for (std::size_t c = 0; c < m.cols(); c += 2)
    {
      const uint8_t lo = static_cast<uint8_t>(row_codes[c]) & 0x0F;
      const uint8_t hi =
        (c + 1 < m.cols()) ? (static_cast<uint8_t>(row_codes[c + 1]) & 0x0F) : 0x00;
      out[c / 2] = static_cast<uint8_t>(lo | (hi << 4));
    }
  }
  return qt;
}

Matrix dequantize(const QuantizedTensor &qt)
{
  Matrix m(qt.rows, qt.cols);
  const std::size_t n_groups = qt.groups_per_row();
  for (std::size_t r = 0; r < qt.rows; ++r)
  {
    float *out = m.row(r).data();
    for (std::size_t g = 0; g < n_groups; ++g)
    {
      const float scale = qt.scales[r * n_groups + g];
      for (std::size_t c = g * qt.group_size; c < (g + 1) * qt.group_size; ++c)
        out[c] = static_cast<float>(qt.code_at(r, c)) * scale;
    }
  }
  return m;
}

std::vector<uint8_t> pack_nibbles(const std::vector<int8_t> &codes)
{
  std::vector<uint8_t> bytes((codes.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < codes.size(); ++i)
  {
    if (codes[i] < -8 || codes[i] > 7)
      throw std::out_of_range("pack_nibbles: code outside [-8,7]");
    const uint8_t nib = static_cast<uint8_t>(codes[i]) & 0x0F;
    if (i % 2 == 0)
      bytes[i / 2] = nib;
    else
      bytes[i / 2] |= static_cast<uint8_t>(nib << 4);
  }
  return bytes;
}

std::vector<int8_t> unpack_nibbles(const std::vector<uint8_t> &bytes, std::size_t count)
{
  if (count > bytes.size() * 2)
    throw std::out_of_range("unpack_nibbles: count exceeds packed data");
  std::vector<int8_t> codes(count);
  for (std::size_t i = 0; i < count; ++i)
  {
    const uint8_t nib = (i % 2 == 0) ? (bytes[i / 2] & 0x0F) : (bytes[i / 2] >> 4);
    codes[i] = static_cast<int8_t>(nib >= 8 ? static_cast<int>(nib) - 16 : static_cast<int>(nib));
  }
  return codes;
}

double reconstruction_mse(const Matrix &w, const QuantizedTensor &qt)
{
  if (w.rows() != qt.rows || w.cols() != qt.cols)
    throw QuantError(QuantErrorKind::ShapeMismatch, "reconstruction_mse: shape mismatch", w.rows(),
                     w.cols(), qt.group_size);
  const Matrix wq = dequantize(qt);
  double sse = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
  {
    const double d = static_cast<double>(w.data()[i]) - static_cast<double>(wq.data()[i]);
    sse += d * d;
  }
  return sse / static_cast<double>(w.size());
}

} // namespace nf4
