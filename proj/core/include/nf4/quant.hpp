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

#ifndef NF4_QUANT_HPP
#define NF4_QUANT_HPP

#include "nf4/matrix.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nf4
{

enum class Method
{
  RTN,
  GSQ,
  GPTQ,
};

std::string method_name(Method m);
Method method_from_name(const std::string &name);

/// Knobs shared by all three quantizers. Bit width is fixed at 4.
struct QuantConfig
{
  Method method = Method::RTN;
  int bits = 4;
  std::size_t group_size = 16;
  std::vector<float> awq_alpha_grid = default_alpha_grid(); // GSQ only
  float hessian_damping = 0.01f;                            // GPTQ only
  bool clip_search = false;

  static std::vector<float> default_alpha_grid();
  void validate() const; // throws std::invalid_argument
};

enum class QuantErrorKind
{
  ShapeMismatch,
  NonFinite,
  EmptyCalibration,
  SingularHessian,
};

/// Domain error for quantization contract violations. ShapeMismatch carries the
/// offending (rows, cols, group_size) so callers can print them verbatim.
class QuantError : public std::runtime_error
{
public:
  QuantError(QuantErrorKind kind, std::string detail, std::size_t rows = 0, std::size_t cols = 0,
             std::size_t group_size = 0);

  QuantErrorKind kind() const { return _kind; }
  std::size_t rows() const { return _rows; }
  std::size_t cols() const { return _cols; }
  std::size_t group_size() const { return _group_size; }

  static std::string kind_name(QuantErrorKind kind);

private:
  QuantErrorKind _kind;
  std::size_t _rows, _cols, _group_size;
};

/// Nibble-packed INT4 codes plus per-(row, column-group) FP32 scales.
/// Codes are signed two's-complement nibbles in [-8,7]; within a byte the low
/// nibble holds the even column index. Rows are packed independently; a row with
/// an odd column count is padded with one zero nibble.
struct QuantizedTensor
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t group_size = 0;
  std::vector<uint8_t> codes;  // rows * ceil(cols/2) bytes
  std::vector<float> scales;   // rows * (cols/group_size), row-major

  std::size_t groups_per_row() const { return group_size ? cols / group_size : 0; }
  std::size_t row_bytes() const { return (cols + 1) / 2; }

  float scale_at(std::size_t r, std::size_t g) const { return scales[r * groups_per_row() + g]; }
  /// Unpacked signed code at (r, c).
  int8_t code_at(std::size_t r, std::size_t c) const;

  /// Analytic byte accounting for the packed representation.
  std::size_t code_bytes() const { return codes.size(); }
  std::size_t scale_bytes() const { return scales.size() * sizeof(float); }

  bool operator==(const QuantizedTensor &other) const = default;
};

/// Rejects matrices whose last dimension is not divisible by the group size, and
/// matrices with non-finite values. Every quantization entry point calls this first.
void validate_shape(const Matrix &m, std::size_t group_size);

/// scale = max|w| / 7 per (row, group); an all-zero group stores scale 0.
std::vector<float> compute_group_scales(const Matrix &m, std::size_t group_size);

/// Round-to-nearest INT4 quantization: code = clamp(round_half_even(w/scale), -8, 7).
QuantizedTensor quantize_rtn(const Matrix &m, const QuantConfig &config);

/// Elementwise code * scale. Exact FP32 multiplication.
Matrix dequantize(const QuantizedTensor &qt);

/// Two's-complement nibble packing, low nibble first. Codes must lie in [-8,7].
std::vector<uint8_t> pack_nibbles(const std::vector<int8_t> &codes);
std::vector<int8_t> unpack_nibbles(const std::vector<uint8_t> &bytes, std::size_t count);

/// Mean squared error between `w` and dequantize(qt).
double reconstruction_mse(const Matrix &w, const QuantizedTensor &qt);

/// Deterministic round-half-to-even, independent of the fenv rounding mode.
double round_half_even(double x);

namespace detail
{
/// Group scale for `n` values starting at `w`, optionally clip-searched.
float fit_group_scale(const float *w, std::size_t n, bool clip_search);
/// Quantize one value against a group scale.
int8_t quantize_value(float w, float scale);
} // namespace detail

} // namespace nf4

#endif // NF4_QUANT_HPP
