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

#ifndef NF4_MATRIX_HPP
#define NF4_MATRIX_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nf4
{

/// Dense 2-D FP32 tensor, row-major.
class Matrix
{
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : _rows(rows), _cols(cols), _data(rows * cols, 0.0f) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const { return _rows; }
  std::size_t cols() const { return _cols; }
  std::size_t size() const { return _data.size(); }

  float &at(std::size_t r, std::size_t c) { return _data[r * _cols + c]; }
  float at(std::size_t r, std::size_t c) const { return _data[r * _cols + c]; }

  std::span<float> row(std::size_t r) { return {_data.data() + r * _cols, _cols}; }
  std::span<const float> row(std::size_t r) const { return {_data.data() + r * _cols, _cols}; }

  std::vector<float> &data() { return _data; }
  const std::vector<float> &data() const { return _data; }

  /// True if every element is finite (no NaN/Inf).
  bool all_finite() const;
  /// Flat index of the first non-finite element, or npos.
  std::size_t first_non_finite() const;

  bool operator==(const Matrix &other) const = default;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::size_t _rows = 0;
  std::size_t _cols = 0;
  std::vector<float> _data;
};

} // namespace nf4

#endif // NF4_MATRIX_HPP
