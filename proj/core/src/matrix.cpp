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

#include "nf4/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace nf4
{

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
  : _rows(rows), _cols(cols), _data(std::move(data))
{
  if (_data.size() != _rows * _cols)
    throw std::invalid_argument("Matrix: data length does not match rows*cols");
}

bool Matrix::all_finite() const { return first_non_finite() == npos; }

std::size_t Matrix::first_non_finite() const
{
  for (std::size_t i = 0; i < _data.size(); ++i)
    if (!std::isfinite(_data[i]))
      return i;
  return npos;
}

} // namespace nf4
