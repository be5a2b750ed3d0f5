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

#include "nf4/prng.hpp"

#include <stdexcept>

namespace nf4
{

namespace
{
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;
} // namespace

uint64_t mix64(uint64_t x)
{
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

uint64_t split_mix_at(uint64_t seed, uint64_t index) { return mix64(seed + (index + 1) * kGamma); }

double uniform01(uint64_t seed, uint64_t index)
{
  return static_cast<double>(split_mix_at(seed, index) >> 11) * 0x1.0p-53;
}

Matrix seeded_random_matrix(std::size_t rows, std::size_t cols, uint64_t seed, Distribution dist,
                            float sigma)
{
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("seeded_random_matrix: rows and cols must be >= 1");

  Matrix m(rows, cols);
  const uint64_t n = static_cast<uint64_t>(rows) * cols;
  for (uint64_t e = 0; e < n; ++e)
  {
    double v;
    if (dist == Distribution::Uniform)
    {
      v = 2.0 * uniform01(seed, e) - 1.0;
    }
    else
    {
      // Irwin-Hall: 12 uniforms sum to mean 6, variance 1. Uses only adds, so the
      // value is identical on every IEEE platform (no libm involved).
      double s = 0.0;
      for (uint64_t k = 0; k < 12; ++k)
        s += uniform01(seed, e * 12 + k);
      v = (s - 6.0) * static_cast<double>(sigma);
    }
    m.data()[e] = static_cast<float>(v);
  }
  return m;
}

} // namespace nf4
