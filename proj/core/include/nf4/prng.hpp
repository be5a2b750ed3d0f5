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

#ifndef NF4_PRNG_HPP
#define NF4_PRNG_HPP

#include "nf4/matrix.hpp"

#include <cstdint>

namespace nf4
{

// Counter-based SplitMix64. Draw i of stream `seed` is mix64(seed + (i+1)*GAMMA),
// so any draw is addressable without sequencing state. Documented in docs/format.md;
// every seeded fixture in the project depends on this exact generator.

/// SplitMix64 finalizer.
uint64_t mix64(uint64_t x);

/// Draw `index` of the stream identified by `seed`.
uint64_t split_mix_at(uint64_t seed, uint64_t index);

/// Uniform double in [0,1), 53 mantissa bits of draw `index`.
double uniform01(uint64_t seed, uint64_t index);

enum class Distribution
{
  Uniform,  // uniform on [-1, 1]
  Gaussian, // N(0, sigma^2), sum-of-12-uniforms (Irwin-Hall), exact in IEEE arithmetic
};

/// Deterministic seeded matrix. Element (r,c) depends only on (rows, cols, seed,
/// distribution), never on evaluation order.
Matrix seeded_random_matrix(std::size_t rows, std::size_t cols, uint64_t seed,
                            Distribution dist = Distribution::Uniform, float sigma = 1.0f);

} // namespace nf4

#endif // NF4_PRNG_HPP
