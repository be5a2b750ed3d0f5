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
#include "nf4/quant.hpp"

#include <doctest.h>

#include <cmath>

using namespace nf4;

namespace
{

QuantConfig config_with_group(std::size_t g)
{
  QuantConfig cfg;
  cfg.group_size = g;
  return cfg;
}

// Representable matrix: power-of-two group scales, codes in [-7,7] with at least
// one |code| == 7 per group, so the fitted scale reproduces the construction
// scale exactly and the round trip is bit-exact.
Matrix representable_matrix(std::size_t rows, std::size_t cols, std::size_t group,
                            uint64_t seed)
{
  Matrix m(rows, cols);
  const std::size_t n_groups = cols / group;
  uint64_t draw = 0;
  for (std::size_t r = 0; r < rows; ++r)
  {
    for (std::size_t g = 0; g < n_groups; ++g)
    {
      const int exponent = static_cast<int>(split_mix_at(seed, draw++) % 9) - 6; // 2^-6..2^2
      const float scale = std::ldexp(1.0f, exponent);
      for (std::size_t c = g * group; c < (g + 1) * group; ++c)
      {
        int code = static_cast<int>(split_mix_at(seed, draw++) % 15) - 7; // [-7,7]
        if (c == g * group)
          code = (split_mix_at(seed, draw) % 2 == 0) ? 7 : -7; // pin the group max
        m.at(r, c) = static_cast<float>(code) * scale;
      }
    }
  }
  return m;
}

} // namespace

TEST_CASE("validate_shape rejects a misaligned 256x100 / group-32 case with exact dims")
{
  const Matrix m(256, 100);
  try
  {
    validate_shape(m, 32);
    FAIL("expected ShapeMismatch");
  }
  catch (const QuantError &e)
  {
    CHECK(e.kind() == QuantErrorKind::ShapeMismatch);
    CHECK(e.rows() == 256);
    CHECK(e.cols() == 100);
    CHECK(e.group_size() == 32);
    CHECK(std::string(e.what()).find("ShapeMismatch(256, 100, 32)") != std::string::npos);
  }
}

TEST_CASE("validate_shape accepts divisible group sizes")
{
  const Matrix m(4, 32);
  CHECK_NOTHROW(validate_shape(m, 16));
  const Matrix wide(256, 100);
  for (std::size_t g : {4u, 10u, 20u, 25u, 50u, 100u})
    CHECK_NOTHROW(validate_shape(wide, g));
}

TEST_CASE("validate_shape flags the first non-finite element")
{
  Matrix m(4, 32);
  m.at(1, 3) = std::numeric_limits<float>::quiet_NaN();
  try
  {
    validate_shape(m, 16);
    FAIL("expected NonFinite");
  }
  catch (const QuantError &e)
  {
    CHECK(e.kind() == QuantErrorKind::NonFinite);
    CHECK(std::string(e.what()).find("row 1, col 3") != std::string::npos);
  }
}

TEST_CASE("group scales: max|w|/7, zero for all-zero groups, 1 for constant 7")
{
  CHECK(compute_group_scales(Matrix(1, 4, {-14.0f, 7.0f, 3.5f, 0.0f}), 4)[0] == 2.0f);
  CHECK(compute_group_scales(Matrix(1, 4, {0, 0, 0, 0}), 4)[0] == 0.0f);
  CHECK(compute_group_scales(Matrix(1, 4, {7, 7, 7, 7}), 4)[0] == 1.0f);
}

TEST_CASE("quantize_value: exact multiples, clip boundary, clamping")
{
  // 2.0 against scale 2.0 -> code 1 -> dequantizes to exactly 2.0
  CHECK(detail::quantize_value(2.0f, 2.0f) == 1);
  CHECK(static_cast<float>(detail::quantize_value(2.0f, 2.0f)) * 2.0f == 2.0f);
  // -16 at scale 2 sits exactly on the -8 boundary
  CHECK(detail::quantize_value(-16.0f, 2.0f) == -8);
  CHECK(static_cast<float>(detail::quantize_value(-16.0f, 2.0f)) * 2.0f == -16.0f);
  // past the boundary it clamps silently (GPTQ compensation relies on this)
  CHECK(detail::quantize_value(-20.0f, 2.0f) == -8);
  CHECK(detail::quantize_value(20.0f, 2.0f) == 7);
}

TEST_CASE("round_half_even ties")
{
  CHECK(round_half_even(0.5) == 0.0);
  CHECK(round_half_even(1.5) == 2.0);
  CHECK(round_half_even(2.5) == 2.0);
  CHECK(round_half_even(-0.5) == 0.0);
  CHECK(round_half_even(-1.5) == -2.0);
  CHECK(round_half_even(0.4999) == 0.0);
  CHECK(round_half_even(0.5001) == 1.0);
}

TEST_CASE("hand case: [1,-1,0.4,0.6] at group 4")
{
  const Matrix w(1, 4, {1.0f, -1.0f, 0.4f, 0.6f});
  const QuantizedTensor qt = quantize_rtn(w, config_with_group(4));
  CHECK(qt.scales[0] == 1.0f / 7.0f);
  CHECK(qt.code_at(0, 0) == 7);
  CHECK(qt.code_at(0, 1) == -7);
  CHECK(qt.code_at(0, 2) == 3); // 0.4 * 7 = 2.8 -> 3
  CHECK(qt.code_at(0, 3) == 4); // 0.6 * 7 = 4.2 -> 4

  // MSE oracle from the same hand arithmetic: ((0.4-3/7)^2 + (0.6-4/7)^2) / 4
  const double expected = (std::pow(0.4 - 3.0 / 7.0, 2) + std::pow(0.6 - 4.0 / 7.0, 2)) / 4.0;
  CHECK(reconstruction_mse(w, qt) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("round trip is bit-exact on representable matrices")
{
  for (uint64_t seed = 0; seed < 50; ++seed)
  {
    const std::size_t group = (seed % 2 == 0) ? 16 : 8;
    const Matrix w = representable_matrix(4, 32, group, seed);
    const QuantizedTensor qt = quantize_rtn(w, config_with_group(group));
    const Matrix back = dequantize(qt);
    REQUIRE(back.data() == w.data()); // bitwise
    CHECK(reconstruction_mse(w, qt) == 0.0);
  }
}

TEST_CASE("zero-scale groups dequantize to exact zeros")
{
  Matrix w(2, 8, std::vector<float>(16, 0.0f));
  w.at(0, 4) = 1.0f; // second group of row 0 nonzero
  const QuantizedTensor qt = quantize_rtn(w, config_with_group(4));
  CHECK(qt.scales[0] == 0.0f);
  const Matrix back = dequantize(qt);
  for (std::size_t c = 0; c < 4; ++c)
    CHECK(back.at(0, c) == 0.0f);
  CHECK(back.at(0, 4) == 1.0f);
}

TEST_CASE("per-element error bound: |w - wq| <= scale/2 + 1 ulp for non-clipped")
{
  for (uint64_t seed = 100; seed < 150; ++seed)
  {
    const Matrix w = seeded_random_matrix(8, 16, seed);
    const QuantizedTensor qt = quantize_rtn(w, config_with_group(16));
    const Matrix back = dequantize(qt);
    for (std::size_t r = 0; r < 8; ++r)
    {
      const float scale = qt.scale_at(r, 0);
      for (std::size_t c = 0; c < 16; ++c)
      {
        const bool clipped =
          std::fabs(static_cast<double>(w.at(r, c)) / scale) > 7.0 + 1e-9;
        if (clipped)
          continue;
        const double err = std::fabs(w.at(r, c) - back.at(r, c));
        // ulp at magnitude 8*scale equals ldexp(scale, -20)
        CHECK(err <= 0.5 * scale + std::ldexp(static_cast<double>(scale), -20));
      }
    }
  }
}

TEST_CASE("pack_nibbles encodes low nibble first, two's complement")
{
  CHECK(pack_nibbles({-8, 7}) == std::vector<uint8_t>{0x78});
  CHECK(pack_nibbles({0, 0}) == std::vector<uint8_t>{0x00});
  CHECK(pack_nibbles({7, -8}) == std::vector<uint8_t>{0x87});
  CHECK_THROWS_AS(pack_nibbles({8}), std::out_of_range);
  CHECK_THROWS_AS(pack_nibbles({-9}), std::out_of_range);
}

TEST_CASE("pack/unpack round-trips 1000 random codes, odd counts padded")
{
  std::vector<int8_t> codes(1000);
  for (std::size_t i = 0; i < codes.size(); ++i)
    codes[i] = static_cast<int8_t>(static_cast<int>(split_mix_at(3, i) % 16) - 8);
  CHECK(unpack_nibbles(pack_nibbles(codes), codes.size()) == codes);

  const std::vector<int8_t> odd = {-8, 0, 7};
  const auto packed = pack_nibbles(odd);
  CHECK(packed.size() == 2);
  CHECK(packed[1] == 0x07); // pad nibble is zero
  CHECK(unpack_nibbles(packed, 3) == odd);
}

TEST_CASE("odd column counts round-trip through the packed layout")
{
  // cols = 15, group 5: odd row length exercises the pad nibble.
  const Matrix w = representable_matrix(3, 15, 5, 77);
  const QuantizedTensor qt = quantize_rtn(w, config_with_group(5));
  CHECK(qt.row_bytes() == 8);
  CHECK(dequantize(qt).data() == w.data());
}

TEST_CASE("fitted scales never emit code -8; the slot exists for compensation overflow")
{
  for (uint64_t seed = 900; seed < 950; ++seed)
  {
    const Matrix w = seeded_random_matrix(4, 32, seed);
    const QuantizedTensor qt = quantize_rtn(w, config_with_group(16));
    for (std::size_t r = 0; r < qt.rows; ++r)
      for (std::size_t c = 0; c < qt.cols; ++c)
        CHECK(qt.code_at(r, c) >= -7);
  }
}

TEST_CASE("quantize_rtn is deterministic")
{
  const Matrix w = seeded_random_matrix(16, 64, 9);
  const QuantizedTensor a = quantize_rtn(w, config_with_group(16));
  const QuantizedTensor b = quantize_rtn(w, config_with_group(16));
  CHECK(a == b);
}

TEST_CASE("group refinement: finer groups usually fit better")
{
  int finer_wins_or_ties = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t)
  {
    const Matrix w = seeded_random_matrix(4, 64, 7000 + t);
    const double mse16 = reconstruction_mse(w, quantize_rtn(w, config_with_group(16)));
    const double mse64 = reconstruction_mse(w, quantize_rtn(w, config_with_group(64)));
    if (mse16 <= mse64)
      ++finer_wins_or_ties;
  }
  CHECK(finer_wins_or_ties >= 90);
}

TEST_CASE("clip search never loses to the unclipped fit")
{
  for (uint64_t seed = 500; seed < 520; ++seed)
  {
    const Matrix w = seeded_random_matrix(4, 32, seed);
    QuantConfig plain = config_with_group(16);
    QuantConfig clipped = plain;
    clipped.clip_search = true;
    const double mse_plain = reconstruction_mse(w, quantize_rtn(w, plain));
    const double mse_clip = reconstruction_mse(w, quantize_rtn(w, clipped));
    CHECK(mse_clip <= mse_plain);
  }
}

TEST_CASE("QuantConfig validation")
{
  QuantConfig cfg;
  cfg.bits = 8;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = QuantConfig{};
  cfg.group_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = QuantConfig{};
  cfg.method = Method::GSQ;
  cfg.awq_alpha_grid.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.awq_alpha_grid = {0.5f, 1.5f}; // exponent must stay in [0,1]
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = QuantConfig{};
  cfg.method = Method::GPTQ;
  cfg.hessian_damping = 0.0f;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("reconstruction_mse rejects mismatched shapes")
{
  const Matrix w = seeded_random_matrix(2, 16, 1);
  const QuantizedTensor qt = quantize_rtn(seeded_random_matrix(4, 16, 2), config_with_group(16));
  CHECK_THROWS_AS(reconstruction_mse(w, qt), QuantError);
}
