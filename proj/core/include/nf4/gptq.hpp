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

#ifndef NF4_GPTQ_HPP
#define NF4_GPTQ_HPP

#include "nf4/gsq.hpp"
#include "nf4/matrix.hpp"
#include "nf4/quant.hpp"

#include <vector>

namespace nf4
{

/// Damped second-moment matrix of the calibration activations, H = 2*X^T*X/n
/// plus damping on the diagonal. Symmetric and positive definite by contract
/// (construction fails with SingularHessian otherwise).
struct Hessian
{
  std::size_t dim = 0;
  std::vector<double> matrix; // dim x dim, row-major
  double damping_applied = 0.0;

  double at(std::size_t i, std::size_t j) const { return matrix[i * dim + j]; }

  static Hessian identity(std::size_t dim);
};

/// H = 2*X^T*X / n, dead diagonals floored to the damping term, then
/// damping*mean(diag)*I added. Throws SingularHessian if Cholesky still fails.
Hessian build_hessian(const CalibrationSet &calib, float damping);

/// One-shot error-compensated quantization: columns left to right, each column's
/// rounding error propagated into the still-unquantized columns through the
/// Cholesky factor of H^-1. Group scales are refit from the compensated working
/// weights when the column pointer enters each group. Identity Hessian reduces
/// bit-exactly to quantize_rtn.
QuantizedTensor gptq_quantize(const Matrix &w, const Hessian &hessian, const QuantConfig &config);

/// Mean over calibration rows of ||x*W^T - x*What^T||^2: the objective GPTQ
/// minimizes, shared by tests and reports.
double layer_output_error(const Matrix &w, const Matrix &w_hat, const CalibrationSet &calib);

} // namespace nf4

#endif // NF4_GPTQ_HPP
