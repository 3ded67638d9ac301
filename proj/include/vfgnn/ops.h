/*
 * Copyright 2026 The vfgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VFGNN_OPS_H_
#define VFGNN_OPS_H_

#include <span>
#include <vector>

#include "vfgnn/autodiff.h"
#include "vfgnn/sparse.h"

// Differentiable ops. Every op records a vector-Jacobian product written in
// terms of these same ops, which is what makes double-backward work.
namespace vfgnn::ad {

// Elementwise, equal shapes.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double c);
Var AddScalar(const Var& a, double c);
// a [m x n] times a 1x1 Var.
Var MulByScalar(const Var& a, const Var& s);

// Broadcasting and reductions.
Var AddRowVector(const Var& a, const Var& row);  // a [m x n] + row [1 x n]
Var BroadcastRows(const Var& row, size_t m);     // [1 x n] -> [m x n]
Var SumRows(const Var& a);                       // [m x n] -> [1 x n]
Var BroadcastCols(const Var& col, size_t n);     // [m x 1] -> [m x n]
Var RowSum(const Var& a);                        // [m x n] -> [m x 1]
Var Fill(const Var& scalar, size_t rows, size_t cols);
Var Sum(const Var& a);
Var Mean(const Var& a);
// Euclidean norm of all entries; the gradient at zero is taken as zero.
Var L2Norm(const Var& a);

// Linear algebra.
Var Matmul(const Var& a, const Var& b);
Var Transpose(const Var& a);
// Constant sparse matrix times a differentiable dense matrix.
Var Spmm(const SparseMatrix& s, const Var& b);

// Pointwise nonlinearities. Kinks get gradient zero (relu at 0) or the
// left-hand slope (leaky_relu at 0).
Var Relu(const Var& a);
Var LeakyRelu(const Var& a, double slope);
Var Elu(const Var& a);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Reciprocal(const Var& a);

// Row-wise softmax, stabilized by subtracting each row's maximum.
Var SoftmaxRows(const Var& x);
// -(1/m) * sum_v sum_c t_vc * log(p_vc + 1e-12), p and t [m x n].
Var CrossEntropySoft(const Var& p, const Var& t);
inline constexpr double kLogClamp = 1e-12;

// Shape manipulation.
Var Reshape(const Var& a, size_t rows, size_t cols);
Var ConcatCols(std::span<const Var> parts);
Var SliceCols(const Var& a, size_t begin, size_t end);
// Places `a` at columns [begin, begin + a.cols) of a zero [m x total] matrix.
Var PadCols(const Var& a, size_t begin, size_t total);
// All entries of every part, flattened row-major and joined, as [1 x N].
Var FlattenConcat(std::span<const Var> parts);
Var GatherRows(const Var& a, std::span<const size_t> index);
// out[index[i]] += a[i]; out has `n_rows` rows.
Var ScatterAddRows(const Var& a, std::span<const size_t> index, size_t n_rows);

}  // namespace vfgnn::ad

#endif  // VFGNN_OPS_H_
