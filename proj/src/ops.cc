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

#include "vfgnn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfgnn/errors.h"

namespace vfgnn::ad {
namespace {

template <typename F>
Tensor Map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor Zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  CheckSameShape(a, b, op);
  Tensor out(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

void CheckScalar(const Var& s, const char* op) {
  if (s.value().size() != 1) {
    throw DimensionError(std::string(op) + ": expected a 1x1 operand, got " +
                         s.value().ShapeString());
  }
}

// 1[x <= 0] * exp(x). Its own derivative, which closes the ELU chain under
// repeated differentiation.
Var MaskedExp(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return x > 0.0 ? 0.0 : std::exp(x); });
  return MakeOp("masked_exp", std::move(value), {a},
                [a](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, MaskedExp(a))};
                });
}

}  // namespace

Var Add(const Var& a, const Var& b) {
  Tensor value = Zip(a.value(), b.value(), "add", [](double x, double y) { return x + y; });
  return MakeOp("add", std::move(value), {a, b},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {g, g};
                });
}

Var Sub(const Var& a, const Var& b) {
  Tensor value = Zip(a.value(), b.value(), "sub", [](double x, double y) { return x - y; });
  return MakeOp("sub", std::move(value), {a, b},
                [](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  return {g, w[1] ? Scale(g, -1.0) : Var()};
                });
}

Var Mul(const Var& a, const Var& b) {
  Tensor value = Zip(a.value(), b.value(), "mul", [](double x, double y) { return x * y; });
  return MakeOp("mul", std::move(value), {a, b},
                [a, b](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  return {w[0] ? Mul(g, b) : Var(), w[1] ? Mul(g, a) : Var()};
                });
}

Var Scale(const Var& a, double c) {
  Tensor value = Map(a.value(), [c](double x) { return c * x; });
  return MakeOp("scale", std::move(value), {a},
                [c](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Scale(g, c)};
                });
}

Var AddScalar(const Var& a, double c) {
  Tensor value = Map(a.value(), [c](double x) { return x + c; });
  return MakeOp("add_scalar", std::move(value), {a},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {g};
                });
}

Var MulByScalar(const Var& a, const Var& s) {
  CheckScalar(s, "mul_by_scalar");
  const double c = s.value()[0];
  Tensor value = Map(a.value(), [c](double x) { return c * x; });
  return MakeOp("mul_by_scalar", std::move(value), {a, s},
                [a, s](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  return {w[0] ? MulByScalar(g, s) : Var(),
                          w[1] ? Sum(Mul(g, a)) : Var()};
                });
}

Var AddRowVector(const Var& a, const Var& row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row_vector: " + av.ShapeString() + " + " + rv.ShapeString());
  }
  Tensor value = av;
  for (size_t i = 0; i < av.rows(); ++i)
    for (size_t j = 0; j < av.cols(); ++j) value(i, j) += rv[j];
  return MakeOp("add_row_vector", std::move(value), {a, row},
                [](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  return {g, w[1] ? SumRows(g) : Var()};
                });
}

Var BroadcastRows(const Var& row, size_t m) {
  const Tensor& rv = row.value();
  if (rv.rows() != 1) throw DimensionError("broadcast_rows: expected 1 x n, got " + rv.ShapeString());
  Tensor value(m, rv.cols());
  for (size_t i = 0; i < m; ++i) std::copy(rv.values().begin(), rv.values().end(), value.row(i).begin());
  return MakeOp("broadcast_rows", std::move(value), {row},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {SumRows(g)};
                });
}

Var SumRows(const Var& a) {
  const Tensor& av = a.value();
  Tensor value(1, av.cols());
  for (size_t i = 0; i < av.rows(); ++i)
    for (size_t j = 0; j < av.cols(); ++j) value[j] += av(i, j);
  const size_t m = av.rows();
  return MakeOp("sum_rows", std::move(value), {a},
                [m](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {BroadcastRows(g, m)};
                });
}

Var BroadcastCols(const Var& col, size_t n) {
  const Tensor& cv = col.value();
  if (cv.cols() != 1) throw DimensionError("broadcast_cols: expected m x 1, got " + cv.ShapeString());
  Tensor value(cv.rows(), n);
  for (size_t i = 0; i < cv.rows(); ++i)
    for (size_t j = 0; j < n; ++j) value(i, j) = cv[i];
  return MakeOp("broadcast_cols", std::move(value), {col},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {RowSum(g)};
                });
}

Var RowSum(const Var& a) {
  const Tensor& av = a.value();
  Tensor value(av.rows(), 1);
  for (size_t i = 0; i < av.rows(); ++i)
    for (size_t j = 0; j < av.cols(); ++j) value[i] += av(i, j);
  const size_t n = av.cols();
  return MakeOp("row_sum", std::move(value), {a},
                [n](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {BroadcastCols(g, n)};
                });
}

Var Fill(const Var& scalar, size_t rows, size_t cols) {
  CheckScalar(scalar, "fill");
  Tensor value(rows, cols, scalar.value()[0]);
  return MakeOp("fill", std::move(value), {scalar},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Sum(g)};
                });
}

Var Sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  const size_t r = a.rows(), c = a.cols();
  return MakeOp("sum", Tensor::Scalar(total), {a},
                [r, c](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Fill(g, r, c)};
                });
}

Var Mean(const Var& a) {
  if (a.value().size() == 0) throw DimensionError("mean: empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var L2Norm(const Var& a) {
  const double norm = kernels::L2Norm(a.value().values());
  return MakeOp("l2_norm", Tensor::Scalar(norm), {a},
                [a, norm](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  if (norm == 0.0) return {Var::Constant(Tensor(a.rows(), a.cols()))};
                  return {MulByScalar(a, Mul(g, Reciprocal(L2Norm(a))))};
                });
}

Var Matmul(const Var& a, const Var& b) {
  Tensor value = kernels::Matmul(a.value(), b.value());
  return MakeOp("matmul", std::move(value), {a, b},
                [a, b](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  return {w[0] ? Matmul(g, Transpose(b)) : Var(),
                          w[1] ? Matmul(Transpose(a), g) : Var()};
                });
}

Var Transpose(const Var& a) {
  return MakeOp("transpose", kernels::Transpose(a.value()), {a},
                [](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Transpose(g)};
                });
}

Var Spmm(const SparseMatrix& s, const Var& b) {
  Tensor value = s.Multiply(b.value());
  return MakeOp("spmm", std::move(value), {b},
                [s](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Spmm(s.Transposed(), g)};
                });
}

Var Relu(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  Tensor mask = Map(a.value(), [](double x) { return x > 0.0 ? 1.0 : 0.0; });
  return MakeOp("relu", std::move(value), {a},
                [mask = std::move(mask)](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, Var::Constant(mask))};
                });
}

Var LeakyRelu(const Var& a, double slope) {
  Tensor value = Map(a.value(), [slope](double x) { return x > 0.0 ? x : slope * x; });
  Tensor mask = Map(a.value(), [slope](double x) { return x > 0.0 ? 1.0 : slope; });
  return MakeOp("leaky_relu", std::move(value), {a},
                [mask = std::move(mask)](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, Var::Constant(mask))};
                });
}

Var Elu(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return x > 0.0 ? x : std::expm1(x); });
  Tensor positive = Map(a.value(), [](double x) { return x > 0.0 ? 1.0 : 0.0; });
  return MakeOp("elu", std::move(value), {a},
                [a, positive = std::move(positive)](const Var& g,
                                                    const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, Add(Var::Constant(positive), MaskedExp(a)))};
                });
}

Var Exp(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return std::exp(x); });
  return MakeOp("exp", std::move(value), {a},
                [a](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, Exp(a))};
                });
}

Var Log(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return std::log(x); });
  return MakeOp("log", std::move(value), {a},
                [a](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Mul(g, Reciprocal(a))};
                });
}

Var Reciprocal(const Var& a) {
  Tensor value = Map(a.value(), [](double x) { return 1.0 / x; });
  return MakeOp("reciprocal", std::move(value), {a},
                [a](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  Var r = Reciprocal(a);
                  return {Scale(Mul(g, Mul(r, r)), -1.0)};
                });
}

Var SoftmaxRows(const Var& x) {
  const size_t n = x.cols();
  return MakeOp("softmax_rows", kernels::SoftmaxRows(x.value()), {x},
                [x, n](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  Var y = SoftmaxRows(x);
                  Var gy = Mul(g, y);
                  return {Sub(gy, Mul(y, BroadcastCols(RowSum(gy), n)))};
                });
}

Var CrossEntropySoft(const Var& p, const Var& t) {
  CheckSameShape(p.value(), t.value(), "cross_entropy_soft");
  if (p.rows() == 0) throw DimensionError("cross_entropy_soft: no rows");
  Var log_p = Log(AddScalar(p, kLogClamp));
  return Scale(Sum(Mul(t, log_p)), -1.0 / static_cast<double>(p.rows()));
}

Var Reshape(const Var& a, size_t rows, size_t cols) {
  if (rows * cols != a.value().size()) {
    throw DimensionError("reshape: " + a.value().ShapeString() + " to " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> values(a.value().values().begin(), a.value().values().end());
  const size_t r0 = a.rows(), c0 = a.cols();
  return MakeOp("reshape", Tensor(rows, cols, std::move(values)), {a},
                [r0, c0](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {Reshape(g, r0, c0)};
                });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const size_t m = parts[0].rows();
  std::vector<size_t> offsets;
  size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    offsets.push_back(total);
    total += p.cols();
  }
  Tensor value(m, total);
  for (size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (size_t i = 0; i < m; ++i)
      std::copy(pv.row(i).begin(), pv.row(i).end(), value.row(i).begin() + static_cast<long>(offsets[k]));
  }
  std::vector<size_t> widths;
  for (const Var& p : parts) widths.push_back(p.cols());
  return MakeOp("concat_cols", std::move(value), std::vector<Var>(parts.begin(), parts.end()),
                [offsets, widths](const Var& g, const std::vector<bool>& w) -> std::vector<Var> {
                  std::vector<Var> out(offsets.size());
                  for (size_t k = 0; k < offsets.size(); ++k)
                    if (w[k]) out[k] = SliceCols(g, offsets[k], offsets[k] + widths[k]);
                  return out;
                });
}

Var SliceCols(const Var& a, size_t begin, size_t end) {
  const Tensor& av = a.value();
  if (begin > end || end > av.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") of " + av.ShapeString());
  }
  Tensor value(av.rows(), end - begin);
  for (size_t i = 0; i < av.rows(); ++i)
    for (size_t j = begin; j < end; ++j) value(i, j - begin) = av(i, j);
  const size_t total = av.cols();
  return MakeOp("slice_cols", std::move(value), {a},
                [begin, total](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {PadCols(g, begin, total)};
                });
}

Var PadCols(const Var& a, size_t begin, size_t total) {
  const Tensor& av = a.value();
  if (begin + av.cols() > total) throw DimensionError("pad_cols: does not fit");
  Tensor value(av.rows(), total);
  for (size_t i = 0; i < av.rows(); ++i)
    for (size_t j = 0; j < av.cols(); ++j) value(i, begin + j) = av(i, j);
  const size_t width = av.cols();
  return MakeOp("pad_cols", std::move(value), {a},
                [begin, width](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {SliceCols(g, begin, begin + width)};
                });
}

Var FlattenConcat(std::span<const Var> parts) {
  std::vector<Var> flat;
  flat.reserve(parts.size());
  for (const Var& p : parts) flat.push_back(Reshape(p, 1, p.value().size()));
  return ConcatCols(flat);
}

Var GatherRows(const Var& a, std::span<const size_t> index) {
  const Tensor& av = a.value();
  Tensor value(index.size(), av.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy(av.row(index[i]).begin(), av.row(index[i]).end(), value.row(i).begin());
  }
  std::vector<size_t> idx(index.begin(), index.end());
  const size_t n_rows = av.rows();
  return MakeOp("gather_rows", std::move(value), {a},
                [idx = std::move(idx), n_rows](const Var& g,
                                               const std::vector<bool>&) -> std::vector<Var> {
                  return {ScatterAddRows(g, idx, n_rows)};
                });
}

Var ScatterAddRows(const Var& a, std::span<const size_t> index, size_t n_rows) {
  const Tensor& av = a.value();
  if (index.size() != av.rows()) throw DimensionError("scatter_add_rows: index length");
  Tensor value(n_rows, av.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n_rows) throw DimensionError("scatter_add_rows: index out of range");
    auto dst = value.row(index[i]);
    auto src = av.row(i);
    for (size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
  std::vector<size_t> idx(index.begin(), index.end());
  return MakeOp("scatter_add_rows", std::move(value), {a},
                [idx = std::move(idx)](const Var& g, const std::vector<bool>&) -> std::vector<Var> {
                  return {GatherRows(g, idx)};
                });
}

}  // namespace vfgnn::ad
