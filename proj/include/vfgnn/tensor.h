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

#ifndef VFGNN_TENSOR_H_
#define VFGNN_TENSOR_H_

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vfgnn {

// Dense row-major matrix of 64-bit floats. Every array in the simulator is
// at most two-dimensional; scalars are 1x1 and vectors are 1xn or nx1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(size_t rows, size_t cols, double fill = 0.0);
  Tensor(size_t rows, size_t cols, std::vector<double> values);

  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Scalar(double v) { return Tensor(1, 1, v); }
  static Tensor Identity(size_t n);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return values_.size(); }
  std::array<size_t, 2> shape() const { return {rows_, cols_}; }
  bool empty() const { return values_.empty(); }

  double& operator()(size_t r, size_t c) { return values_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }
  std::span<double> row(size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
  }

  // Value of a 1x1 tensor.
  double item() const;

  bool SameShape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool AllFinite() const;
  std::string ShapeString() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> values_;
};

// Throws DimensionError naming `op` unless the shapes agree.
void CheckSameShape(const Tensor& a, const Tensor& b, const char* op);

// Plain (unrecorded) kernels shared by the differentiable ops, the models and
// the test oracles.
namespace kernels {

Tensor Matmul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);
Tensor SoftmaxRows(const Tensor& x);
double MaxAbsDiff(const Tensor& a, const Tensor& b);
double MeanAbs(std::span<const double> v);
double L2Norm(std::span<const double> v);

}  // namespace kernels
}  // namespace vfgnn

#endif  // VFGNN_TENSOR_H_
