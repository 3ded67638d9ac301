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

#ifndef VFGNN_SPARSE_H_
#define VFGNN_SPARSE_H_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "vfgnn/tensor.h"

namespace vfgnn {

// Immutable compressed-row sparse matrix. Copies share storage, and the
// transpose is built once on first use, so handing the same matrix to many
// recorded products stays cheap.
class SparseMatrix {
 public:
  struct Entry {
    size_t row;
    size_t col;
    double value;
  };

  SparseMatrix();
  // Entries may arrive in any order. Out-of-range indices and repeated
  // (row, col) pairs raise DimensionError.
  SparseMatrix(size_t rows, size_t cols, std::vector<Entry> entries);

  // Keeps the nonzero entries of a dense tensor.
  static SparseMatrix FromDense(const Tensor& dense);

  size_t rows() const;
  size_t cols() const;
  size_t nnz() const;

  std::span<const size_t> row_ptr() const;
  std::span<const size_t> col_index() const;
  std::span<const double> values() const;

  double At(size_t row, size_t col) const;
  Tensor ToDense() const;
  const SparseMatrix& Transposed() const;

  // Plain product with a dense right-hand side.
  Tensor Multiply(const Tensor& b) const;

 private:
  struct Storage;
  std::shared_ptr<Storage> storage_;
};

}  // namespace vfgnn

#endif  // VFGNN_SPARSE_H_
