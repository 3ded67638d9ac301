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

#include "vfgnn/sparse.h"

#include <algorithm>
#include <mutex>
#include <string>

#include "vfgnn/errors.h"

namespace vfgnn {

struct SparseMatrix::Storage {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<size_t> row_ptr{0};
  std::vector<size_t> col_index;
  std::vector<double> values;

  std::once_flag transpose_once;
  std::unique_ptr<SparseMatrix> transpose;
};

SparseMatrix::SparseMatrix() : storage_(std::make_shared<Storage>()) {}

SparseMatrix::SparseMatrix(size_t rows, size_t cols, std::vector<Entry> entries)
    : storage_(std::make_shared<Storage>()) {
  for (const Entry& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      throw DimensionError("sparse: entry (" + std::to_string(e.row) + "," +
                           std::to_string(e.col) + ") outside " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  Storage& s = *storage_;
  s.rows = rows;
  s.cols = cols;
  s.row_ptr.assign(rows + 1, 0);
  s.col_index.reserve(entries.size());
  s.values.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].row == entries[i - 1].row &&
        entries[i].col == entries[i - 1].col) {
      throw DimensionError("sparse: duplicate entry (" +
                           std::to_string(entries[i].row) + "," +
                           std::to_string(entries[i].col) + ")");
    }
    s.row_ptr[entries[i].row + 1]++;
    s.col_index.push_back(entries[i].col);
    s.values.push_back(entries[i].value);
  }
  for (size_t r = 0; r < rows; ++r) s.row_ptr[r + 1] += s.row_ptr[r];
}

SparseMatrix SparseMatrix::FromDense(const Tensor& dense) {
  std::vector<Entry> entries;
  for (size_t i = 0; i < dense.rows(); ++i)
    for (size_t j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) entries.push_back({i, j, dense(i, j)});
  return SparseMatrix(dense.rows(), dense.cols(), std::move(entries));
}

size_t SparseMatrix::rows() const { return storage_->rows; }
size_t SparseMatrix::cols() const { return storage_->cols; }
size_t SparseMatrix::nnz() const { return storage_->values.size(); }
std::span<const size_t> SparseMatrix::row_ptr() const { return storage_->row_ptr; }
std::span<const size_t> SparseMatrix::col_index() const {
  return storage_->col_index;
}
std::span<const double> SparseMatrix::values() const { return storage_->values; }

double SparseMatrix::At(size_t row, size_t col) const {
  const Storage& s = *storage_;
  auto begin = s.col_index.begin() + static_cast<long>(s.row_ptr[row]);
  auto end = s.col_index.begin() + static_cast<long>(s.row_ptr[row + 1]);
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return s.values[static_cast<size_t>(it - s.col_index.begin())];
}

Tensor SparseMatrix::ToDense() const {
  const Storage& s = *storage_;
  Tensor out(s.rows, s.cols);
  for (size_t r = 0; r < s.rows; ++r)
    for (size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k)
      out(r, s.col_index[k]) = s.values[k];
  return out;
}

const SparseMatrix& SparseMatrix::Transposed() const {
  Storage& s = *storage_;
  std::call_once(s.transpose_once, [&s] {
    std::vector<Entry> entries;
    entries.reserve(s.values.size());
    for (size_t r = 0; r < s.rows; ++r)
      for (size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k)
        entries.push_back({s.col_index[k], r, s.values[k]});
    s.transpose = std::make_unique<SparseMatrix>(s.cols, s.rows, std::move(entries));
  });
  return *s.transpose;
}

Tensor SparseMatrix::Multiply(const Tensor& b) const {
  const Storage& s = *storage_;
  if (s.cols != b.rows()) {
    throw DimensionError("spmm: sparse " + std::to_string(s.rows) + "x" +
                         std::to_string(s.cols) + " times " + b.ShapeString());
  }
  const size_t n = b.cols();
  Tensor out(s.rows, n);
  for (size_t r = 0; r < s.rows; ++r) {
    double* o = &out(r, 0);
    for (size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      const double v = s.values[k];
      const double* br = &b.values()[s.col_index[k] * n];
      for (size_t j = 0; j < n; ++j) o[j] += v * br[j];
    }
  }
  return out;
}

}  // namespace vfgnn
