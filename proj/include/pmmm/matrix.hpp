#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pmmm {

// Row-major dense matrix of doubles.
class DenseMat {
 public:
  DenseMat() = default;
  DenseMat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMat identity(std::size_t n);
  static DenseMat row_vector(std::vector<double> values);
  static DenseMat scalar(double v) { return DenseMat(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const DenseMat& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  bool all_finite() const noexcept;
  double sum() const noexcept;

  friend bool operator==(const DenseMat& a, const DenseMat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed sparse row matrix. Column indices within a row are strictly
// increasing.
class SparseMat {
 public:
  SparseMat() = default;
  SparseMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  // Builds from unordered triplets; throws std::invalid_argument on an
  // out-of-range index or a duplicate (row, col).
  static SparseMat from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  static SparseMat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  // Entries of row r as (col, value) spans.
  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  bool contains(std::size_t r, std::size_t c) const;
  std::vector<Triplet> triplets() const;
  DenseMat to_dense() const;

  // Each nonzero row scaled to sum 1; zero rows stay zero.
  SparseMat row_normalized() const;

  // Places this matrix at (row_offset, col_offset) inside a larger zero matrix.
  SparseMat embedded(std::size_t total_rows, std::size_t total_cols, std::size_t row_offset,
                     std::size_t col_offset) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

// Sequential kernels with a fixed reduction order.
DenseMat matmul(const DenseMat& a, const DenseMat& b);
DenseMat matmul_at_b(const DenseMat& a, const DenseMat& b);  // a^T b
DenseMat matmul_a_bt(const DenseMat& a, const DenseMat& b);  // a b^T
DenseMat spmm(const SparseMat& a, const DenseMat& x);
DenseMat spmm_transposed(const SparseMat& a, const DenseMat& g);  // a^T g

}  // namespace pmmm
