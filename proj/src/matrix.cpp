#include "pmmm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmmm/error.hpp"

namespace pmmm {

DenseMat::DenseMat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("DenseMat: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMat DenseMat::identity(std::size_t n) {
  DenseMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMat DenseMat::row_vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return DenseMat(1, n, std::move(values));
}

std::string DenseMat::shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

bool DenseMat::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double DenseMat::sum() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

SparseMat SparseMat::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw std::invalid_argument("sparse entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMat m(rows, cols);
  m.col_idx_.reserve(entries.size());
  m.values_.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k > 0 && entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
      throw std::invalid_argument("duplicate sparse entry (" + std::to_string(entries[k].row) + "," +
                                  std::to_string(entries[k].col) + ")");
    }
    m.row_ptr_[entries[k].row + 1]++;
    m.col_idx_.push_back(entries[k].col);
    m.values_.push_back(entries[k].value);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMat SparseMat::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

bool SparseMat::contains(std::size_t r, std::size_t c) const {
  auto cols = row_cols(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<Triplet> SparseMat::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_idx_[k], values_[k]});
  }
  return out;
}

DenseMat SparseMat::to_dense() const {
  DenseMat d(rows_, cols_);
  for (const auto& t : triplets()) d(t.row, t.col) = t.value;
  return d;
}

SparseMat SparseMat::row_normalized() const {
  SparseMat out = *this;
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k];
    if (s == 0.0) continue;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.values_[k] = values_[k] / s;
  }
  return out;
}

SparseMat SparseMat::embedded(std::size_t total_rows, std::size_t total_cols, std::size_t row_offset,
                              std::size_t col_offset) const {
  if (row_offset + rows_ > total_rows || col_offset + cols_ > total_cols) {
    throw ShapeError("SparseMat::embedded: block does not fit");
  }
  SparseMat out(total_rows, total_cols);
  out.col_idx_.reserve(nnz());
  out.values_.reserve(nnz());
  for (std::size_t r = 0; r < total_rows; ++r) {
    if (r >= row_offset && r < row_offset + rows_) {
      const std::size_t lr = r - row_offset;
      for (std::size_t k = row_ptr_[lr]; k < row_ptr_[lr + 1]; ++k) {
        out.col_idx_.push_back(col_idx_[k] + col_offset);
        out.values_.push_back(values_[k]);
      }
    }
    out.row_ptr_[r + 1] = out.col_idx_.size();
  }
  return out;
}

namespace {
void require(bool ok, const char* op, const DenseMat& a, const DenseMat& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}
}  // namespace

DenseMat matmul(const DenseMat& a, const DenseMat& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  DenseMat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMat matmul_at_b(const DenseMat& a, const DenseMat& b) {
  require(a.rows() == b.rows(), "matmul_at_b", a, b);
  DenseMat c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

DenseMat matmul_a_bt(const DenseMat& a, const DenseMat& b) {
  require(a.cols() == b.cols(), "matmul_a_bt", a, b);
  DenseMat c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

DenseMat spmm(const SparseMat& a, const DenseMat& x) {
  if (a.cols() != x.rows()) {
    throw ShapeError("spmm: incompatible shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " and " + x.shape_str());
  }
  DenseMat out(a.rows(), x.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    auto orow = out.row(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto xr = x.row(cols[k]);
      const double v = vals[k];
      for (std::size_t j = 0; j < x.cols(); ++j) orow[j] += v * xr[j];
    }
  }
  return out;
}

DenseMat spmm_transposed(const SparseMat& a, const DenseMat& g) {
  if (a.rows() != g.rows()) {
    throw ShapeError("spmm_transposed: incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + g.shape_str());
  }
  DenseMat out(a.cols(), g.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    auto grow = g.row(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto orow = out.row(cols[k]);
      const double v = vals[k];
      for (std::size_t j = 0; j < g.cols(); ++j) orow[j] += v * grow[j];
    }
  }
  return out;
}

}  // namespace pmmm
