#include "igrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace igrec {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: value count does not match shape");
  }
}

Matrix Matrix::row(std::initializer_list<double> values) {
  return Matrix(1, values.size(), std::vector<double>(values));
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> flat;
  flat.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Matrix(n, m, std::move(flat));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) throw std::out_of_range("SparseMatrix: index out of range");
    if (!std::isfinite(t.weight)) throw std::invalid_argument("SparseMatrix: non-finite weight");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Triplet& a, const Triplet& b) {
                              return a.row == b.row && a.col == b.col;
                            }),
                entries.end());
  row_ptr_.assign(rows + 1, 0);
  col_idx_.reserve(entries.size());
  weights_.reserve(entries.size());
  for (const auto& t : entries) {
    ++row_ptr_[t.row + 1];
    col_idx_.push_back(t.col);
    weights_.push_back(t.weight);
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) out.push_back({r, col_idx_[p], weights_[p]});
  }
  return out;
}

SparseMatrix SparseMatrix::transposed() const {
  auto t = triplets();
  for (auto& e : t) std::swap(e.row, e.col);
  return SparseMatrix(cols_, rows_, std::move(t));
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) d(r, col_idx_[p]) = weights_[p];
  }
  return d;
}

}  // namespace igrec
