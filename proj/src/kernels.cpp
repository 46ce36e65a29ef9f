#include "igrec/kernels.hpp"

#include <cstdint>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace igrec::kernels {

namespace {

void check_inner(std::size_t lhs, std::size_t rhs, const char* what) {
  if (lhs != rhs) {
    throw std::invalid_argument(std::string(what) + ": inner dimension mismatch (" +
                                std::to_string(lhs) + " vs " + std::to_string(rhs) + ")");
  }
}

// One output row of a * b, accumulated in k order.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t p = b.cols();
  double* out = c.data() + i * p;
  const double* arow = a.data() + i * inner;
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = arow[k];
    const double* brow = b.data() + k * p;
    for (std::size_t j = 0; j < p; ++j) out[j] += aik * brow[j];
  }
}

inline void spmm_row(const SparseMatrix& s, const Matrix& x, Matrix& out, std::size_t r) {
  const std::size_t d = x.cols();
  double* dst = out.data() + r * d;
  auto cols = s.row_cols(r);
  auto w = s.row_weights(r);
  for (std::size_t p = 0; p < cols.size(); ++p) {
    const double* src = x.data() + cols[p] * d;
    const double wp = w[p];
    for (std::size_t j = 0; j < d; ++j) dst[j] += wp * src[j];
  }
}

inline void dot_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t inner = a.cols();
  const double* arow = a.data() + i * inner;
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.data() + j * inner;
    double s = 0.0;
    for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
    c(i, j) = s;
  }
}

}  // namespace

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
  return c;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  check_inner(s.cols(), x.rows(), "spmm");
  Matrix out(s.rows(), x.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double acc = 0.0;
      auto cols = s.row_cols(r);
      auto w = s.row_weights(r);
      for (std::size_t p = 0; p < cols.size(); ++p) acc += w[p] * x(cols[p], j);
      out(r, j) = acc;
    }
  }
  return out;
}

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  const auto n = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < n; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    for (std::size_t i = 0; i < a.rows(); ++i) t(jj, i) = a(i, jj);
  }
  return t;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  return matmul(transpose(a), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dot_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  check_inner(s.cols(), x.rows(), "spmm");
  Matrix out(s.rows(), x.cols());
  const auto n = static_cast<std::int64_t>(s.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t r = 0; r < n; ++r) spmm_row(s, x, out, static_cast<std::size_t>(r));
  return out;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace igrec::kernels
