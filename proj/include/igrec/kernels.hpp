#pragma once

// Dense and sparse products used by the training and evaluation hot paths.
//
// Every kernel exists twice: `serial` is the plain reference loop kept for
// testing, `parallel` is the OpenMP version used in production. Both accumulate
// each output element in the same order, so their results are bit-identical
// for any thread count.

#include "igrec/tensor.hpp"

namespace igrec::kernels {

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);       // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);    // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);    // a * b^T
Matrix spmm(const SparseMatrix& s, const Matrix& x);   // s * x
Matrix transpose(const Matrix& a);
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const SparseMatrix& s, const Matrix& x);
Matrix transpose(const Matrix& a);
}  // namespace parallel

int max_threads();
void set_threads(int n);

}  // namespace igrec::kernels
