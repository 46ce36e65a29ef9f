#include <doctest.h>

#include <cmath>
#include <random>

#include "igrec/autodiff.hpp"
#include "igrec/kernels.hpp"
#include "igrec/optim.hpp"
#include "support.hpp"

using namespace igrec;
using igrec::test::gradient_error;
using igrec::test::random_matrix;
using igrec::test::weighted_sum;

namespace {

ParameterSet one(const char* name, Matrix m) {
  ParameterSet p;
  p.add(name, std::move(m));
  return p;
}

}  // namespace

TEST_CASE("sigmoid values and gradient") {
  ad::Tape t;
  auto x = t.parameter(Matrix::row({0.0, std::log(3.0), -800.0, 800.0}));
  auto y = ad::sigmoid(x);
  CHECK(y.value()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y.value()[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(y.value().all_finite());
  CHECK(y.value()[2] == 0.0);
  CHECK(y.value()[3] == 1.0);
  t.backward(ad::sum(ad::col(y, 0)));
  CHECK(t.grad(x)[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax with temperature") {
  ad::Tape t;
  CHECK_THROWS_AS(ad::softmax_rows(t.constant(Matrix::row({1, 2})), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ad::softmax_rows(t.constant(Matrix::row({1, 2})), -1.0), std::invalid_argument);

  auto eq = ad::softmax_rows(t.constant(Matrix::row({1, 1})), 0.5).value();
  CHECK(eq[0] == doctest::Approx(0.5));
  CHECK(eq[1] == doctest::Approx(0.5));

  auto p = ad::softmax_rows(t.constant(Matrix::row({2, 0})), 1.0).value();
  CHECK(std::abs(p[0] - 0.8808) < 1e-4);
  CHECK(std::abs(p[1] - 0.1192) < 1e-4);
  CHECK(std::abs(p[0] - std::exp(2.0) / (std::exp(2.0) + 1.0)) < 1e-15);

  auto sharp = ad::softmax_rows(t.constant(Matrix::row({2, 0})), 0.01).value();
  CHECK(sharp[0] > 1.0 - 1e-8);
}

TEST_CASE("softmax rows sum to one and ignore row shifts") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix logits = random_matrix(6, 5, rng, 4.0);
    Matrix shifted = logits;
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c) shifted(r, c) += 10.0 * static_cast<double>(r) - 7.0;
    ad::Tape t;
    const double tau = 0.1 + 0.3 * trial;
    auto a = ad::softmax_rows(t.constant(logits), tau).value();
    auto b = ad::softmax_rows(t.constant(shifted), tau).value();
    for (std::size_t r = 0; r < 6; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        s += a(r, c);
        CHECK(a(r, c) >= 0.0);
        CHECK(std::abs(a(r, c) - b(r, c)) < 1e-12);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("cosine similarity") {
  ad::Tape t;
  auto a = t.parameter(Matrix::from_rows({{1, 0}, {1, 2}, {1, 0}, {0, 0}}));
  auto b = t.parameter(Matrix::from_rows({{0, 1}, {2, 4}, {-1, 0}, {3, 1}}));
  auto c = ad::row_cosine(a, b);
  CHECK(c.value()[0] == doctest::Approx(0.0));
  CHECK(c.value()[1] == doctest::Approx(1.0));
  CHECK(c.value()[2] == doctest::Approx(-1.0));
  CHECK(c.value()[3] == 0.0);  // degenerate
  t.backward(ad::sum(c));
  const Matrix ga = t.grad(a), gb = t.grad(b);
  CHECK(ga(3, 0) == 0.0);
  CHECK(ga(3, 1) == 0.0);
  CHECK(gb(3, 0) == 0.0);
  CHECK(gb(3, 1) == 0.0);
}

TEST_CASE("sparse matrix construction") {
  SparseMatrix s(2, 2, {{0, 1, 2.0}, {0, 1, 5.0}, {1, 0, 1.0}});
  CHECK(s.nnz() == 2);
  CHECK(s.to_dense()(0, 1) == 2.0);
  CHECK_THROWS(SparseMatrix(2, 2, {{2, 0, 1.0}}));
  CHECK_THROWS(SparseMatrix(2, 2, {{0, 0, std::nan("")}}));
}

TEST_CASE("sparse-dense product examples") {
  Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(kernels::parallel::spmm(SparseMatrix::identity(2), x) == x);

  SparseMatrix a(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  Matrix y = kernels::parallel::spmm(a, x);
  CHECK(y == Matrix::from_rows({{4, 6}, {0, 0}}));
  CHECK(kernels::serial::spmm(a, x) == y);
  CHECK_THROWS(kernels::parallel::spmm(a, Matrix(3, 2)));
}

TEST_CASE("sparse product matches the dense product on random 20x20") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Triplet> tr;
    for (std::size_t r = 0; r < 20; ++r)
      for (std::size_t c = 0; c < 20; ++c)
        if (u(rng) < 0.2) tr.push_back({r, c, u(rng) * 2.0 - 1.0});
    SparseMatrix s(20, 20, tr);
    Matrix x = random_matrix(20, 7, rng);
    Matrix dense = kernels::serial::matmul(s.to_dense(), x);
    CHECK(test::max_abs_diff(kernels::parallel::spmm(s, x), dense) < 1e-12);
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  std::mt19937_64 rng(5);
  Matrix a = random_matrix(33, 17, rng), b = random_matrix(17, 9, rng), c = random_matrix(33, 9, rng);
  Matrix d = random_matrix(21, 17, rng);
  CHECK(kernels::serial::matmul(a, b) == kernels::parallel::matmul(a, b));
  CHECK(kernels::serial::matmul_tn(a, c) == kernels::parallel::matmul_tn(a, c));
  CHECK(kernels::serial::matmul_nt(a, d) == kernels::parallel::matmul_nt(a, d));
  CHECK(kernels::serial::transpose(a) == kernels::parallel::transpose(a));
  std::vector<Triplet> tr;
  for (std::size_t i = 0; i < 40; ++i) tr.push_back({i % 19, (i * 7) % 33, 0.1 * static_cast<double>(i)});
  SparseMatrix s(19, 33, tr);
  CHECK(kernels::serial::spmm(s, a) == kernels::parallel::spmm(s, a));
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient and no decay leaves parameters unchanged") {
    ParameterSet p = one("w", Matrix::row({1.5, -2.0}));
    const ParameterSet before = p;
    AdamState st = AdamState::for_params(p);
    adam_step(p, {Matrix(1, 2)}, st, 0.01, 0.0);
    CHECK(p == before);
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves by the learning rate") {
    for (double g : {3.0, -0.2, 1e-3}) {
      ParameterSet p = one("w", Matrix::row({0.7}));
      AdamState st = AdamState::for_params(p);
      adam_step(p, {Matrix::row({g})}, st, 0.01, 0.0);
      // Reference: m_hat = g, v_hat = g^2, delta = lr * g / (|g| + eps).
      const double expected = 0.01 * g / (std::abs(g) + 1e-8);
      CHECK(std::abs((0.7 - p[0][0]) - expected) / std::abs(expected) < 1e-6);
      CHECK(std::abs(std::abs(0.7 - p[0][0]) - 0.01) / 0.01 < 1e-5);
    }
  }
  SUBCASE("weight decay is added to the gradient before the moments") {
    ParameterSet p = one("w", Matrix::row({2.0}));
    AdamState st = AdamState::for_params(p);
    adam_step(p, {Matrix::row({0.0})}, st, 0.1, 0.5);
    CHECK(st.m[0][0] == doctest::Approx((1 - 0.9) * 1.0));
    CHECK(p[0][0] == doctest::Approx(1.9));
  }
  SUBCASE("deterministic and step counter increases") {
    ParameterSet p1 = one("w", Matrix::row({1, 2, 3})), p2 = p1;
    AdamState s1 = AdamState::for_params(p1), s2 = AdamState::for_params(p2);
    for (int i = 0; i < 5; ++i) {
      Matrix g = Matrix::row({0.1 * i, -0.3, 0.7});
      adam_step(p1, {g}, s1, 0.05, 1e-3);
      adam_step(p2, {g}, s2, 0.05, 1e-3);
      CHECK(s1.step == i + 1);
    }
    CHECK(p1 == p2);
    CHECK(p1.checksum() == p2.checksum());
  }
  SUBCASE("shape mismatch") {
    ParameterSet p = one("w", Matrix::row({1, 2}));
    AdamState st = AdamState::for_params(p);
    CHECK_THROWS(adam_step(p, {Matrix(2, 1)}, st, 0.1, 0.0));
  }
}

TEST_CASE("finite difference check oracle") {
  ParameterSet p = one("x", Matrix::row({3.0}));
  auto sq = [](ad::Tape&, const std::vector<ad::Var>& v) { return ad::sum(ad::hadamard(v[0], v[0])); };
  CHECK(gradient_error(p, sq) < 1e-8);

  ad::Tape t;
  auto x = t.parameter(Matrix::row({1, 2}));
  auto y = t.parameter(Matrix::row({5}));
  auto c = ad::scale(ad::sum(x), 0.0);
  t.backward(c);
  CHECK(t.grad(x) == Matrix(1, 2));
  CHECK(t.grad(y) == Matrix(1, 1));  // unreachable
}

TEST_CASE("gradient of every primitive") {
  std::mt19937_64 rng(21);
  ParameterSet p;
  p.add("a", random_matrix(4, 3, rng));
  p.add("b", random_matrix(4, 3, rng));
  p.add("w", random_matrix(3, 5, rng));
  p.add("row", random_matrix(1, 3, rng));
  p.add("c", random_matrix(4, 1, rng));
  using V = std::vector<ad::Var>;
  const double tol = 1e-6;

  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::add(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::sub(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::scale(v[0], -2.5)); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::hadamard(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::add_row(v[0], v[3])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::matmul(v[0], v[2])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::matmul_nt(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::sigmoid(v[0])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::log_sigmoid(v[0])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::softmax_rows(v[0], 0.7)); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::row_dot(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::row_cosine(v[0], v[1])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::mul_col(v[0], v[4])); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return weighted_sum(ad::col(v[0], 1)); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) { return ad::mean(v[0]); }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) {
          const std::size_t idx[] = {3, 0, 3, 1};
          return weighted_sum(ad::gather_rows(v[0], idx));
        }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) {
          const ad::Var parts[] = {v[0], v[4], v[1]};
          return weighted_sum(ad::concat_cols(parts));
        }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) {
          const std::size_t off[] = {0, 1, 4};
          return weighted_sum(ad::segment_sum(v[0], off));
        }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) {
          const std::size_t off[] = {0, 3, 4};
          return weighted_sum(ad::segment_softmax(v[4], off));
        }) < tol);
  CHECK(gradient_error(p, [](ad::Tape&, const V& v) {
          const std::size_t off[] = {0, 2, 4};
          return weighted_sum(ad::segment_max(v[0], off));
        }) < tol);
  const SparseMatrix s(3, 4, {{0, 0, 0.5}, {0, 3, -1.0}, {2, 1, 2.0}});
  const SparseMatrix st = s.transposed();
  CHECK(gradient_error(p, [&](ad::Tape&, const V& v) { return weighted_sum(ad::spmm(s, st, v[0])); }) < tol);
}

TEST_CASE("straight-through one-hot") {
  ad::Tape t;
  auto soft = t.parameter(Matrix::from_rows({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}}));
  auto hard = ad::straight_through_onehot(soft);
  CHECK(hard.value() == Matrix::from_rows({{0, 1, 0}, {1, 0, 0}}));
  auto w = t.constant(Matrix::from_rows({{1, 2, 3}, {4, 5, 6}}));
  t.backward(ad::sum(ad::hadamard(hard, w)));
  CHECK(t.grad(soft) == w.value());
}

TEST_CASE("tape bookkeeping") {
  ad::Tape t;
  auto x = t.parameter(Matrix::row({1, 2}));
  CHECK_THROWS(t.backward(x));  // not a scalar
  auto l = ad::sum(ad::hadamard(x, x));
  t.backward(l);
  CHECK(t.grad(x) == Matrix::row({2, 4}));
  t.backward(l);  // gradients reset between calls
  CHECK(t.grad(x) == Matrix::row({2, 4}));
  CHECK_THROWS(ad::add(x, t.constant(Matrix(2, 1))));
}
