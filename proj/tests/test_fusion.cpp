#include <doctest.h>

#include <random>

#include "igrec/fusion.hpp"
#include "support.hpp"

using namespace igrec;
using test::random_matrix;

TEST_CASE("fuse_group") {
  const Matrix e = Matrix::row({1.5, -2});
  CHECK(fuse_group(e, e) == e);
  CHECK(fuse_group(Matrix::row({0, 0}), Matrix::row({3, 5})) == Matrix::row({1.5, 2.5}));
  CHECK(fuse_group(Matrix::row({2, 0}), Matrix::row({0, 2})) == Matrix::row({1, 1}));
}

TEST_CASE("fuse_user") {
  const Matrix e = Matrix::row({4, 0});
  CHECK(fuse_user(e, {}) == e);
  const Matrix same[] = {e};
  CHECK(fuse_user(e, same) == e);
  const Matrix g[] = {Matrix::row({0, 4})};
  CHECK(fuse_user(e, g) == Matrix::row({2, 2}));
}

TEST_CASE("fuse_user is permutation invariant and linear") {
  std::mt19937_64 rng(1);
  const Matrix e = random_matrix(1, 4, rng);
  std::vector<Matrix> groups{random_matrix(1, 4, rng), random_matrix(1, 4, rng), random_matrix(1, 4, rng)};
  const Matrix a = fuse_user(e, groups);
  std::vector<Matrix> rev(groups.rbegin(), groups.rend());
  CHECK(test::max_abs_diff(a, fuse_user(e, rev)) < 1e-15);

  Matrix e2 = e;
  for (double& v : e2.values()) v *= -3.0;
  for (auto& g : groups)
    for (double& v : g.values()) v *= -3.0;
  const Matrix b = fuse_user(e2, groups);
  for (std::size_t j = 0; j < 4; ++j) CHECK(b[j] == doctest::Approx(-3.0 * a[j]).epsilon(1e-14));
}

TEST_CASE("batched user fusion matches per-user fusion") {
  std::mt19937_64 rng(2);
  const std::vector<std::vector<std::size_t>> ug{{0, 2}, {}, {1}, {0, 1, 2}};
  const Matrix users = random_matrix(4, 3, rng), groups = random_matrix(3, 3, rng);
  for (Pooling pool : {Pooling::Mean, Pooling::Sum, Pooling::Max}) {
    UserFusion f(ug, 3, pool);
    ad::Tape t;
    const Matrix out = f.apply(t.constant(users), t.constant(groups)).value();
    for (std::size_t u = 0; u < 4; ++u) {
      Matrix eu(1, 3);
      for (std::size_t j = 0; j < 3; ++j) eu[j] = users(u, j);
      std::vector<Matrix> gs;
      for (std::size_t g : ug[u]) {
        Matrix row(1, 3);
        for (std::size_t j = 0; j < 3; ++j) row[j] = groups(g, j);
        gs.push_back(row);
      }
      const Matrix ref = fuse_user(eu, gs, pool);
      for (std::size_t j = 0; j < 3; ++j) CHECK(out(u, j) == doctest::Approx(ref[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("fusion gradients") {
  std::mt19937_64 rng(3);
  ParameterSet p;
  p.add("users", random_matrix(4, 3, rng));
  p.add("groups", random_matrix(3, 3, rng));
  p.add("istar", random_matrix(3, 3, rng));
  const std::vector<std::vector<std::size_t>> ug{{0, 2}, {}, {1}, {0, 1, 2}};
  for (Pooling pool : {Pooling::Mean, Pooling::Sum, Pooling::Max}) {
    UserFusion f(ug, 3, pool);
    const double err = test::gradient_error(p, [&](ad::Tape&, const std::vector<ad::Var>& v) {
      return test::weighted_sum(f.apply(v[0], ad::fuse_group(v[1], v[2])));
    });
    CHECK(err < 1e-6);
  }
}
