#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "igrec/autodiff.hpp"
#include "igrec/data.hpp"
#include "igrec/optim.hpp"
#include "igrec/tensor.hpp"

namespace igrec::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Builds the loss on a fresh tape, backpropagates, and compares with
// central differences over every coordinate (up to max_coords per tensor).
inline double gradient_error(const ParameterSet& params, const Builder& build, double h = 1e-5,
                             std::size_t max_coords = 64) {
  auto eval = [&](const ParameterSet& p, std::vector<Matrix>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (std::size_t i = 0; i < p.size(); ++i) vars.push_back(tape.parameter(p[i]));
    ad::Var loss = build(tape, vars);
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return loss.scalar();
  };
  std::vector<Matrix> analytic;
  eval(params, &analytic);
  return finite_difference_check([&](const ParameterSet& p) { return eval(p, nullptr); }, params, analytic, h,
                                 max_coords);
}

// Reduces any matrix-valued node to a scalar with fixed random weights so
// every output entry contributes a distinct gradient.
inline ad::Var weighted_sum(ad::Var x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Matrix w = random_matrix(x.rows(), x.cols(), rng);
  return ad::sum(ad::hadamard(x, x.tape->constant(std::move(w))));
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("igrec_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

// Small split dataset for model-level tests: 5 users, 4 items, 2 groups.
inline Dataset toy_dataset() {
  Dataset d;
  d.n_users = 5;
  d.n_items = 4;
  d.n_groups = 2;
  d.user_items = {5, 4, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 0}, {3, 3}, {4, 1}, {4, 3}}, {}};
  d.user_items.split.assign(d.user_items.edges.size(), Split::Train);
  d.group_items = {2, 4, {{0, 1}, {0, 2}, {1, 0}, {1, 3}}, {}};
  d.group_items.split.assign(d.group_items.edges.size(), Split::Train);
  d.group_members = {{0, 1, 2}, {2, 3}};
  d.validate();
  return d;
}

}  // namespace igrec::test
