#pragma once

// Splits each user embedding into M interest vectors through per-interest
// self-gating units: i_u^n = e_u * sigmoid(e_u W^n + b^n).

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "igrec/autodiff.hpp"
#include "igrec/tensor.hpp"

namespace igrec {

// W^n is d x d and b^n is 1 x d, for n = 0..M-1.
struct GateParams {
  std::vector<Matrix> weight;
  std::vector<Matrix> bias;

  std::size_t interests() const { return weight.size(); }
  std::size_t dim() const { return weight.empty() ? 0 : weight.front().rows(); }
  std::size_t parameter_count() const;

  // W ~ Normal(0, std^2), b = 0.
  static GateParams init(std::size_t interests, std::size_t dim, double std, std::mt19937_64& rng);
};

// Per-interest |U| x d matrices.
struct InterestTensor {
  std::vector<Matrix> per_interest;

  std::size_t interests() const { return per_interest.size(); }
  std::size_t users() const { return per_interest.empty() ? 0 : per_interest.front().rows(); }
  std::size_t dim() const { return per_interest.empty() ? 0 : per_interest.front().cols(); }
  std::span<const double> at(std::size_t user, std::size_t interest) const {
    return per_interest[interest].row_span(user);
  }
};

// M x (d + 1) x d.
constexpr std::size_t self_gate_parameter_count(std::size_t interests, std::size_t dim) {
  return interests * (dim + 1) * dim;
}

// Value-level helpers. `n` is 0-based.
Matrix self_gate(const Matrix& e_u, const GateParams& gates, std::size_t n);
InterestTensor disentangle_all(const Matrix& user_table, const GateParams& gates);

namespace ad {
// Tape-level gate for a batch of rows.
Var self_gate(Var users, Var weight, Var bias);
std::vector<Var> disentangle(Var users, std::span<const Var> weights, std::span<const Var> biases);
}  // namespace ad

}  // namespace igrec
