#include "igrec/disentangler.hpp"

#include <stdexcept>
#include <string>

namespace igrec {

std::size_t GateParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
  return n;
}

GateParams GateParams::init(std::size_t interests, std::size_t dim, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std);
  GateParams g;
  for (std::size_t n = 0; n < interests; ++n) {
    Matrix w(dim, dim);
    for (double& v : w.values()) v = normal(rng);
    g.weight.push_back(std::move(w));
    g.bias.emplace_back(1, dim);
  }
  return g;
}

namespace ad {

Var self_gate(Var users, Var weight, Var bias) {
  const std::size_t d = users.cols();
  if (weight.rows() != d || weight.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw std::invalid_argument("self_gate: gate shape does not match embedding size " + std::to_string(d));
  }
  return hadamard(users, sigmoid(add_row(matmul(users, weight), bias)));
}

std::vector<Var> disentangle(Var users, std::span<const Var> weights, std::span<const Var> biases) {
  if (weights.size() != biases.size()) throw std::invalid_argument("disentangle: weight/bias count mismatch");
  std::vector<Var> out;
  out.reserve(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) out.push_back(self_gate(users, weights[n], biases[n]));
  return out;
}

}  // namespace ad

Matrix self_gate(const Matrix& e_u, const GateParams& gates, std::size_t n) {
  if (n >= gates.interests()) {
    throw std::out_of_range("self_gate: interest index " + std::to_string(n) + " out of range");
  }
  ad::Tape tape;
  auto out = ad::self_gate(tape.constant(e_u), tape.constant(gates.weight[n]), tape.constant(gates.bias[n]));
  return out.value();
}

InterestTensor disentangle_all(const Matrix& user_table, const GateParams& gates) {
  ad::Tape tape;
  auto users = tape.constant(user_table);
  std::vector<ad::Var> w, b;
  for (std::size_t n = 0; n < gates.interests(); ++n) {
    w.push_back(tape.constant(gates.weight[n]));
    b.push_back(tape.constant(gates.bias[n]));
  }
  InterestTensor out;
  for (const auto& v : ad::disentangle(users, w, b)) out.per_interest.push_back(v.value());
  return out;
}

}  // namespace igrec
