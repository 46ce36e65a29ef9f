#pragma once

// Interest aggregator: attention readout of members' n-th interests into i^n,
// then Gumbel-Softmax selection over the M readouts into i*_g.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "igrec/autodiff.hpp"
#include "igrec/tensor.hpp"

namespace igrec {

enum class GumbelMode { Soft, Hard };

// Group membership in CSR form: members of g are members[offsets[g] .. offsets[g+1]).
struct GroupIndex {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  static GroupIndex from_lists(const std::vector<std::vector<std::size_t>>& lists);
  std::size_t groups() const { return offsets.size() - 1; }
};

// -log(-log(eps)) with eps clamped to [1e-10, 1 - 1e-10].
double gumbel_from_uniform(double eps);
double gumbel_noise(std::mt19937_64& rng);
Matrix gumbel_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// Value-level readout over explicit member vectors (each 1 x d).
Matrix attention_readout(std::span<const Matrix> member_interests, const Matrix& w_att);

// Softmax((scores + noise) / tau) per row. Hard mode returns the one-hot argmax.
Matrix gumbel_softmax_weights(const Matrix& scores, const Matrix* noise, double tau, GumbelMode mode);

// sum_n omega[n] * interests[n].
Matrix aggregate_group_interest(std::span<const double> omega, std::span<const Matrix> interests);

namespace ad {

// interest: |U| x d, w_att: 1 x d. Returns |G| x d readouts.
Var attention_readout(Var interest, Var w_att, const GroupIndex& groups);

// psi[g][n] = e_g . i^n_g  ->  |G| x M.
Var interest_scores(Var group_emb, std::span<const Var> readouts);

// noise may be null (noise-free evaluation). Hard mode uses straight-through gradients.
Var gumbel_softmax_weights(Var scores, const Matrix* noise, double tau, GumbelMode mode);

// i*_g = sum_n omega[:, n] * readouts[n].
Var aggregate_group_interest(Var omega, std::span<const Var> readouts);

}  // namespace ad

}  // namespace igrec
