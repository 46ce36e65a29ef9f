#include "igrec/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace igrec {

GroupIndex GroupIndex::from_lists(const std::vector<std::vector<std::size_t>>& lists) {
  GroupIndex idx;
  idx.offsets.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    idx.members.insert(idx.members.end(), l.begin(), l.end());
    idx.offsets.push_back(idx.members.size());
  }
  return idx;
}

double gumbel_from_uniform(double eps) {
  eps = std::clamp(eps, 1e-10, 1.0 - 1e-10);
  return -std::log(-std::log(eps));
}

double gumbel_noise(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return gumbel_from_uniform(unit(rng));
}

Matrix gumbel_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = gumbel_noise(rng);
  return m;
}

namespace ad {

Var attention_readout(Var interest, Var w_att, const GroupIndex& groups) {
  if (groups.groups() > 0 && groups.offsets.back() != groups.members.size()) {
    throw std::invalid_argument("attention_readout: malformed group index");
  }
  for (std::size_t g = 0; g < groups.groups(); ++g) {
    if (groups.offsets[g] == groups.offsets[g + 1]) throw std::invalid_argument("attention_readout: empty group");
  }
  Var rows = gather_rows(interest, groups.members);
  Var gamma = segment_softmax(matmul_nt(rows, w_att), groups.offsets);
  return segment_sum(mul_col(rows, gamma), groups.offsets);
}

Var interest_scores(Var group_emb, std::span<const Var> readouts) {
  std::vector<Var> cols;
  cols.reserve(readouts.size());
  for (const Var& r : readouts) cols.push_back(row_dot(group_emb, r));
  return concat_cols(cols);
}

Var gumbel_softmax_weights(Var scores, const Matrix* noise, double tau, GumbelMode mode) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax_weights: temperature must be positive");
  Var logits = scores;
  if (noise != nullptr) {
    require_same_shape(scores.value(), *noise, "gumbel_softmax_weights");
    logits = add(scores, scores.tape->constant(*noise));
  }
  Var soft = softmax_rows(logits, tau);
  return mode == GumbelMode::Hard ? straight_through_onehot(soft) : soft;
}

Var aggregate_group_interest(Var omega, std::span<const Var> readouts) {
  if (readouts.empty() || omega.cols() != readouts.size()) {
    throw std::invalid_argument("aggregate_group_interest: omega width does not match interest count");
  }
  Var acc = mul_col(readouts[0], col(omega, 0));
  for (std::size_t n = 1; n < readouts.size(); ++n) acc = add(acc, mul_col(readouts[n], col(omega, n)));
  return acc;
}

}  // namespace ad

Matrix attention_readout(std::span<const Matrix> member_interests, const Matrix& w_att) {
  if (member_interests.empty()) throw std::invalid_argument("attention_readout: empty member list");
  const std::size_t d = w_att.cols();
  Matrix stacked(member_interests.size(), d);
  for (std::size_t i = 0; i < member_interests.size(); ++i) {
    if (member_interests[i].size() != d) throw std::invalid_argument("attention_readout: dimension mismatch");
    std::copy_n(member_interests[i].data(), d, stacked.data() + i * d);
  }
  GroupIndex one;
  one.offsets = {0, member_interests.size()};
  for (std::size_t i = 0; i < member_interests.size(); ++i) one.members.push_back(i);
  ad::Tape tape;
  return ad::attention_readout(tape.constant(stacked), tape.constant(w_att), one).value();
}

Matrix gumbel_softmax_weights(const Matrix& scores, const Matrix* noise, double tau, GumbelMode mode) {
  ad::Tape tape;
  return ad::gumbel_softmax_weights(tape.constant(scores), noise, tau, mode).value();
}

Matrix aggregate_group_interest(std::span<const double> omega, std::span<const Matrix> interests) {
  if (omega.size() != interests.size() || interests.empty()) {
    throw std::invalid_argument("aggregate_group_interest: omega/interest count mismatch");
  }
  Matrix out(interests[0].rows(), interests[0].cols());
  for (std::size_t n = 0; n < interests.size(); ++n) {
    require_same_shape(out, interests[n], "aggregate_group_interest");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += omega[n] * interests[n][j];
  }
  return out;
}

}  // namespace igrec
