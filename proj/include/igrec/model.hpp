#pragma once

#include <optional>
#include <vector>

#include "igrec/aggregator.hpp"
#include "igrec/autodiff.hpp"
#include "igrec/config.hpp"
#include "igrec/data.hpp"
#include "igrec/disentangler.hpp"
#include "igrec/fusion.hpp"
#include "igrec/optim.hpp"
#include "igrec/propagation.hpp"

namespace igrec {

// Tape nodes of one forward pass over the full graph.
struct ForwardPass {
  std::vector<ad::Var> params;          // aligned with the model's ParameterSet
  ad::Var user_final;                   // |U| x d
  ad::Var item_final;                   // |V| x d
  std::optional<ad::Var> group_fused;   // e*_g, |G| x d
  std::vector<ad::Var> interests;       // M x (|U| x d)
  std::optional<ad::Var> omega;         // |G| x M
};

// Values of a noise-free forward pass, used for ranking and analysis.
struct Embeddings {
  Matrix user_final;
  Matrix item_final;
  Matrix group_fused;
  InterestTensor interests;
  Matrix omega;
};

class IGRecModel {
 public:
  IGRecModel(const Dataset& data, TrainConfig config);

  const TrainConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t n_groups() const { return n_groups_; }
  const GroupIndex& groups() const { return groups_; }
  const NormAdjacency& adjacency() const { return adj_; }

  // `noise` (|G| x M Gumbel samples) is used only when the variant selects
  // interests by Gumbel-Softmax; pass null for the noise-free pass.
  ForwardPass forward(ad::Tape& tape, const ParameterSet& params, const Matrix* noise) const;
  ForwardPass forward(ad::Tape& tape, const Matrix* noise) const { return forward(tape, params_, noise); }

  Embeddings infer() const;

  // Trainable scalars spent on interest generation (Table-style comparison).
  std::size_t interest_parameter_count() const;
  std::string interest_parameter_formula() const;

 private:
  std::vector<ad::Var> interest_vectors(const ParameterSet& params, const std::vector<ad::Var>& vars,
                                        ad::Var users) const;

  TrainConfig config_;
  std::size_t n_users_;
  std::size_t n_items_;
  std::size_t n_groups_;
  NormAdjacency adj_;
  GroupIndex groups_;
  UserFusion fusion_;
  SparseMatrix member_mean_, member_mean_t_;  // |G| x |U|, 1/|U(g)|
  ParameterSet params_;
};

}  // namespace igrec
