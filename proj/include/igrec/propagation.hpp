#pragma once

// LightGCN propagation on the train user-item graph: linear normalized
// neighbor aggregation, unweighted layer sum, dot-product scoring.

#include <span>
#include <utility>
#include <vector>

#include "igrec/autodiff.hpp"
#include "igrec/data.hpp"

namespace igrec {

struct LayerStack {
  std::vector<ad::Var> users;  // layer 0..K
  std::vector<ad::Var> items;
};

struct FinalEmbeddings {
  ad::Var users;
  ad::Var items;
};

// users_{k+1} = A items_k, items_{k+1} = A^T users_k.
std::pair<ad::Var, ad::Var> propagate_layer(const NormAdjacency& adj, ad::Var users_k, ad::Var items_k);
LayerStack propagate(const NormAdjacency& adj, ad::Var users0, ad::Var items0, std::size_t layers);
FinalEmbeddings fuse_layers(const LayerStack& stack);

double score_user_item(std::span<const double> user_final, std::span<const double> item_final);
double score_group_item(std::span<const double> group_fused, std::span<const double> item_final);

}  // namespace igrec
