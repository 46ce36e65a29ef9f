#include "igrec/propagation.hpp"

#include <stdexcept>

namespace igrec {

std::pair<ad::Var, ad::Var> propagate_layer(const NormAdjacency& adj, ad::Var users_k, ad::Var items_k) {
  if (users_k.rows() != adj.user_item.rows() || items_k.rows() != adj.user_item.cols() ||
      users_k.cols() != items_k.cols()) {
    throw std::invalid_argument("propagate_layer: embedding tables do not match the adjacency");
  }
  ad::Var next_users = ad::spmm(adj.user_item, adj.item_user, items_k);
  ad::Var next_items = ad::spmm(adj.item_user, adj.user_item, users_k);
  return {next_users, next_items};
}

LayerStack propagate(const NormAdjacency& adj, ad::Var users0, ad::Var items0, std::size_t layers) {
  LayerStack s;
  s.users.push_back(users0);
  s.items.push_back(items0);
  for (std::size_t k = 0; k < layers; ++k) {
    auto [u, v] = propagate_layer(adj, s.users.back(), s.items.back());
    s.users.push_back(u);
    s.items.push_back(v);
  }
  return s;
}

FinalEmbeddings fuse_layers(const LayerStack& stack) {
  if (stack.users.empty() || stack.users.size() != stack.items.size()) {
    throw std::invalid_argument("fuse_layers: empty or ragged layer stack");
  }
  FinalEmbeddings f{stack.users[0], stack.items[0]};
  for (std::size_t k = 1; k < stack.users.size(); ++k) {
    f.users = ad::add(f.users, stack.users[k]);
    f.items = ad::add(f.items, stack.items[k]);
  }
  return f;
}

namespace {
double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("score: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}
}  // namespace

double score_user_item(std::span<const double> user_final, std::span<const double> item_final) {
  return dot(user_final, item_final);
}

double score_group_item(std::span<const double> group_fused, std::span<const double> item_final) {
  return dot(group_fused, item_final);
}

}  // namespace igrec
