#include "igrec/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace igrec {

namespace ad {
Var fuse_group(Var group_emb, Var i_star) { return scale(add(group_emb, i_star), 0.5); }
}  // namespace ad

Matrix fuse_group(const Matrix& e_g, const Matrix& i_star) {
  require_same_shape(e_g, i_star, "fuse_group");
  Matrix out(e_g.rows(), e_g.cols());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (e_g[j] + i_star[j]) / 2.0;
  return out;
}

Matrix fuse_user(const Matrix& e_u, std::span<const Matrix> groups, Pooling pooling) {
  if (groups.empty()) return e_u;
  Matrix pooled = groups[0];
  for (std::size_t i = 1; i < groups.size(); ++i) {
    require_same_shape(pooled, groups[i], "fuse_user");
    for (std::size_t j = 0; j < pooled.size(); ++j) {
      pooled[j] = pooling == Pooling::Max ? std::max(pooled[j], groups[i][j]) : pooled[j] + groups[i][j];
    }
  }
  require_same_shape(e_u, pooled, "fuse_user");
  if (pooling == Pooling::Mean) {
    for (double& v : pooled.values()) v /= static_cast<double>(groups.size());
  }
  Matrix out(e_u.rows(), e_u.cols());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (e_u[j] + pooled[j]) / 2.0;
  return out;
}

UserFusion::UserFusion(const std::vector<std::vector<std::size_t>>& user_groups, std::size_t n_groups,
                       Pooling pooling)
    : pooling_(pooling) {
  const std::size_t n_users = user_groups.size();
  std::vector<Triplet> self, pool;
  offsets_.push_back(0);
  for (std::size_t u = 0; u < n_users; ++u) {
    const auto& gs = user_groups[u];
    self.push_back({u, u, gs.empty() ? 1.0 : 0.5});
    for (std::size_t g : gs) {
      if (g >= n_groups) throw std::out_of_range("UserFusion: group id out of range");
      const double w = pooling == Pooling::Mean ? 0.5 / static_cast<double>(gs.size()) : 0.5;
      pool.push_back({u, g, w});
      flat_groups_.push_back(g);
    }
    offsets_.push_back(flat_groups_.size());
  }
  self_ = SparseMatrix(n_users, n_users, std::move(self));
  self_t_ = self_.transposed();
  pool_ = SparseMatrix(n_users, n_groups, std::move(pool));
  pool_t_ = pool_.transposed();
}

ad::Var UserFusion::apply(ad::Var users, ad::Var fused_groups) const {
  if (users.rows() != self_.rows() || fused_groups.rows() != pool_.cols()) {
    throw std::invalid_argument("UserFusion::apply: table sizes do not match the fusion operator");
  }
  ad::Var own = ad::spmm(self_, self_t_, users);
  if (pooling_ == Pooling::Max) {
    ad::Var pooled = ad::segment_max(ad::gather_rows(fused_groups, flat_groups_), offsets_);
    return ad::add(own, ad::scale(pooled, 0.5));
  }
  return ad::add(own, ad::spmm(pool_, pool_t_, fused_groups));
}

}  // namespace igrec
