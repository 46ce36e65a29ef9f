#pragma once

// e*_g = (e_g + i*_g) / 2 and e_u_hat = (e_u + Pool_{g in G(u)} e*_g) / 2.
// Users without groups keep e_u unchanged.

#include <span>
#include <vector>

#include "igrec/autodiff.hpp"
#include "igrec/tensor.hpp"

namespace igrec {

enum class Pooling { Mean, Max, Sum };

Matrix fuse_group(const Matrix& e_g, const Matrix& i_star);
Matrix fuse_user(const Matrix& e_u, std::span<const Matrix> groups, Pooling pooling = Pooling::Mean);

// Precomputed sparse operators for batched user fusion.
class UserFusion {
 public:
  UserFusion() = default;
  UserFusion(const std::vector<std::vector<std::size_t>>& user_groups, std::size_t n_groups, Pooling pooling);

  ad::Var apply(ad::Var users, ad::Var fused_groups) const;
  Pooling pooling() const { return pooling_; }

 private:
  Pooling pooling_ = Pooling::Mean;
  SparseMatrix self_, self_t_;  // diag: 1/2 for users with groups, 1 otherwise
  SparseMatrix pool_, pool_t_;  // |U| x |G|, 1/(2|G(u)|) for mean, 1/2 for sum
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> flat_groups_;
};

namespace ad {
Var fuse_group(Var group_emb, Var i_star);
}  // namespace ad

}  // namespace igrec
