#include "igrec/model.hpp"

#include <random>
#include <string>

namespace igrec {

namespace {

Matrix normal_matrix(std::size_t rows, std::size_t cols, double std, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  if (std > 0.0) {
    std::normal_distribution<double> normal(0.0, std);
    for (double& v : m.values()) v = normal(rng);
  }
  return m;
}

std::string indexed(const char* base, std::size_t n) { return std::string(base) + "/" + std::to_string(n); }

}  // namespace

IGRecModel::IGRecModel(const Dataset& data, TrainConfig config)
    : config_(std::move(config)),
      n_users_(data.n_users),
      n_items_(data.n_items),
      n_groups_(data.n_groups),
      adj_(build_norm_adjacency(data)),
      groups_(GroupIndex::from_lists(data.group_members)) {
  config_.validate();
  const std::size_t d = config_.dim;
  const std::size_t m = config_.interests;
  std::mt19937_64 rng(config_.seed);

  params_.add("user_emb", normal_matrix(n_users_, d, config_.init_std, rng));
  params_.add("item_emb", normal_matrix(n_items_, d, config_.init_std, rng));
  if (!config_.use_groups) return;

  params_.add("group_emb", normal_matrix(n_groups_, d, config_.init_std, rng));
  fusion_ = UserFusion(data.user_groups(), n_groups_, config_.pooling);

  std::vector<Triplet> mean;
  for (std::size_t g = 0; g < n_groups_; ++g) {
    const auto& mem = data.group_members[g];
    for (std::size_t u : mem) mean.push_back({g, u, 1.0 / static_cast<double>(mem.size())});
  }
  member_mean_ = SparseMatrix(n_groups_, n_users_, std::move(mean));
  member_mean_t_ = member_mean_.transposed();

  if (config_.variant == Variant::NoMultiInterest) return;

  params_.add("att", normal_matrix(1, d, config_.gate_init_std, rng));
  const double gs = config_.gate_init_std;
  for (std::size_t n = 0; n < m; ++n) {
    switch (config_.generator) {
      case InterestGenerator::SelfGate:
        params_.add(indexed("gate_w", n), normal_matrix(d, d, gs, rng));
        params_.add(indexed("gate_b", n), Matrix(1, d));
        break;
      case InterestGenerator::OneFC:
        params_.add(indexed("fc_w", n), normal_matrix(d, d, gs, rng));
        params_.add(indexed("fc_b", n), Matrix(1, d));
        break;
      case InterestGenerator::TwoFC:
        params_.add(indexed("fc1_w", n), normal_matrix(d, d, gs, rng));
        params_.add(indexed("fc1_b", n), Matrix(1, d));
        params_.add(indexed("fc2_w", n), normal_matrix(d, d, gs, rng));
        params_.add(indexed("fc2_b", n), Matrix(1, d));
        break;
      case InterestGenerator::FreeEmbedding:
        params_.add(indexed("interest_emb", n), normal_matrix(n_users_, d, config_.init_std, rng));
        break;
    }
  }
}

std::vector<ad::Var> IGRecModel::interest_vectors(const ParameterSet& p, const std::vector<ad::Var>& vars,
                                                  ad::Var users) const {
  auto var = [&](const std::string& name) { return vars[p.index_of(name)]; };
  std::vector<ad::Var> out;
  for (std::size_t n = 0; n < config_.interests; ++n) {
    switch (config_.generator) {
      case InterestGenerator::SelfGate:
        out.push_back(ad::self_gate(users, var(indexed("gate_w", n)), var(indexed("gate_b", n))));
        break;
      case InterestGenerator::OneFC:
        out.push_back(ad::add_row(ad::matmul(users, var(indexed("fc_w", n))), var(indexed("fc_b", n))));
        break;
      case InterestGenerator::TwoFC: {
        auto hidden = ad::sigmoid(ad::add_row(ad::matmul(users, var(indexed("fc1_w", n))), var(indexed("fc1_b", n))));
        out.push_back(ad::add_row(ad::matmul(hidden, var(indexed("fc2_w", n))), var(indexed("fc2_b", n))));
        break;
      }
      case InterestGenerator::FreeEmbedding:
        out.push_back(var(indexed("interest_emb", n)));
        break;
    }
  }
  return out;
}

ForwardPass IGRecModel::forward(ad::Tape& tape, const ParameterSet& p, const Matrix* noise) const {
  if (p.size() != params_.size()) throw std::invalid_argument("IGRecModel::forward: parameter set mismatch");
  ForwardPass fp;
  fp.params.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    require_same_shape(p[i], params_[i], "IGRecModel::forward");
    fp.params.push_back(tape.parameter(p[i]));
  }
  auto var = [&](const char* name) { return fp.params[p.index_of(name)]; };
  ad::Var users = var("user_emb");
  ad::Var items = var("item_emb");
  ad::Var users0 = users;

  if (config_.use_groups) {
    ad::Var group_emb = var("group_emb");
    ad::Var i_star;
    if (config_.variant == Variant::NoMultiInterest) {
      i_star = ad::spmm(member_mean_, member_mean_t_, users);
    } else {
      fp.interests = interest_vectors(p, fp.params, users);
      ad::Var att = var("att");
      std::vector<ad::Var> readouts;
      readouts.reserve(fp.interests.size());
      for (const auto& in : fp.interests) readouts.push_back(ad::attention_readout(in, att, groups_));
      ad::Var omega;
      if (config_.variant == Variant::MeanInterests) {
        omega = tape.constant(Matrix(n_groups_, config_.interests, 1.0 / static_cast<double>(config_.interests)));
      } else {
        ad::Var psi = ad::interest_scores(group_emb, readouts);
        omega = ad::gumbel_softmax_weights(psi, noise, config_.tau, config_.effective_gumbel());
      }
      fp.omega = omega;
      i_star = ad::aggregate_group_interest(omega, readouts);
    }
    ad::Var fused = ad::fuse_group(group_emb, i_star);
    fp.group_fused = fused;
    users0 = fusion_.apply(users, fused);
  }

  const FinalEmbeddings fin = fuse_layers(propagate(adj_, users0, items, config_.layers));
  fp.user_final = fin.users;
  fp.item_final = fin.items;
  return fp;
}

Embeddings IGRecModel::infer() const {
  ad::Tape tape;
  ForwardPass fp = forward(tape, nullptr);
  Embeddings e;
  e.user_final = fp.user_final.value();
  e.item_final = fp.item_final.value();
  if (fp.group_fused) e.group_fused = fp.group_fused->value();
  for (const auto& in : fp.interests) e.interests.per_interest.push_back(in.value());
  if (fp.omega) e.omega = fp.omega->value();
  return e;
}

std::size_t IGRecModel::interest_parameter_count() const {
  const std::size_t d = config_.dim;
  const std::size_t m = config_.interests;
  switch (config_.generator) {
    case InterestGenerator::SelfGate:
    case InterestGenerator::OneFC: return self_gate_parameter_count(m, d);
    case InterestGenerator::TwoFC: return 2 * self_gate_parameter_count(m, d);
    case InterestGenerator::FreeEmbedding: return m * n_users_ * d;
  }
  return 0;
}

std::string IGRecModel::interest_parameter_formula() const {
  switch (config_.generator) {
    case InterestGenerator::SelfGate:
    case InterestGenerator::OneFC: return "M x (d+1) x d";
    case InterestGenerator::TwoFC: return "2 x M x (d+1) x d";
    case InterestGenerator::FreeEmbedding: return "M x |U| x d";
  }
  return "?";
}

}  // namespace igrec
