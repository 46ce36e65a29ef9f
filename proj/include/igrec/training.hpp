#pragma once

#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "igrec/config.hpp"
#include "igrec/data.hpp"
#include "igrec/eval.hpp"
#include "igrec/model.hpp"
#include "igrec/optim.hpp"

namespace igrec {

struct LossBreakdown {
  double l_bpr = 0.0;
  double l_group = 0.0;
  double reg_interest = 0.0;
  double reg_params = 0.0;  // ||Theta||^2
  double total = 0.0;
};

// eta1 * l_bpr + (1 - eta1) * l_group + eta2 * reg_interest + lambda * reg_params.
double combine_losses(const LossBreakdown& parts, double eta1, double eta2, double lambda);

// Batch mean of -log sigmoid(pos - neg).
double bpr_loss(std::span<const double> pos, std::span<const double> neg);
// sum_u sum_{p<q} m_pq * cos(i_u^p, i_u^q) with m_pq = [|cos| >= t].
double interest_regularizer(const InterestTensor& interests, double threshold);

namespace ad {
Var bpr_loss(Var pos, Var neg);
// Masked pairwise cosine sum over the given users. The mask is a constant.
Var interest_regularizer(std::span<const Var> interests, std::span<const std::size_t> users, double threshold);
}  // namespace ad

struct StepLoss {
  ad::Var objective;    // differentiable part (no parameter norm)
  LossBreakdown parts;  // parts.total includes lambda * reg_params
};

// Builds the training objective for one user batch and one group batch on
// top of a completed forward pass.
StepLoss compute_loss(const IGRecModel& model, const ParameterSet& params, const ForwardPass& fp,
                      std::span<const BprTriple> user_batch, std::span<const BprTriple> group_batch);

// Users whose interests enter the regularizer: batch anchors plus the members
// of the batch groups, sorted and unique.
std::vector<std::size_t> regularized_users(const IGRecModel& model, std::span<const BprTriple> user_batch,
                                           std::span<const BprTriple> group_batch);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Early stopping on a higher-is-better validation metric.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
  // Records one evaluation; returns true when training should stop.
  bool update(double metric);
  std::size_t best_index() const { return best_index_; }  // 1-based, 0 before any update
  double best() const { return best_; }
  bool improved_last() const { return improved_last_; }

 private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t best_index_ = 0;
  std::size_t since_best_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  bool improved_last_ = false;
};

struct Selection {
  std::size_t best_epoch = 0;  // 1-based
  std::size_t stop_epoch = 0;  // 1-based, last epoch that ran
};
Selection select_model(std::span<const double> history, std::size_t patience);

struct EpochLog {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double valid_ndcg10 = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainResult {
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
  std::size_t epochs_run = 0;
  std::vector<EpochLog> log;
};

class Trainer {
 public:
  Trainer(const Dataset& data, TrainConfig config);

  IGRecModel& model() { return model_; }
  const IGRecModel& model() const { return model_; }
  const TrainConfig& config() const { return model_.config(); }

  // One pass of mini-batch steps; returns epoch-mean losses.
  LossBreakdown train_epoch();
  // Single optimizer step on explicit batches (noise drawn from the trainer RNG).
  LossBreakdown step(std::span<const BprTriple> user_batch, std::span<const BprTriple> group_batch);

  double validation_ndcg10() const;

  // Trains up to config.epochs with early stopping and restores the best
  // parameters before returning.
  TrainResult fit(const std::function<void(const EpochLog&)>& on_epoch = {});

  std::size_t steps_per_epoch() const { return steps_per_epoch_; }

 private:
  const Dataset& data_;
  IGRecModel model_;
  AdamState adam_;
  BprSampler user_sampler_;
  BprSampler group_sampler_;
  std::mt19937_64 noise_rng_;
  std::size_t steps_per_epoch_;
  std::size_t epoch_ = 0;
};

}  // namespace igrec
