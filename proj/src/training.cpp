#include "igrec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "igrec/log.hpp"

namespace igrec {

double combine_losses(const LossBreakdown& p, double eta1, double eta2, double lambda) {
  return eta1 * p.l_bpr + (1.0 - eta1) * p.l_group + eta2 * p.reg_interest + lambda * p.reg_params;
}

double bpr_loss(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || pos.size() != neg.size()) throw std::invalid_argument("bpr_loss: empty or mismatched batch");
  double s = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) s -= ad::log_sigmoid_scalar(pos[i] - neg[i]);
  return s / static_cast<double>(pos.size());
}

double interest_regularizer(const InterestTensor& in, double threshold) {
  double total = 0.0;
  for (std::size_t u = 0; u < in.users(); ++u) {
    for (std::size_t p = 0; p < in.interests(); ++p) {
      for (std::size_t q = p + 1; q < in.interests(); ++q) {
        auto a = in.at(u, p);
        auto b = in.at(u, q);
        double dot = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
          dot += a[j] * b[j];
          aa += a[j] * a[j];
          bb += b[j] * b[j];
        }
        const double na = std::sqrt(aa), nb = std::sqrt(bb);
        if (na < 1e-12 || nb < 1e-12) continue;
        const double sim = dot / (na * nb);
        if (std::abs(sim) >= threshold) total += sim;
      }
    }
  }
  return total;
}

namespace ad {

Var bpr_loss(Var pos, Var neg) {
  if (pos.rows() == 0) throw std::invalid_argument("bpr_loss: empty batch");
  return scale(mean(log_sigmoid(sub(pos, neg))), -1.0);
}

Var interest_regularizer(std::span<const Var> interests, std::span<const std::size_t> users, double threshold) {
  if (interests.empty()) throw std::invalid_argument("interest_regularizer: no interests");
  Tape& tape = *interests.front().tape;
  std::vector<Var> rows;
  rows.reserve(interests.size());
  for (const Var& in : interests) rows.push_back(gather_rows(in, users));
  Var acc = tape.constant(Matrix(1, 1, 0.0));
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t q = p + 1; q < rows.size(); ++q) {
      Var c = row_cosine(rows[p], rows[q]);
      Matrix mask(c.rows(), 1);
      for (std::size_t r = 0; r < c.rows(); ++r) mask[r] = std::abs(c.value()[r]) >= threshold ? 1.0 : 0.0;
      acc = add(acc, sum(hadamard(c, tape.constant(std::move(mask)))));
    }
  }
  return acc;
}

}  // namespace ad

std::vector<std::size_t> regularized_users(const IGRecModel& model, std::span<const BprTriple> user_batch,
                                           std::span<const BprTriple> group_batch) {
  std::vector<std::size_t> users;
  for (const auto& t : user_batch) users.push_back(t.anchor);
  const GroupIndex& gi = model.groups();
  for (const auto& t : group_batch)
    for (std::size_t p = gi.offsets[t.anchor]; p < gi.offsets[t.anchor + 1]; ++p) users.push_back(gi.members[p]);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return users;
}

namespace {

ad::Var triple_loss(ad::Var anchors, ad::Var items, std::span<const BprTriple> batch) {
  std::vector<std::size_t> a, p, n;
  a.reserve(batch.size());
  p.reserve(batch.size());
  n.reserve(batch.size());
  for (const auto& t : batch) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    n.push_back(t.negative);
  }
  ad::Var ea = ad::gather_rows(anchors, a);
  ad::Var pos = ad::row_dot(ea, ad::gather_rows(items, p));
  ad::Var neg = ad::row_dot(ea, ad::gather_rows(items, n));
  return ad::bpr_loss(pos, neg);
}

}  // namespace

StepLoss compute_loss(const IGRecModel& model, const ParameterSet& params, const ForwardPass& fp,
                      std::span<const BprTriple> user_batch, std::span<const BprTriple> group_batch) {
  if (user_batch.empty()) throw std::invalid_argument("compute_loss: empty user batch");
  const TrainConfig& cfg = model.config();
  const double eta1 = cfg.effective_eta1();
  const double eta2 = cfg.effective_eta2();

  StepLoss out;
  ad::Var l_user = triple_loss(fp.user_final, fp.item_final, user_batch);
  out.parts.l_bpr = l_user.scalar();
  out.objective = ad::scale(l_user, eta1);

  if (fp.group_fused && !group_batch.empty()) {
    ad::Var l_group = triple_loss(*fp.group_fused, fp.item_final, group_batch);
    out.parts.l_group = l_group.scalar();
    out.objective = ad::add(out.objective, ad::scale(l_group, 1.0 - eta1));
  }

  if (eta2 > 0.0 && fp.interests.size() > 1) {
    const auto users = regularized_users(model, user_batch, group_batch);
    ad::Var reg = ad::scale(ad::interest_regularizer(fp.interests, users, cfg.threshold),
                            1.0 / static_cast<double>(users.size()));
    out.parts.reg_interest = reg.scalar();
    out.objective = ad::add(out.objective, ad::scale(reg, eta2));
  }

  out.parts.reg_params = params.squared_norm();
  out.parts.total = combine_losses(out.parts, eta1, eta2, cfg.weight_decay);
  return out;
}

bool EarlyStopper::update(double metric) {
  ++seen_;
  improved_last_ = metric > best_;
  if (improved_last_) {
    best_ = metric;
    best_index_ = seen_;
    since_best_ = 0;
    return false;
  }
  ++since_best_;
  return since_best_ > patience_ || patience_ == 0;
}

Selection select_model(std::span<const double> history, std::size_t patience) {
  if (history.empty()) throw std::invalid_argument("select_model: empty history");
  EarlyStopper stopper(patience);
  Selection s;
  for (std::size_t i = 0; i < history.size(); ++i) {
    s.stop_epoch = i + 1;
    if (stopper.update(history[i])) break;
  }
  s.best_epoch = stopper.best_index();
  return s;
}

Trainer::Trainer(const Dataset& data, TrainConfig config)
    : data_(data),
      model_(data, std::move(config)),
      adam_(AdamState::for_params(model_.params())),
      user_sampler_(index_by_split(data.user_items).train, data.n_items, model_.config().seed + 1),
      group_sampler_(index_by_split(data.group_items).train, data.n_items, model_.config().seed + 2),
      noise_rng_(model_.config().seed + 3) {
  const TrainConfig& cfg = model_.config();
  if (cfg.steps_per_epoch > 0) {
    steps_per_epoch_ = cfg.steps_per_epoch;
  } else {
    const std::size_t n_train = data.user_items.is_split() ? data.user_items.count(Split::Train)
                                                           : data.user_items.edges.size();
    steps_per_epoch_ = std::max<std::size_t>(1, (n_train + cfg.user_batch - 1) / cfg.user_batch);
  }
  if (user_sampler_.eligible_anchors() == 0) throw std::invalid_argument("Trainer: no user has train interactions");
}

LossBreakdown Trainer::step(std::span<const BprTriple> user_batch, std::span<const BprTriple> group_batch) {
  const TrainConfig& cfg = model_.config();
  ad::Tape tape;
  Matrix noise;
  const bool gumbel = cfg.uses_interests() && cfg.variant != Variant::MeanInterests;
  if (gumbel) noise = gumbel_matrix(model_.n_groups(), cfg.interests, noise_rng_);
  ForwardPass fp = model_.forward(tape, gumbel ? &noise : nullptr);
  StepLoss loss = compute_loss(model_, model_.params(), fp, user_batch, group_batch);
  if (!std::isfinite(loss.parts.total)) {
    std::ostringstream os;
    os << "non-finite loss at epoch " << epoch_ + 1 << ": l_bpr=" << loss.parts.l_bpr
       << " l_group=" << loss.parts.l_group << " reg_interest=" << loss.parts.reg_interest
       << " reg_params=" << loss.parts.reg_params;
    throw TrainingError(os.str());
  }
  tape.backward(loss.objective);
  std::vector<Matrix> grads;
  grads.reserve(fp.params.size());
  for (const auto& v : fp.params) grads.push_back(tape.grad(v));
  // d/dTheta of lambda * ||Theta||^2
  adam_step(model_.params(), grads, adam_, cfg.lr, 2.0 * cfg.weight_decay);
  return loss.parts;
}

LossBreakdown Trainer::train_epoch() {
  const TrainConfig& cfg = model_.config();
  LossBreakdown acc;
  for (std::size_t s = 0; s < steps_per_epoch_; ++s) {
    const auto ub = user_sampler_.sample(cfg.user_batch);
    std::vector<BprTriple> gb;
    if (cfg.use_groups) gb = group_sampler_.sample(cfg.group_batch);
    const LossBreakdown p = step(ub, gb);
    acc.l_bpr += p.l_bpr;
    acc.l_group += p.l_group;
    acc.reg_interest += p.reg_interest;
    acc.reg_params += p.reg_params;
    acc.total += p.total;
  }
  const double n = static_cast<double>(steps_per_epoch_);
  acc.l_bpr /= n;
  acc.l_group /= n;
  acc.reg_interest /= n;
  acc.reg_params /= n;
  acc.total /= n;
  ++epoch_;
  return acc;
}

double Trainer::validation_ndcg10() const {
  const std::size_t ks[] = {10};
  const Embeddings emb = model_.infer();
  return evaluate_embeddings(emb, data_, config().select_task, EvalTarget::Validation, ks).ndcg_at(10);
}

TrainResult Trainer::fit(const std::function<void(const EpochLog&)>& on_epoch) {
  const TrainConfig& cfg = model_.config();
  EarlyStopper stopper(cfg.patience);
  ParameterSet best = model_.params();
  TrainResult result;
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = e;
    log.loss = train_epoch();
    bool stop = false;
    if (e % cfg.eval_every == 0 || e == cfg.epochs) {
      log.valid_ndcg10 = validation_ndcg10();
      stop = stopper.update(log.valid_ndcg10);
      if (stopper.improved_last()) {
        best = model_.params();
        result.best_epoch = e;
        result.best_valid = log.valid_ndcg10;
      }
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log::info("epoch ", e, " loss=", log.loss.total, " l_bpr=", log.loss.l_bpr, " l_group=", log.loss.l_group,
              " reg=", log.loss.reg_interest, " valid_ndcg10=", log.valid_ndcg10, " (", log.seconds, "s)");
    result.log.push_back(log);
    result.epochs_run = e;
    if (on_epoch) on_epoch(log);
    if (stop) break;
  }
  if (result.best_epoch > 0) model_.params() = best;
  return result;
}

}  // namespace igrec
