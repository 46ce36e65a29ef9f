#include <doctest.h>

#include <cmath>
#include <random>

#include "igrec/model.hpp"
#include "igrec/training.hpp"
#include "support.hpp"

using namespace igrec;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 4;
  c.interests = 2;
  c.layers = 2;
  c.tau = 1.0;
  c.threshold = 0.1;
  c.eta1 = 0.6;
  c.eta2 = 0.4;
  c.weight_decay = 1e-3;
  c.init_std = 0.5;
  c.gate_init_std = 0.5;
  c.user_batch = 6;
  c.group_batch = 3;
  c.seed = 17;
  return c;
}

const std::vector<BprTriple> kUserBatch{{0, 0, 2}, {1, 2, 0}, {2, 3, 1}, {3, 0, 1}, {4, 1, 0}, {0, 1, 3}};
const std::vector<BprTriple> kGroupBatch{{0, 1, 0}, {1, 3, 2}, {0, 2, 3}};

Dataset planted(std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.seed = seed;
  Dataset d = generate_synthetic(spec).dataset;
  PrepareOptions opts;
  opts.seed = seed;
  prepare(d, opts);
  return d;
}

TrainConfig planted_config() {
  TrainConfig c;
  c.dim = 16;
  c.interests = 3;
  c.layers = 2;
  c.user_batch = 256;
  c.group_batch = 32;
  c.lr = 0.01;
  c.epochs = 5;
  c.seed = 3;
  return c;
}

// Objective of one step with fixed batches and noise, as a function of params.
double objective_at(const IGRecModel& m, const ParameterSet& p, const Matrix* noise) {
  ad::Tape t;
  const ForwardPass fp = m.forward(t, p, noise);
  return compute_loss(m, p, fp, kUserBatch, kGroupBatch).objective.scalar();
}

double end_to_end_error(const TrainConfig& cfg) {
  const Dataset d = test::toy_dataset();
  const IGRecModel m(d, cfg);
  std::mt19937_64 rng(5);
  const Matrix noise = gumbel_matrix(d.n_groups, cfg.interests, rng);
  ad::Tape t;
  const ForwardPass fp = m.forward(t, &noise);
  const StepLoss loss = compute_loss(m, m.params(), fp, kUserBatch, kGroupBatch);
  t.backward(loss.objective);
  std::vector<Matrix> grads;
  for (const auto& v : fp.params) grads.push_back(t.grad(v));
  return finite_difference_check([&](const ParameterSet& p) { return objective_at(m, p, &noise); }, m.params(),
                                 grads, 1e-5, 1000);
}

}  // namespace

TEST_CASE("bpr loss examples") {
  const double z[] = {0.3}, z2[] = {0.3};
  CHECK(bpr_loss(z, z2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double a[] = {1.0}, b[] = {0.0};
  CHECK(std::abs(bpr_loss(a, b) - 0.3133) < 1e-4);
  CHECK(std::abs(bpr_loss(b, a) - 1.3133) < 1e-4);
  CHECK(bpr_loss(b, a) == doctest::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-15));
  const double big[] = {800.0};
  CHECK(bpr_loss(big, b) < 1e-300);
  CHECK_THROWS(bpr_loss(std::span<const double>{}, std::span<const double>{}));

  ad::Tape t;
  auto pos = t.constant(Matrix::from_rows({{1.0}, {0.0}, {2.0}}));
  auto neg = t.constant(Matrix::from_rows({{0.0}, {1.0}, {2.0}}));
  const double p[] = {1, 0, 2}, n[] = {0, 1, 2};
  CHECK(ad::bpr_loss(pos, neg).scalar() == doctest::Approx(bpr_loss(p, n)).epsilon(1e-15));
}

TEST_CASE("interest regularizer examples") {
  InterestTensor same{{Matrix::row({1, 2}), Matrix::row({1, 2})}};
  CHECK(interest_regularizer(same, 0.5) == doctest::Approx(1.0));
  InterestTensor orth{{Matrix::row({1, 0}), Matrix::row({0, 3})}};
  CHECK(interest_regularizer(orth, 0.5) == 0.0);
  InterestTensor three{{Matrix::row({1, 0}), Matrix::row({1, 1}), Matrix::row({-1, 0.2})}};
  const double s01 = 1 / std::sqrt(2.0), s02 = -1 / std::sqrt(1.04), s12 = -0.8 / (std::sqrt(2.0) * std::sqrt(1.04));
  CHECK(interest_regularizer(three, 0.0) == doctest::Approx(s01 + s02 + s12));
  CHECK(interest_regularizer(three, 0.9) == doctest::Approx(s02));

  std::mt19937_64 rng(1);
  InterestTensor rand{{test::random_matrix(7, 3, rng), test::random_matrix(7, 3, rng), test::random_matrix(7, 3, rng)}};
  ad::Tape t;
  std::vector<ad::Var> vars;
  for (const auto& m : rand.per_interest) vars.push_back(t.constant(m));
  const std::size_t all[] = {0, 1, 2, 3, 4, 5, 6};
  for (double th : {0.0, 0.3, 0.7})
    CHECK(ad::interest_regularizer(vars, all, th).scalar() == doctest::Approx(interest_regularizer(rand, th)).epsilon(1e-13));
}

TEST_CASE("regularizer mask is a constant under differentiation") {
  std::mt19937_64 rng(9);
  ParameterSet p;
  p.add("i0", test::random_matrix(6, 3, rng));
  p.add("i1", test::random_matrix(6, 3, rng));
  const std::size_t users[] = {0, 2, 3, 5};
  // Margin between every |cos| and the threshold so central differences never flip the mask.
  ad::Tape probe;
  auto c = ad::row_cosine(probe.constant(p[0]), probe.constant(p[1]));
  double t = 0.5;
  for (double v : c.value().values()) REQUIRE(std::abs(std::abs(v) - t) > 1e-3);
  const double err = test::gradient_error(p, [&](ad::Tape&, const std::vector<ad::Var>& v) {
    return ad::interest_regularizer(v, users, t);
  });
  CHECK(err < 1e-4);

  // Retained terms carry the plain cosine gradient; dropped terms carry none.
  ad::Tape tape;
  const ad::Var ins[] = {tape.parameter(p[0]), tape.parameter(p[1])};
  tape.backward(ad::interest_regularizer(ins, users, t));
  const Matrix g0 = tape.grad(ins[0]);
  ad::Tape ref;
  auto a = ref.parameter(p[0]);
  auto cos = ad::row_cosine(a, ref.constant(p[1]));
  ref.backward(ad::sum(cos));
  const Matrix gc = ref.grad(a);
  for (std::size_t u = 0; u < 6; ++u) {
    const bool in_batch = u == 0 || u == 2 || u == 3 || u == 5;
    const bool kept = in_batch && std::abs(cos.value()[u]) >= t;
    for (std::size_t j = 0; j < 3; ++j) CHECK(g0(u, j) == doctest::Approx(kept ? gc(u, j) : 0.0).epsilon(1e-14));
  }
}

TEST_CASE("loss decomposition on the toy graph") {
  const Dataset d = test::toy_dataset();
  const TrainConfig cfg = small_config();
  const IGRecModel m(d, cfg);
  std::mt19937_64 rng(3);
  const Matrix noise = gumbel_matrix(2, 2, rng);
  ad::Tape t;
  const ForwardPass fp = m.forward(t, &noise);
  const StepLoss loss = compute_loss(m, m.params(), fp, kUserBatch, kGroupBatch);

  // Independent component sums from the forward values.
  const Matrix& u = fp.user_final.value();
  const Matrix& v = fp.item_final.value();
  const Matrix& g = fp.group_fused->value();
  auto bpr = [&](const Matrix& a, const std::vector<BprTriple>& batch) {
    double s = 0.0;
    for (const auto& tr : batch) {
      const double x = score_user_item(a.row_span(tr.anchor), v.row_span(tr.positive)) -
                       score_user_item(a.row_span(tr.anchor), v.row_span(tr.negative));
      s += std::log1p(std::exp(-x));
    }
    return s / static_cast<double>(batch.size());
  };
  const auto users = regularized_users(m, kUserBatch, kGroupBatch);
  CHECK(users == std::vector<std::size_t>{0, 1, 2, 3, 4});
  InterestTensor sub;
  for (const auto& in : fp.interests) {
    Matrix rows(users.size(), cfg.dim);
    for (std::size_t r = 0; r < users.size(); ++r)
      for (std::size_t j = 0; j < cfg.dim; ++j) rows(r, j) = in.value()(users[r], j);
    sub.per_interest.push_back(rows);
  }
  const double l_bpr = bpr(u, kUserBatch), l_group = bpr(g, kGroupBatch);
  const double reg = interest_regularizer(sub, cfg.threshold) / static_cast<double>(users.size());
  const double norm = m.params().squared_norm();
  CHECK(std::abs(loss.parts.l_bpr - l_bpr) < 1e-10);
  CHECK(std::abs(loss.parts.l_group - l_group) < 1e-10);
  CHECK(std::abs(loss.parts.reg_interest - reg) < 1e-10);
  CHECK(std::abs(loss.parts.reg_params - norm) < 1e-10);
  const double total = cfg.eta1 * l_bpr + (1 - cfg.eta1) * l_group + cfg.eta2 * reg + cfg.weight_decay * norm;
  CHECK(std::abs(loss.parts.total - total) < 1e-10);
  CHECK(std::abs(loss.parts.total - combine_losses(loss.parts, cfg.eta1, cfg.eta2, cfg.weight_decay)) < 1e-12);
  CHECK(std::abs(loss.objective.scalar() - (total - cfg.weight_decay * norm)) < 1e-10);
}

TEST_CASE("eta1 = 1 drops the group term") {
  const Dataset d = test::toy_dataset();
  TrainConfig cfg = small_config();
  cfg.eta1 = 1.0;
  const IGRecModel m(d, cfg);
  ad::Tape t;
  const ForwardPass fp = m.forward(t, nullptr);
  const StepLoss loss = compute_loss(m, m.params(), fp, kUserBatch, kGroupBatch);
  CHECK(loss.parts.l_group > 0.0);
  CHECK(loss.parts.total == doctest::Approx(loss.parts.l_bpr + cfg.eta2 * loss.parts.reg_interest +
                                            cfg.weight_decay * loss.parts.reg_params)
                                .epsilon(1e-14));
}

TEST_CASE("variant reductions") {
  const Dataset d = test::toy_dataset();
  std::mt19937_64 rng(4);
  const Matrix noise = gumbel_matrix(2, 2, rng);
  auto run = [&](const TrainConfig& cfg, const Matrix* n) {
    const IGRecModel m(d, cfg);
    ad::Tape t;
    const ForwardPass fp = m.forward(t, n);
    return compute_loss(m, m.params(), fp, kUserBatch, kGroupBatch);
  };

  SUBCASE("C equals Full with eta2 = 0") {
    TrainConfig full = small_config();
    full.eta2 = 0.0;
    TrainConfig c = small_config();
    c.variant = Variant::NoInterestReg;
    const StepLoss a = run(full, &noise), b = run(c, &noise);
    CHECK(a.parts.total == b.parts.total);
    CHECK(a.objective.scalar() == b.objective.scalar());
    CHECK(b.parts.reg_interest == 0.0);
  }
  SUBCASE("B equals Full with uniform omega") {
    TrainConfig full = small_config();
    full.tau = 1e13;  // softmax(psi / tau) is uniform to machine precision
    TrainConfig b = small_config();
    b.variant = Variant::MeanInterests;
    const StepLoss x = run(full, nullptr), y = run(b, &noise);
    CHECK(std::abs(x.parts.total - y.parts.total) < 1e-10);
    CHECK(std::abs(x.parts.l_group - y.parts.l_group) < 1e-10);
  }
  SUBCASE("D forward is one-hot") {
    TrainConfig dcfg = small_config();
    dcfg.variant = Variant::HardGumbel;
    const IGRecModel m(d, dcfg);
    ad::Tape t;
    const ForwardPass fp = m.forward(t, &noise);
    for (std::size_t g = 0; g < 2; ++g) CHECK(fp.omega->value()(g, 0) + fp.omega->value()(g, 1) == 1.0);
    CHECK((fp.omega->value()(0, 0) == 0.0 || fp.omega->value()(0, 0) == 1.0));
  }
  SUBCASE("A has no interest parameters") {
    TrainConfig a = small_config();
    a.variant = Variant::NoMultiInterest;
    const IGRecModel m(d, a);
    CHECK(!m.params().contains("att"));
    CHECK(run(a, nullptr).parts.reg_interest == 0.0);
  }
}

TEST_CASE("structural baselines") {
  const Dataset d = test::toy_dataset();
  TrainConfig mf = small_config();
  mf.use_groups = false;
  mf.layers = 0;
  const IGRecModel m(d, mf);
  CHECK(m.params().size() == 2);
  ad::Tape t;
  const ForwardPass fp = m.forward(t, nullptr);
  CHECK(fp.user_final.value() == m.params().at("user_emb"));
  CHECK(fp.item_final.value() == m.params().at("item_emb"));
  CHECK(!fp.group_fused);
  const StepLoss loss = compute_loss(m, m.params(), fp, kUserBatch, kGroupBatch);
  CHECK(loss.parts.l_group == 0.0);
  CHECK(loss.parts.reg_interest == 0.0);
  CHECK(loss.objective.scalar() == doctest::Approx(loss.parts.l_bpr).epsilon(1e-15));

  TrainConfig lgcn = mf;
  lgcn.layers = 2;
  const IGRecModel l(d, lgcn);
  ad::Tape t2;
  const ForwardPass fl = l.forward(t2, nullptr);
  const FinalEmbeddings ref = fuse_layers(propagate(l.adjacency(), t2.constant(l.params().at("user_emb")),
                                                    t2.constant(l.params().at("item_emb")), 2));
  CHECK(fl.user_final.value() == ref.users.value());
}

TEST_CASE("end-to-end gradient check on the toy graph") {
  CHECK(end_to_end_error(small_config()) < 1e-4);
  for (Variant v : {Variant::NoMultiInterest, Variant::MeanInterests}) {
    TrainConfig c = small_config();
    c.variant = v;
    CHECK(end_to_end_error(c) < 1e-4);
  }
  for (InterestGenerator g : {InterestGenerator::OneFC, InterestGenerator::TwoFC, InterestGenerator::FreeEmbedding}) {
    TrainConfig c = small_config();
    c.generator = g;
    CHECK(end_to_end_error(c) < 1e-4);
  }
  for (Pooling p : {Pooling::Sum, Pooling::Max}) {
    TrainConfig c = small_config();
    c.pooling = p;
    CHECK(end_to_end_error(c) < 1e-4);
  }
}

TEST_CASE("select_model") {
  const double up[] = {0.1, 0.2, 0.3, 0.4};
  CHECK(select_model(up, 3).best_epoch == 4);
  const double h[] = {0.3, 0.5, 0.4, 0.4, 0.4};
  const Selection s = select_model(h, 3);
  CHECK(s.best_epoch == 2);
  CHECK(s.stop_epoch == 5);
  const Selection z = select_model(h, 0);
  CHECK(z.best_epoch == 2);
  CHECK(z.stop_epoch == 3);
  CHECK_THROWS(select_model(std::span<const double>{}, 1));
}

TEST_CASE("training loop") {
  const Dataset d = planted();

  SUBCASE("lr = 0 leaves parameters unchanged") {
    TrainConfig c = planted_config();
    c.lr = 0.0;
    Trainer tr(d, c);
    const ParameterSet before = tr.model().params();
    const LossBreakdown a = tr.train_epoch();
    const LossBreakdown b = tr.train_epoch();
    CHECK(tr.model().params() == before);
    CHECK(a.reg_params == b.reg_params);
  }
  SUBCASE("l_bpr decreases over the first epochs") {
    // Slow enough that the first 10 epochs stay above the sampling-noise floor.
    TrainConfig c = planted_config();
    c.lr = 0.001;
    Trainer tr(d, c);
    double prev = tr.train_epoch().l_bpr;
    for (int e = 1; e < 10; ++e) {
      const double cur = tr.train_epoch().l_bpr;
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SUBCASE("same seed gives identical parameters") {
    TrainConfig c = planted_config();
    c.epochs = 3;
    Trainer a(d, c), b(d, c);
    a.fit();
    b.fit();
    CHECK(a.model().params().checksum() == b.model().params().checksum());
    c.seed += 1;
    Trainer other(d, c);
    other.fit();
    CHECK(other.model().params().checksum() != a.model().params().checksum());
  }
  SUBCASE("fit restores the best validation parameters") {
    TrainConfig c = planted_config();
    c.epochs = 8;
    c.patience = 2;
    Trainer tr(d, c);
    const TrainResult r = tr.fit();
    CHECK(r.best_epoch >= 1);
    CHECK(r.epochs_run <= 8);
    CHECK(tr.validation_ndcg10() == doctest::Approx(r.best_valid).epsilon(1e-12));
    for (const auto& e : r.log) CHECK(e.valid_ndcg10 <= r.best_valid);
  }
  SUBCASE("non-finite loss aborts with diagnostics") {
    Trainer tr(d, planted_config());
    tr.model().params()[0][0] = std::nan("");
    CHECK_THROWS_AS(tr.train_epoch(), TrainingError);
  }
  SUBCASE("groups disabled skips the group batch") {
    TrainConfig c = planted_config();
    c.use_groups = false;
    Trainer tr(d, c);
    const LossBreakdown l = tr.train_epoch();
    CHECK(l.l_group == 0.0);
    CHECK(l.reg_interest == 0.0);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  for (auto [key, val] : std::vector<std::pair<std::string, nlohmann::json>>{
           {"eta1", 1.5}, {"t", -0.1}, {"threshold", 2.0}, {"tau", 0.0}, {"M", 0}, {"epochs", 0}}) {
    TrainConfig x;
    apply_config_key(x, key, val);
    CHECK_THROWS_AS(x.validate(), std::invalid_argument);
  }
  TrainConfig y;
  CHECK_THROWS(apply_config_key(y, "nope", 1));
  CHECK_THROWS(apply_config_key(y, "M", -2));
  CHECK_THROWS(apply_config_key(y, "variant", "Z"));
  TrainConfig z;
  z.tau = 0.123456789012345;
  z.variant = Variant::HardGumbel;
  z.generator = InterestGenerator::TwoFC;
  const TrainConfig back = config_from_json(to_json(z));
  CHECK(to_json(back) == to_json(z));
  CHECK(back.tau == z.tau);
}
