#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "igrec/eval.hpp"
#include "igrec/model.hpp"
#include "support.hpp"

using namespace igrec;
namespace fs = std::filesystem;

namespace {

using Ids = std::vector<std::size_t>;

// Scores given explicitly per anchor.
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::vector<std::vector<double>> s) : s_(std::move(s)) {}
  std::size_t n_anchors() const override { return s_.size(); }
  std::size_t n_items() const override { return s_.front().size(); }
  void score(std::size_t a, std::span<double> out) const override { std::copy(s_[a].begin(), s_[a].end(), out.begin()); }

 private:
  std::vector<std::vector<double>> s_;
};

class RandomScorer final : public Scorer {
 public:
  RandomScorer(std::size_t anchors, std::size_t items, std::uint64_t seed)
      : anchors_(anchors), items_(items), seed_(seed) {}
  std::size_t n_anchors() const override { return anchors_; }
  std::size_t n_items() const override { return items_; }
  void score(std::size_t a, std::span<double> out) const override {
    std::mt19937_64 rng(seed_ * 1000003 + a);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : out) v = u(rng);
  }

 private:
  std::size_t anchors_, items_;
  std::uint64_t seed_;
};

}  // namespace

TEST_CASE("recall and ndcg examples") {
  const Ids ranked{3, 1, 4, 0, 2};
  CHECK(recall_at_k(ranked, Ids{3}, 5) == 1.0);
  CHECK(recall_at_k(ranked, Ids{2, 7}, 5) == 0.5);
  CHECK(recall_at_k(ranked, Ids{7, 8}, 5) == 0.0);
  CHECK(recall_at_k(ranked, Ids{}, 5) == 0.0);
  CHECK(ndcg_at_k(ranked, Ids{3}, 5) == 1.0);
  CHECK(std::abs(ndcg_at_k(ranked, Ids{1}, 5) - 0.6309) < 1e-4);
  CHECK(ndcg_at_k(ranked, Ids{1}, 5) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
  CHECK(ndcg_at_k(ranked, Ids{1, 3}, 5) == doctest::Approx(1.0).epsilon(1e-15));
  // IDCG uses min(|relevant|, k) ideal hits.
  CHECK(ndcg_at_k(ranked, Ids{0, 1, 2, 3, 4, 5}, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ndcg_at_k(ranked, Ids{4}, 2) == 0.0);
}

TEST_CASE("ndcg monotonicity and bounds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Ids ranked(20);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::shuffle(ranked.begin(), ranked.end(), rng);
    Ids relevant;
    for (std::size_t i = 0; i < 20; ++i)
      if (rng() % 4 == 0) relevant.push_back(i);
    if (relevant.empty()) relevant.push_back(0);
    const std::size_t k = 1 + rng() % 20;
    const double before = ndcg_at_k(ranked, relevant, k);
    CHECK(before >= 0.0);
    CHECK(before <= 1.0 + 1e-15);
    CHECK(recall_at_k(ranked, relevant, k) <= 1.0);
    // Swap a relevant item with the non-relevant one directly above it.
    for (std::size_t r = 1; r < ranked.size(); ++r) {
      const bool rel_here = std::binary_search(relevant.begin(), relevant.end(), ranked[r]);
      const bool rel_above = std::binary_search(relevant.begin(), relevant.end(), ranked[r - 1]);
      if (rel_here && !rel_above) {
        Ids moved = ranked;
        std::swap(moved[r], moved[r - 1]);
        CHECK(ndcg_at_k(moved, relevant, k) >= before);
        break;
      }
    }
  }
}

TEST_CASE("top_k ordering and masking") {
  const double s[] = {0.5, 0.9, 0.9, 0.1, 0.7};
  CHECK(top_k(s, {}, 3) == Ids{1, 2, 4});
  const Ids mask{1, 4};
  CHECK(top_k(s, {mask}, 3) == Ids{2, 0, 3});
  CHECK(top_k(s, {mask}, 10).size() == 3);
}

TEST_CASE("evaluate_ranking matches a hand-enumerated oracle") {
  // 5 anchors x 8 items.
  const std::vector<std::vector<double>> scores{
      {8, 7, 6, 5, 4, 3, 2, 1}, {1, 2, 3, 4, 5, 6, 7, 8}, {0, 0, 0, 0, 0, 0, 0, 0},
      {5, 1, 7, 2, 8, 3, 6, 4}, {2, 9, 4, 1, 3, 8, 5, 7}};
  AnchorItems items;
  items.train = {{0}, {6, 7}, {}, {4}, {1}};
  items.valid = {{1}, {}, {0}, {2}, {}};
  items.test = {{2, 5}, {5}, {3}, {}, {0, 6}};
  const TableScorer scorer(scores);
  const std::size_t ks[] = {2, 5};
  const MetricSet m = evaluate_ranking(scorer, items, EvalTarget::Test, ks);
  // Rankings after masking train+valid:
  //  a0: 2 3 4 5 6 7       test {2,5}: hits at 1 and 4
  //  a1: 5 4 3 2 1 0       test {5}:   hit at 1
  //  a2: 1 2 3 4 5 6 7     test {3}:   hit at 3 (ties by id)
  //  a3: no test items, skipped
  //  a4: 5 7 6 2 4 0 3     test {0,6}: hits at 3 and 6
  const double l2 = 1.0, l3 = 1 / std::log2(3.0), l4 = 0.5, l5 = 1 / std::log2(5.0);
  const double r2 = (0.5 + 1.0 + 0.0 + 0.0) / 4, r5 = (1.0 + 1.0 + 1.0 + 0.5) / 4;
  const double n2 = (l2 / (l2 + l3) + 1.0 + 0.0 + 0.0) / 4;
  const double n5 = ((l2 + l5) / (l2 + l3) + 1.0 + l4 + l4 / (l2 + l3)) / 4;
  CHECK(m.anchors == 4);
  CHECK(m.recall_at(2) == doctest::Approx(r2).epsilon(1e-15));
  CHECK(m.recall_at(5) == doctest::Approx(r5).epsilon(1e-15));
  CHECK(m.ndcg_at(2) == doctest::Approx(n2).epsilon(1e-15));
  CHECK(m.ndcg_at(5) == doctest::Approx(n5).epsilon(1e-15));

  const MetricSet ref = serial::evaluate_ranking(scorer, items, EvalTarget::Test, ks);
  CHECK(ref.recall == m.recall);
  CHECK(ref.ndcg == m.ndcg);

  // Validation masks only train and scores against valid.
  const MetricSet v = evaluate_ranking(scorer, items, EvalTarget::Validation, ks);
  CHECK(v.anchors == 3);
  CHECK(v.recall_at(2) == 1.0);  // a0 -> 1, a2 -> 0, a3 -> 2 all rank first
}

TEST_CASE("oracle, random and masked models") {
  std::mt19937_64 rng(5);
  const std::size_t n_anchors = 400, n_items = 1000;
  AnchorItems items;
  items.train.resize(n_anchors);
  items.valid.resize(n_anchors);
  items.test.resize(n_anchors);
  std::vector<std::vector<double>> oracle(n_anchors, std::vector<double>(n_items, 0.0));
  for (std::size_t a = 0; a < n_anchors; ++a) {
    Ids perm(n_items);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    items.train[a] = Ids(perm.begin(), perm.begin() + 20);
    items.valid[a] = Ids(perm.begin() + 20, perm.begin() + 22);
    items.test[a] = Ids(perm.begin() + 22, perm.begin() + 23);
    for (auto* v : {&items.train[a], &items.valid[a], &items.test[a]}) std::sort(v->begin(), v->end());
    // Train items score highest of all, so masking must remove them.
    for (std::size_t i : items.train[a]) oracle[a][i] = 10.0;
    for (std::size_t i : items.test[a]) oracle[a][i] = 5.0;
  }
  const std::size_t ks[] = {5, 10};
  const MetricSet o = evaluate_ranking(TableScorer(oracle), items, EvalTarget::Test, ks);
  CHECK(o.recall_at(5) == 1.0);
  CHECK(o.ndcg_at(10) == 1.0);

  // Hypergeometric expectation 10 / 978 per anchor; 400 anchors plus seeds keep it inside +-0.005.
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    total += evaluate_ranking(RandomScorer(n_anchors, n_items, seed), items, EvalTarget::Test, ks).recall_at(10);
  CHECK(std::abs(total / 10 - 10.0 / 978.0) < 0.005);

  const RandomScorer r(n_anchors, n_items, 3);
  std::vector<double> buf(n_items);
  for (std::size_t a = 0; a < n_anchors; ++a) {
    r.score(a, buf);
    for (std::size_t i : top_k(buf, {items.train[a], items.valid[a]}, 10)) {
      CHECK(!std::binary_search(items.train[a].begin(), items.train[a].end(), i));
      CHECK(!std::binary_search(items.valid[a].begin(), items.valid[a].end(), i));
    }
  }
  const MetricSet a = evaluate_ranking(r, items, EvalTarget::Test, ks);
  const MetricSet b = serial::evaluate_ranking(r, items, EvalTarget::Test, ks);
  CHECK(a.recall == b.recall);
  CHECK(a.ndcg == b.ndcg);
  for (double v : a.recall) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("popularity baseline") {
  Dataset d = test::toy_dataset();
  // Counts over train user edges: item 1 and 3 three times, 0 and 2 twice.
  CHECK(popularity_ranking(d, Task::User) == Ids{1, 3, 0, 2});
  d.n_items = 6;
  d.user_items.n_items = 6;
  d.group_items.n_items = 6;
  CHECK(popularity_ranking(d, Task::User) == Ids{1, 3, 0, 2, 4, 5});
  const StaticScorer s = popularity_baseline(d, Task::Group);
  std::vector<double> a(6), b(6);
  s.score(0, a);
  s.score(1, b);
  CHECK(a == b);

  Dataset two;
  two.n_users = 2;
  two.n_items = 2;
  two.user_items = {2, 2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {Split::Train, Split::Train, Split::Train, Split::Test}};
  two.group_items = {0, 2, {}, {}};
  CHECK(popularity_ranking(two, Task::User) == Ids{0, 1});
}

TEST_CASE("interest similarity matrix") {
  std::mt19937_64 rng(2);
  InterestTensor t{{test::random_matrix(10, 4, rng), test::random_matrix(10, 4, rng), test::random_matrix(10, 4, rng)}};
  const Matrix s = interest_similarity(t);
  double expect01 = 0.0;
  for (std::size_t u = 0; u < 10; ++u) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      dot += t.per_interest[0](u, j) * t.per_interest[1](u, j);
      na += t.per_interest[0](u, j) * t.per_interest[0](u, j);
      nb += t.per_interest[1](u, j) * t.per_interest[1](u, j);
    }
    expect01 += std::abs(dot) / std::sqrt(na * nb);
  }
  CHECK(s(0, 1) == doctest::Approx(expect01 / 10).epsilon(1e-13));
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(s(p, p) == 1.0);
    for (std::size_t q = 0; q < 3; ++q) {
      CHECK(s(p, q) == s(q, p));
      CHECK((s(p, q) >= 0.0 && s(p, q) <= 1.0));
    }
  }
}

TEST_CASE("planted interest mass") {
  const Matrix omega = Matrix::from_rows({{0.1, 0.9, 0.0}, {0.2, 0.7, 0.1}, {0.8, 0.1, 0.1}, {0.3, 0.3, 0.4}});
  // Best assignment maps planted 0 -> slot 1, 1 -> slot 0, 2 -> slot 2.
  const std::size_t labels[] = {0, 0, 1, 2};
  CHECK(planted_interest_mass(omega, labels) == doctest::Approx((0.9 + 0.7 + 0.8 + 0.4) / 4));
  // Two planted interests cannot share a slot.
  const std::size_t same[] = {0, 0, 1, 1};
  CHECK(planted_interest_mass(omega, same) == doctest::Approx((0.9 + 0.7 + 0.8 + 0.3) / 4));
  const std::size_t bad[] = {0, 1, 2, 3};
  CHECK_THROWS(planted_interest_mass(omega, bad));
}

TEST_CASE("export_report files") {
  test::TempDir tmp;
  std::vector<RankingReport> reports;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Task task : {Task::User, Task::Group}) {
    RankingReport r;
    r.task = task;
    r.ks = {5, 10};
    for (std::uint64_t s = 0; s < 5; ++s) {
      r.seeds.push_back(100 + s);
      MetricSet m;
      m.ks = r.ks;
      m.recall = {u(rng), u(rng)};
      m.ndcg = {u(rng), u(rng)};
      m.anchors = 3;
      r.runs.push_back(m);
    }
    r.wall_time_s = 0.25;
    reports.push_back(r);
  }
  const Matrix sim = Matrix::from_rows({{1.0, 0.2}, {0.2, 1.0}});
  const ExportFiles f = export_report(reports, &sim, tmp.path, "toy", nlohmann::json{{"dim", 4}});

  std::ifstream csv(f.metrics_csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "task,metric,k,seed,value");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 40);

  std::ifstream js(f.summary_json);
  const nlohmann::json j = nlohmann::json::parse(js);
  CHECK(j["dataset"] == "toy");
  CHECK(j["config"]["dim"] == 4);
  CHECK(j["wall_time_s"].get<double>() == doctest::Approx(0.5));
  for (const auto& r : reports) {
    const auto& t = j["results"][to_string(r.task)];
    CHECK(t["ndcg@10"]["mean"].get<double>() == r.ndcg(10).mean);
    CHECK(t["recall@5"]["std"].get<double>() == r.recall(5).std);
    CHECK(t["seeds"].size() == 5);
  }

  std::ifstream sc(f.interest_sim_csv);
  std::vector<std::vector<double>> m;
  while (std::getline(sc, line)) {
    std::stringstream ss(line);
    std::string cell;
    m.emplace_back();
    while (std::getline(ss, cell, ',')) m.back().push_back(std::stod(cell));
  }
  REQUIRE(m.size() == 2);
  CHECK(m[0][0] == 1.0);
  CHECK(m[1][1] == 1.0);

  CHECK_THROWS(export_report(reports, nullptr, "/proc/igrec_no_such_dir", "toy", {}));
}

TEST_CASE("summary statistics") {
  const double one[] = {0.25};
  CHECK(summarize(one).std == 0.0);
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  const Stat s = summarize(xs);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
}

TEST_CASE("evaluate_embeddings uses the task's anchors") {
  Dataset d = test::toy_dataset();
  TrainConfig c;
  c.dim = 4;
  c.interests = 2;
  const IGRecModel m(d, c);
  const Embeddings e = m.infer();
  d.user_items.split[0] = Split::Test;
  d.user_items.split[4] = Split::Test;
  const std::size_t ks[] = {2};
  const MetricSet us = evaluate_embeddings(e, d, Task::User, EvalTarget::Test, ks);
  CHECK(us.anchors == 2);
  const MetricSet direct = evaluate_ranking(EmbeddingScorer(e.user_final, e.item_final),
                                            index_by_split(d.user_items), EvalTarget::Test, ks);
  CHECK(direct.recall == us.recall);
  const MetricSet gs = evaluate_embeddings(e, d, Task::Group, EvalTarget::Test, ks);
  CHECK(gs.anchors == 0);
}
