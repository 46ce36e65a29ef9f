#include "igrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "igrec/model.hpp"

namespace igrec {

namespace fs = std::filesystem;

double recall_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k) {
  if (relevant.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k) {
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

EmbeddingScorer::EmbeddingScorer(Matrix anchors, Matrix items) : anchors_(std::move(anchors)), items_(std::move(items)) {
  if (anchors_.cols() != items_.cols()) throw std::invalid_argument("EmbeddingScorer: dimension mismatch");
}

void EmbeddingScorer::score(std::size_t anchor, std::span<double> out) const {
  auto a = anchors_.row_span(anchor);
  for (std::size_t v = 0; v < items_.rows(); ++v) {
    auto b = items_.row_span(v);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    out[v] = s;
  }
}

StaticScorer::StaticScorer(std::size_t n_anchors, std::vector<double> item_scores)
    : n_anchors_(n_anchors), scores_(std::move(item_scores)) {}

void StaticScorer::score(std::size_t, std::span<double> out) const {
  std::copy(scores_.begin(), scores_.end(), out.begin());
}

namespace {

std::size_t k_index(const std::vector<std::size_t>& ks, std::size_t k) {
  auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw std::out_of_range("MetricSet: cutoff " + std::to_string(k) + " was not evaluated");
  return static_cast<std::size_t>(it - ks.begin());
}

bool excluded(std::initializer_list<std::span<const std::size_t>> exclude, std::size_t v) {
  for (const auto& e : exclude)
    if (std::binary_search(e.begin(), e.end(), v)) return true;
  return false;
}

struct AnchorResult {
  bool counted = false;
  std::vector<double> recall;
  std::vector<double> ndcg;
};

AnchorResult evaluate_anchor(const Scorer& scorer, const AnchorItems& items, EvalTarget target,
                             std::span<const std::size_t> ks, std::size_t a, std::vector<double>& buf) {
  AnchorResult r;
  const auto& relevant = target == EvalTarget::Validation ? items.valid[a] : items.test[a];
  if (relevant.empty()) return r;
  r.counted = true;
  scorer.score(a, buf);
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  std::vector<std::size_t> ranked;
  if (target == EvalTarget::Validation) {
    ranked = top_k(buf, {items.train[a]}, kmax);
  } else {
    ranked = top_k(buf, {items.train[a], items.valid[a]}, kmax);
  }
  for (std::size_t k : ks) {
    r.recall.push_back(recall_at_k(ranked, relevant, k));
    r.ndcg.push_back(ndcg_at_k(ranked, relevant, k));
  }
  return r;
}

MetricSet reduce(std::span<const AnchorResult> per_anchor, std::span<const std::size_t> ks) {
  MetricSet m;
  m.ks.assign(ks.begin(), ks.end());
  m.recall.assign(ks.size(), 0.0);
  m.ndcg.assign(ks.size(), 0.0);
  for (const auto& r : per_anchor) {
    if (!r.counted) continue;
    ++m.anchors;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      m.recall[i] += r.recall[i];
      m.ndcg[i] += r.ndcg[i];
    }
  }
  if (m.anchors > 0) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      m.recall[i] /= static_cast<double>(m.anchors);
      m.ndcg[i] /= static_cast<double>(m.anchors);
    }
  }
  return m;
}

void check_eval_inputs(const Scorer& scorer, const AnchorItems& items, std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("evaluate_ranking: no cutoffs");
  if (items.train.size() != scorer.n_anchors()) throw std::invalid_argument("evaluate_ranking: anchor count mismatch");
}

}  // namespace

double MetricSet::recall_at(std::size_t k) const { return recall[k_index(ks, k)]; }
double MetricSet::ndcg_at(std::size_t k) const { return ndcg[k_index(ks, k)]; }

std::vector<std::size_t> top_k(std::span<const double> scores,
                               std::initializer_list<std::span<const std::size_t>> exclude, std::size_t k) {
  std::vector<std::size_t> cand;
  cand.reserve(scores.size());
  for (std::size_t v = 0; v < scores.size(); ++v)
    if (!excluded(exclude, v)) cand.push_back(v);
  auto better = [&scores](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  };
  const std::size_t keep = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);
  cand.resize(keep);
  return cand;
}

MetricSet evaluate_ranking(const Scorer& scorer, const AnchorItems& items, EvalTarget target,
                           std::span<const std::size_t> ks) {
  check_eval_inputs(scorer, items, ks);
  const std::size_t n = scorer.n_anchors();
  std::vector<AnchorResult> results(n);
#pragma omp parallel
  {
    std::vector<double> buf(scorer.n_items());
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t a = 0; a < static_cast<std::int64_t>(n); ++a) {
      results[static_cast<std::size_t>(a)] = evaluate_anchor(scorer, items, target, ks, static_cast<std::size_t>(a), buf);
    }
  }
  return reduce(results, ks);
}

namespace serial {
MetricSet evaluate_ranking(const Scorer& scorer, const AnchorItems& items, EvalTarget target,
                           std::span<const std::size_t> ks) {
  check_eval_inputs(scorer, items, ks);
  std::vector<double> buf(scorer.n_items());
  std::vector<AnchorResult> results;
  for (std::size_t a = 0; a < scorer.n_anchors(); ++a) results.push_back(evaluate_anchor(scorer, items, target, ks, a, buf));
  return reduce(results, ks);
}
}  // namespace serial

MetricSet evaluate_embeddings(const Embeddings& emb, const Dataset& data, Task task, EvalTarget target,
                              std::span<const std::size_t> ks) {
  if (task == Task::User) {
    EmbeddingScorer scorer(emb.user_final, emb.item_final);
    return evaluate_ranking(scorer, index_by_split(data.user_items), target, ks);
  }
  if (emb.group_fused.empty()) throw std::invalid_argument("evaluate_embeddings: model has no group representation");
  EmbeddingScorer scorer(emb.group_fused, emb.item_final);
  return evaluate_ranking(scorer, index_by_split(data.group_items), target, ks);
}

std::vector<std::size_t> popularity_ranking(const Dataset& data, Task task) {
  const Interactions& x = task == Task::User ? data.user_items : data.group_items;
  std::vector<std::size_t> count(data.n_items, 0);
  for (std::size_t e = 0; e < x.edges.size(); ++e)
    if (x.split.empty() || x.split[e] == Split::Train) ++count[x.edges[e].item];
  std::vector<std::size_t> order(data.n_items);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&count](std::size_t a, std::size_t b) { return count[a] > count[b]; });
  return order;
}

StaticScorer popularity_baseline(const Dataset& data, Task task) {
  const auto order = popularity_ranking(data, task);
  // Strictly decreasing scores reproduce the ranking, including the id tie-break.
  std::vector<double> scores(data.n_items);
  for (std::size_t r = 0; r < order.size(); ++r) scores[order[r]] = static_cast<double>(order.size() - r);
  return StaticScorer(task == Task::User ? data.n_users : data.n_groups, std::move(scores));
}

double planted_interest_mass(const Matrix& omega, std::span<const std::size_t> group_interest) {
  if (group_interest.size() != omega.rows() || group_interest.empty())
    throw std::invalid_argument("planted_interest_mass: one label per group required");
  const std::size_t planted = *std::max_element(group_interest.begin(), group_interest.end()) + 1;
  if (planted > omega.cols()) throw std::invalid_argument("planted_interest_mass: fewer slots than planted interests");
  if (omega.cols() > 10) throw std::invalid_argument("planted_interest_mass: too many slots to enumerate");
  // mass[k][n]: total omega of slot n over groups planted with k
  std::vector<std::vector<double>> mass(planted, std::vector<double>(omega.cols(), 0.0));
  for (std::size_t g = 0; g < omega.rows(); ++g)
    for (std::size_t n = 0; n < omega.cols(); ++n) mass[group_interest[g]][n] += omega(g, n);
  std::vector<std::size_t> perm(omega.cols());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t k = 0; k < planted; ++k) s += mass[k][perm[k]];
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(omega.rows());
}

Matrix interest_similarity(const InterestTensor& in) {
  const std::size_t m = in.interests();
  Matrix sim(m, m);
  const std::size_t users = in.users();
  for (std::size_t p = 0; p < m; ++p) {
    sim(p, p) = 1.0;
    for (std::size_t q = p + 1; q < m; ++q) {
      double acc = 0.0;
      for (std::size_t u = 0; u < users; ++u) {
        auto a = in.at(u, p);
        auto b = in.at(u, q);
        double dot = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
          dot += a[j] * b[j];
          aa += a[j] * a[j];
          bb += b[j] * b[j];
        }
        const double na = std::sqrt(aa), nb = std::sqrt(bb);
        if (na >= 1e-12 && nb >= 1e-12) acc += std::abs(dot / (na * nb));
      }
      const double v = users ? acc / static_cast<double>(users) : 0.0;
      sim(p, q) = v;
      sim(q, p) = v;
    }
  }
  return sim;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Stat RankingReport::recall(std::size_t k) const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.recall_at(k));
  return summarize(v);
}

Stat RankingReport::ndcg(std::size_t k) const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.ndcg_at(k));
  return summarize(v);
}

ExportFiles export_report(const std::vector<RankingReport>& reports, const Matrix* similarity, const fs::path& dir,
                          const std::string& dataset, const nlohmann::json& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  ExportFiles files{dir / "metrics.csv", dir / "summary.json", {}};
  {
    std::ofstream csv(files.metrics_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error("export_report: cannot write " + files.metrics_csv.string());
    csv << "task,metric,k,seed,value\n" << std::setprecision(17);
    for (const auto& rep : reports) {
      for (const char* metric : {"recall", "ndcg"}) {
        for (std::size_t k : rep.ks) {
          for (std::size_t s = 0; s < rep.runs.size(); ++s) {
            const double v = std::string(metric) == "recall" ? rep.runs[s].recall_at(k) : rep.runs[s].ndcg_at(k);
            csv << to_string(rep.task) << ',' << metric << ',' << k << ',' << rep.seeds.at(s) << ',' << v << '\n';
          }
        }
      }
    }
  }
  nlohmann::json results = nlohmann::json::object();
  double wall = 0.0;
  for (const auto& rep : reports) {
    nlohmann::json task = nlohmann::json::object();
    for (std::size_t k : rep.ks) {
      const Stat r = rep.recall(k), n = rep.ndcg(k);
      task["recall@" + std::to_string(k)] = {{"mean", r.mean}, {"std", r.std}};
      task["ndcg@" + std::to_string(k)] = {{"mean", n.mean}, {"std", n.std}};
    }
    task["seeds"] = rep.seeds;
    results[to_string(rep.task)] = task;
    wall += rep.wall_time_s;
  }
  nlohmann::json summary{{"dataset", dataset}, {"config", config}, {"results", results}, {"wall_time_s", wall}};
  {
    std::ofstream js(files.summary_json, std::ios::trunc);
    if (!js) throw std::runtime_error("export_report: cannot write " + files.summary_json.string());
    js << summary.dump(2) << '\n';
  }
  if (similarity != nullptr) {
    files.interest_sim_csv = dir / "interest_sim.csv";
    std::ofstream csv(files.interest_sim_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error("export_report: cannot write " + files.interest_sim_csv.string());
    csv << std::setprecision(17);
    for (std::size_t p = 0; p < similarity->rows(); ++p) {
      for (std::size_t q = 0; q < similarity->cols(); ++q) csv << (q ? "," : "") << (*similarity)(p, q);
      csv << '\n';
    }
  }
  return files;
}

}  // namespace igrec
