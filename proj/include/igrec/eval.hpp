#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "igrec/config.hpp"
#include "igrec/data.hpp"
#include "igrec/disentangler.hpp"
#include "igrec/tensor.hpp"

namespace igrec {

struct Embeddings;

// Binary-relevance metrics. `relevant` must be sorted; `ranked` holds item ids
// best first. An empty relevant set yields 0 (callers skip such anchors).
double recall_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k);
double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k);

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t n_anchors() const = 0;
  virtual std::size_t n_items() const = 0;
  virtual void score(std::size_t anchor, std::span<double> out) const = 0;
};

// Dot product of anchor rows with item rows.
class EmbeddingScorer final : public Scorer {
 public:
  EmbeddingScorer(Matrix anchors, Matrix items);
  std::size_t n_anchors() const override { return anchors_.rows(); }
  std::size_t n_items() const override { return items_.rows(); }
  void score(std::size_t anchor, std::span<double> out) const override;

 private:
  Matrix anchors_;
  Matrix items_;
};

// Same item scores for every anchor.
class StaticScorer final : public Scorer {
 public:
  StaticScorer(std::size_t n_anchors, std::vector<double> item_scores);
  std::size_t n_anchors() const override { return n_anchors_; }
  std::size_t n_items() const override { return scores_.size(); }
  void score(std::size_t anchor, std::span<double> out) const override;

 private:
  std::size_t n_anchors_;
  std::vector<double> scores_;
};

enum class EvalTarget { Validation, Test };

struct MetricSet {
  std::vector<std::size_t> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  std::size_t anchors = 0;  // anchors with a nonempty relevant set

  double recall_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;
};

// Items sorted by descending score (ties: smaller id first), skipping
// `exclude` (sorted lists), truncated to k.
std::vector<std::size_t> top_k(std::span<const double> scores,
                               std::initializer_list<std::span<const std::size_t>> exclude, std::size_t k);

// Full ranking over all items. Validation masks train and scores against
// valid; Test masks train + valid and scores against test.
MetricSet evaluate_ranking(const Scorer& scorer, const AnchorItems& items, EvalTarget target,
                           std::span<const std::size_t> ks);
namespace serial {
MetricSet evaluate_ranking(const Scorer& scorer, const AnchorItems& items, EvalTarget target,
                           std::span<const std::size_t> ks);
}

MetricSet evaluate_embeddings(const Embeddings& emb, const Dataset& data, Task task, EvalTarget target,
                              std::span<const std::size_t> ks);

// Items ranked by train interaction count of the task's anchors, ties by id.
std::vector<std::size_t> popularity_ranking(const Dataset& data, Task task);
StaticScorer popularity_baseline(const Dataset& data, Task task);

// Mean |cosine| between interest pairs over users; diagonal fixed to 1.
Matrix interest_similarity(const InterestTensor& interests);

// Mean omega mass on each group's planted interest after matching learned
// slots to planted interests by the best injective assignment. Needs
// omega.cols() >= the number of planted interests.
double planted_interest_mass(const Matrix& omega, std::span<const std::size_t> group_interest);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};
Stat summarize(std::span<const double> values);

struct RankingReport {
  Task task = Task::User;
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricSet> runs;  // one per seed
  double wall_time_s = 0.0;

  Stat recall(std::size_t k) const;
  Stat ndcg(std::size_t k) const;
};

struct ExportFiles {
  std::filesystem::path metrics_csv;
  std::filesystem::path summary_json;
  std::filesystem::path interest_sim_csv;  // empty when no similarity given
};

ExportFiles export_report(const std::vector<RankingReport>& reports, const Matrix* similarity,
                          const std::filesystem::path& dir, const std::string& dataset,
                          const nlohmann::json& config);

}  // namespace igrec
