#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "igrec/config.hpp"
#include "igrec/data.hpp"
#include "igrec/eval.hpp"
#include "igrec/model.hpp"
#include "igrec/training.hpp"

namespace igrec {

struct TrialOutcome {
  TrainConfig config;
  TrainResult train;
  double valid_ndcg10 = 0.0;
  MetricSet user_test;
  std::optional<MetricSet> group_test;
  Matrix similarity;  // empty without interests
  double seconds = 0.0;
};

// Test-set metrics for both tasks (group only when the model has groups).
TrialOutcome evaluate_model(const IGRecModel& model, const Dataset& data, std::span<const std::size_t> ks);
// Trains with early stopping, then evaluates the restored best parameters.
TrialOutcome run_trial(const Dataset& data, const TrainConfig& config, std::span<const std::size_t> ks);
// Independent trials, `jobs` at a time; results in input order.
std::vector<TrialOutcome> run_trials(const Dataset& data, const std::vector<TrainConfig>& configs,
                                     std::span<const std::size_t> ks, std::size_t jobs);

// One report per task present in every trial; seeds taken from trial configs.
std::vector<RankingReport> collect_reports(const std::vector<TrialOutcome>& trials, std::span<const std::size_t> ks);
// Element-wise mean of the trials' similarity matrices (empty if none).
Matrix mean_similarity(const std::vector<TrialOutcome>& trials);

// ---- sweeps -----------------------------------------------------------------

struct SweepSpec {
  nlohmann::json base = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
  bool product = true;  // false: vary one axis at a time around base
  std::vector<std::uint64_t> seeds;
};
// {"base": {...}, "axes": {"M": [2,3]}, "mode": "product"|"one_at_a_time", "seeds": [..]}
SweepSpec parse_sweep_spec(const nlohmann::json& j);

struct SweepPoint {
  TrainConfig config;
  std::vector<std::pair<std::string, nlohmann::json>> coords;
};
std::vector<SweepPoint> expand_sweep(const SweepSpec& spec, const TrainConfig& defaults);

struct SweepRow {
  SweepPoint point;
  std::vector<TrialOutcome> trials;  // one per seed
  double valid_ndcg10 = 0.0;         // mean over seeds
};

// Runs at most `budget` points, `jobs` trials concurrently.
std::vector<SweepRow> run_sweep(const Dataset& data, const std::vector<SweepPoint>& points,
                                const std::vector<std::uint64_t>& seeds, std::span<const std::size_t> ks,
                                std::size_t budget, std::size_t jobs);
// sweep.csv ranked by validation NDCG@10, plus sensitivity_<axis>.csv per axis.
std::vector<std::filesystem::path> write_sweep(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                                               std::span<const std::size_t> ks, const std::filesystem::path& dir);

// ---- ablations --------------------------------------------------------------

struct ComparisonEntry {
  std::string label;
  TrainConfig config;
  std::vector<TrialOutcome> trials;
  std::size_t interest_params = 0;
  std::string formula;
};

std::vector<ComparisonEntry> run_ablation(const Dataset& data, const TrainConfig& base,
                                          const std::vector<Variant>& variants,
                                          const std::vector<std::uint64_t>& seeds, std::span<const std::size_t> ks,
                                          std::size_t jobs);
std::vector<ComparisonEntry> run_generator_comparison(const Dataset& data, const TrainConfig& base,
                                                      const std::vector<InterestGenerator>& generators,
                                                      const std::vector<std::uint64_t>& seeds,
                                                      std::span<const std::size_t> ks, std::size_t jobs);

// Rows: label, task, metric, k, mean, std, delta (relative to the first entry).
// With `with_params`, adds interest_params and formula columns.
std::filesystem::path write_comparison(const std::vector<ComparisonEntry>& entries, std::span<const std::size_t> ks,
                                       const std::filesystem::path& file, bool with_params);

}  // namespace igrec
