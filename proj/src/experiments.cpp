#include "igrec/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

#include <omp.h>

#include "igrec/log.hpp"

namespace igrec {

TrialOutcome evaluate_model(const IGRecModel& model, const Dataset& data, std::span<const std::size_t> ks) {
  TrialOutcome out;
  out.config = model.config();
  const Embeddings emb = model.infer();
  const std::size_t k10[] = {10};
  out.valid_ndcg10 =
      evaluate_embeddings(emb, data, model.config().select_task, EvalTarget::Validation, k10).ndcg_at(10);
  out.user_test = evaluate_embeddings(emb, data, Task::User, EvalTarget::Test, ks);
  if (!emb.group_fused.empty()) out.group_test = evaluate_embeddings(emb, data, Task::Group, EvalTarget::Test, ks);
  if (emb.interests.interests() > 0) out.similarity = interest_similarity(emb.interests);
  return out;
}

TrialOutcome run_trial(const Dataset& data, const TrainConfig& config, std::span<const std::size_t> ks) {
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(data, config);
  TrainResult tr = trainer.fit();
  TrialOutcome out = evaluate_model(trainer.model(), data, ks);
  out.train = std::move(tr);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log::info("trial seed=", config.seed, " best_epoch=", out.train.best_epoch, " valid_ndcg10=", out.valid_ndcg10,
            " (", out.seconds, "s)");
  return out;
}

std::vector<TrialOutcome> run_trials(const Dataset& data, const std::vector<TrainConfig>& configs,
                                   std::span<const std::size_t> ks, std::size_t jobs) {
  std::vector<TrialOutcome> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const int n = static_cast<int>(configs.size());
  // Nested regions are inactive, so each trial runs its kernels on one thread.
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(std::max<std::size_t>(1, jobs)))
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = run_trial(data, configs[i], ks);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

std::vector<std::size_t> ks_vector(std::span<const std::size_t> ks) { return {ks.begin(), ks.end()}; }

}  // namespace

std::vector<RankingReport> collect_reports(const std::vector<TrialOutcome>& trials, std::span<const std::size_t> ks) {
  std::vector<RankingReport> reports;
  if (trials.empty()) return reports;
  RankingReport user{Task::User, ks_vector(ks), {}, {}, 0.0};
  RankingReport group{Task::Group, ks_vector(ks), {}, {}, 0.0};
  bool all_groups = true;
  for (const auto& t : trials) {
    user.seeds.push_back(t.config.seed);
    user.runs.push_back(t.user_test);
    user.wall_time_s += t.seconds;
    if (t.group_test) {
      group.seeds.push_back(t.config.seed);
      group.runs.push_back(*t.group_test);
      group.wall_time_s += t.seconds;
    } else {
      all_groups = false;
    }
  }
  reports.push_back(std::move(user));
  if (all_groups) reports.push_back(std::move(group));
  return reports;
}

Matrix mean_similarity(const std::vector<TrialOutcome>& trials) {
  Matrix acc;
  std::size_t n = 0;
  for (const auto& t : trials) {
    if (t.similarity.values().empty()) continue;
    if (n == 0) acc = Matrix(t.similarity.rows(), t.similarity.cols());
    for (std::size_t i = 0; i < acc.values().size(); ++i) acc[i] += t.similarity[i];
    ++n;
  }
  for (double& v : acc.values()) v /= static_cast<double>(std::max<std::size_t>(n, 1));
  return acc;
}

// ---- sweeps -----------------------------------------------------------------

SweepSpec parse_sweep_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("sweep grid must be a JSON object");
  SweepSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "base") {
      spec.base = value;
    } else if (key == "axes") {
      for (const auto& [axis, values] : value.items()) {
        if (!values.is_array() || values.empty())
          throw std::invalid_argument("sweep axis '" + axis + "' needs a nonempty list");
        spec.axes.emplace_back(axis, std::vector<nlohmann::json>(values.begin(), values.end()));
      }
    } else if (key == "mode") {
      const auto mode = value.get<std::string>();
      if (mode == "product") spec.product = true;
      else if (mode == "one_at_a_time") spec.product = false;
      else throw std::invalid_argument("unknown sweep mode '" + mode + "'");
    } else if (key == "seeds") {
      spec.seeds = value.get<std::vector<std::uint64_t>>();
    } else {
      throw std::invalid_argument("unknown sweep key '" + key + "'");
    }
  }
  return spec;
}

std::vector<SweepPoint> expand_sweep(const SweepSpec& spec, const TrainConfig& defaults) {
  const TrainConfig base = config_from_json(spec.base, defaults);
  std::vector<SweepPoint> points;
  auto make = [&](std::vector<std::pair<std::string, nlohmann::json>> coords) {
    SweepPoint p{base, std::move(coords)};
    for (const auto& [k, v] : p.coords) apply_config_key(p.config, k, v);
    p.config.validate();
    points.push_back(std::move(p));
  };
  if (spec.axes.empty()) {
    make({});
  } else if (spec.product) {
    std::vector<std::size_t> idx(spec.axes.size(), 0);
    while (true) {
      std::vector<std::pair<std::string, nlohmann::json>> coords;
      for (std::size_t a = 0; a < spec.axes.size(); ++a) coords.emplace_back(spec.axes[a].first, spec.axes[a].second[idx[a]]);
      make(std::move(coords));
      std::size_t a = spec.axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < spec.axes[a].second.size()) break;
        idx[a] = 0;
        if (a == 0) return points;
      }
    }
  } else {
    for (const auto& [axis, values] : spec.axes)
      for (const auto& v : values) make({{axis, v}});
  }
  return points;
}

std::vector<SweepRow> run_sweep(const Dataset& data, const std::vector<SweepPoint>& points,
                                const std::vector<std::uint64_t>& seeds, std::span<const std::size_t> ks,
                                std::size_t budget, std::size_t jobs) {
  if (budget < 1) throw std::invalid_argument("sweep budget must be at least 1");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  const std::size_t n = std::min(budget, points.size());
  if (n < points.size()) log::warn("sweep: budget ", budget, " covers ", n, " of ", points.size(), " grid points");

  std::vector<TrainConfig> configs;
  for (std::size_t p = 0; p < n; ++p)
    for (auto s : seeds) {
      configs.push_back(points[p].config);
      configs.back().seed = s;
    }
  auto outcomes = run_trials(data, configs, ks, jobs);

  std::vector<SweepRow> rows(n);
  for (std::size_t p = 0; p < n; ++p) {
    rows[p].point = points[p];
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      rows[p].trials.push_back(std::move(outcomes[p * seeds.size() + s]));
      rows[p].valid_ndcg10 += rows[p].trials.back().valid_ndcg10;
    }
    rows[p].valid_ndcg10 /= static_cast<double>(seeds.size());
  }
  return rows;
}

namespace {

struct MeanMetrics {
  std::vector<double> values;  // user recall, user ndcg, group recall, group ndcg per k
  bool has_group = true;
};

void write_metric_header(std::ostream& os, std::span<const std::size_t> ks) {
  for (const char* task : {"user", "group"})
    for (const char* metric : {"recall", "ndcg"})
      for (auto k : ks) os << ',' << task << '_' << metric << '@' << k;
}

std::vector<double> trial_metrics(const std::vector<TrialOutcome>& trials, std::span<const std::size_t> ks) {
  std::vector<double> out;
  const double n = static_cast<double>(trials.size());
  for (int task = 0; task < 2; ++task)
    for (int metric = 0; metric < 2; ++metric)
      for (auto k : ks) {
        double s = 0.0;
        bool missing = false;
        for (const auto& t : trials) {
          const MetricSet* m = task == 0 ? &t.user_test : (t.group_test ? &*t.group_test : nullptr);
          if (!m) {
            missing = true;
            break;
          }
          s += metric == 0 ? m->recall_at(k) : m->ndcg_at(k);
        }
        out.push_back(missing ? std::numeric_limits<double>::quiet_NaN() : s / n);
      }
  return out;
}

void write_values(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) {
    os << ',';
    if (!std::isnan(x)) os << x;
  }
}

std::string cell(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::vector<std::filesystem::path> write_sweep(const std::vector<SweepRow>& rows, const SweepSpec& spec,
                                               std::span<const std::size_t> ks, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&rows](std::size_t a, std::size_t b) { return rows[a].valid_ndcg10 > rows[b].valid_ndcg10; });

  {
    const auto path = dir / "sweep.csv";
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(10) << "rank,trial";
    for (const auto& [axis, _] : spec.axes) os << ',' << axis;
    os << ",seeds,valid_ndcg10";
    write_metric_header(os, ks);
    os << ",seconds\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
      const SweepRow& row = rows[order[r]];
      os << r + 1 << ',' << order[r] + 1;
      for (const auto& [axis, _] : spec.axes) {
        os << ',';
        auto it = std::find_if(row.point.coords.begin(), row.point.coords.end(),
                               [&axis](const auto& c) { return c.first == axis; });
        if (it != row.point.coords.end()) os << cell(it->second);
        else os << cell(spec.base.contains(axis) ? spec.base[axis] : to_json(row.point.config).value(axis, nlohmann::json()));
      }
      double seconds = 0.0;
      for (const auto& t : row.trials) seconds += t.seconds;
      os << ',' << row.trials.size() << ',' << row.valid_ndcg10;
      write_values(os, trial_metrics(row.trials, ks));
      os << ',' << seconds << '\n';
    }
    written.push_back(path);
  }

  for (const auto& [axis, values] : spec.axes) {
    const auto path = dir / ("sensitivity_" + axis + ".csv");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(10) << axis << ",points,valid_ndcg10";
    write_metric_header(os, ks);
    os << '\n';
    for (const auto& v : values) {
      std::vector<TrialOutcome> pooled;
      double valid = 0.0;
      std::size_t points = 0;
      for (const auto& row : rows) {
        auto it = std::find_if(row.point.coords.begin(), row.point.coords.end(),
                               [&axis](const auto& c) { return c.first == axis; });
        if (it == row.point.coords.end() || it->second != v) continue;
        pooled.insert(pooled.end(), row.trials.begin(), row.trials.end());
        valid += row.valid_ndcg10;
        ++points;
      }
      if (points == 0) continue;
      os << cell(v) << ',' << points << ',' << valid / static_cast<double>(points);
      write_values(os, trial_metrics(pooled, ks));
      os << '\n';
    }
    written.push_back(path);
  }
  return written;
}

// ---- ablations --------------------------------------------------------------

namespace {

std::vector<ComparisonEntry> run_entries(const Dataset& data, std::vector<ComparisonEntry> entries,
                                         const std::vector<std::uint64_t>& seeds, std::span<const std::size_t> ks,
                                         std::size_t jobs) {
  if (seeds.empty()) throw std::invalid_argument("comparison needs at least one seed");
  std::vector<TrainConfig> configs;
  for (const auto& e : entries)
    for (auto s : seeds) {
      configs.push_back(e.config);
      configs.back().seed = s;
    }
  auto outcomes = run_trials(data, configs, ks, jobs);
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t s = 0; s < seeds.size(); ++s) entries[i].trials.push_back(std::move(outcomes[i * seeds.size() + s]));
  return entries;
}

}  // namespace

std::vector<ComparisonEntry> run_ablation(const Dataset& data, const TrainConfig& base,
                                          const std::vector<Variant>& variants,
                                          const std::vector<std::uint64_t>& seeds, std::span<const std::size_t> ks,
                                          std::size_t jobs) {
  std::vector<Variant> order{Variant::Full};
  for (Variant v : variants)
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  std::vector<ComparisonEntry> entries;
  for (Variant v : order) {
    ComparisonEntry e;
    e.label = to_string(v);
    e.config = base;
    e.config.variant = v;
    e.config.use_groups = true;
    e.config.validate();
    entries.push_back(std::move(e));
  }
  return run_entries(data, std::move(entries), seeds, ks, jobs);
}

std::vector<ComparisonEntry> run_generator_comparison(const Dataset& data, const TrainConfig& base,
                                                      const std::vector<InterestGenerator>& generators,
                                                      const std::vector<std::uint64_t>& seeds,
                                                      std::span<const std::size_t> ks, std::size_t jobs) {
  std::vector<ComparisonEntry> entries;
  for (InterestGenerator g : generators) {
    ComparisonEntry e;
    e.label = to_string(g);
    e.config = base;
    e.config.generator = g;
    e.config.use_groups = true;
    e.config.validate();
    const IGRecModel probe(data, e.config);
    e.interest_params = probe.interest_parameter_count();
    e.formula = probe.interest_parameter_formula();
    entries.push_back(std::move(e));
  }
  return run_entries(data, std::move(entries), seeds, ks, jobs);
}

std::filesystem::path write_comparison(const std::vector<ComparisonEntry>& entries, std::span<const std::size_t> ks,
                                       const std::filesystem::path& file, bool with_params) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << std::setprecision(10) << "label,task,metric,k,mean,std,delta";
  if (with_params) os << ",interest_params,formula";
  os << '\n';
  if (entries.empty()) return file;

  auto stat = [](const ComparisonEntry& e, Task task, bool recall, std::size_t k) -> std::optional<Stat> {
    std::vector<double> v;
    for (const auto& t : e.trials) {
      const MetricSet* m = task == Task::User ? &t.user_test : (t.group_test ? &*t.group_test : nullptr);
      if (!m) return std::nullopt;
      v.push_back(recall ? m->recall_at(k) : m->ndcg_at(k));
    }
    return summarize(v);
  };

  for (const auto& e : entries)
    for (Task task : {Task::User, Task::Group})
      for (bool recall : {true, false})
        for (auto k : ks) {
          const auto s = stat(e, task, recall, k);
          if (!s) continue;
          const auto ref = stat(entries.front(), task, recall, k);
          os << e.label << ',' << to_string(task) << ',' << (recall ? "recall" : "ndcg") << ',' << k << ','
             << s->mean << ',' << s->std << ',';
          if (&e == &entries.front()) os << 0;
          else if (ref && ref->mean != 0.0) os << (s->mean - ref->mean) / ref->mean;
          if (with_params) os << ',' << e.interest_params << ",\"" << e.formula << '"';
          os << '\n';
        }
  return file;
}

}  // namespace igrec
