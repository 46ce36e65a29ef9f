#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igrec/checkpoint.hpp"
#include "igrec/config.hpp"
#include "igrec/data.hpp"
#include "igrec/eval.hpp"
#include "igrec/experiments.hpp"
#include "igrec/kernels.hpp"
#include "igrec/log.hpp"
#include "igrec/training.hpp"

#ifndef IGREC_VERSION
#define IGREC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace igrec;

namespace {

struct Common {
  std::string data;
  std::string out;
  std::string config_file;
  std::vector<std::string> overrides;
};

std::string g_command;
std::vector<std::string> g_argv;

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

TrainConfig resolve_config(const Common& c) {
  TrainConfig cfg;
  if (!c.config_file.empty()) {
    std::ifstream is(c.config_file);
    if (!is) throw std::runtime_error("cannot open config " + c.config_file);
    cfg = config_from_json(json::parse(is));
  }
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_config_key(cfg, kv.substr(0, eq), parse_value(kv.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const long v = std::stol(tok);
    if (v <= 0) throw std::invalid_argument("cutoffs must be positive");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw std::invalid_argument("no cutoffs given");
  return ks;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(first + i);
  return s;
}

void write_manifest(const fs::path& dir, const json& config, const std::string& fingerprint,
                    const std::vector<std::uint64_t>& seeds) {
  fs::create_directories(dir);
  json m = {
      {"command", g_command},
      {"argv", g_argv},
      {"config", config},
      {"dataset_fingerprint", fingerprint},
      {"seeds", seeds},
      {"output_dir", fs::absolute(dir).lexically_normal().string()},
      {"version", IGREC_VERSION},
  };
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
  os << m.dump(2) << '\n';
}

// ---- prepare ----------------------------------------------------------------

struct PrepareArgs {
  std::string dir;
  std::string out;
  bool synthesize = false;
  std::size_t cap = 30;
  std::uint64_t seed = 2024;
  double subsample = 1.0;
};

int cmd_prepare(const PrepareArgs& a) {
  Dataset d = load_dataset(a.dir, false);
  const fs::path out = a.out.empty() ? fs::path(a.dir) : fs::path(a.out);
  if (a.subsample < 1.0) {
    d = subsample(d, a.subsample, a.seed);
    if (a.out.empty()) throw std::invalid_argument("--subsample needs --out (inputs are never overwritten)");
  }
  PrepareOptions opts;
  opts.seed = a.seed;
  opts.synthesize_groups = a.synthesize;
  opts.cap = a.cap;
  prepare(d, opts);

  if (!a.out.empty()) {
    save_dataset(out, d);
    if (a.synthesize) fs::rename(out / files::kGroupItems, out / files::kSynthGroupItems);
  } else {
    if (a.synthesize) save_interactions(out / files::kSynthGroupItems, d.group_items.edges);
  }
  save_split(out / files::kUserSplit, d.user_items);
  save_split(out / files::kGroupSplit, d.group_items);

  json summary = {{"users", d.n_users}, {"items", d.n_items}, {"groups", d.n_groups}};
  for (auto [name, x] : {std::pair{"user_items", &d.user_items}, std::pair{"group_items", &d.group_items}})
    summary[name] = {{"train", x->count(Split::Train)}, {"valid", x->count(Split::Valid)}, {"test", x->count(Split::Test)}};
  std::cout << summary.dump() << '\n';
  write_manifest(out, {{"seed", a.seed}, {"synthesize_groups", a.synthesize}, {"cap", a.cap}, {"subsample", a.subsample}},
                 dataset_fingerprint(d), {a.seed});
  return 0;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const Common& c) {
  const Dataset data = load_dataset(c.data);
  const TrainConfig cfg = resolve_config(c);
  const fs::path out(c.out);
  fs::create_directories(out);

  std::ofstream log_csv(out / "train_log.csv", std::ios::trunc);
  log_csv << std::setprecision(10) << "epoch,l_bpr,l_group,reg_interest,reg_params,total,valid_ndcg10,seconds\n";
  Trainer trainer(data, cfg);
  const TrainResult r = trainer.fit([&log_csv](const EpochLog& e) {
    log_csv << e.epoch << ',' << e.loss.l_bpr << ',' << e.loss.l_group << ',' << e.loss.reg_interest << ','
            << e.loss.reg_params << ',' << e.loss.total << ',';
    if (!std::isnan(e.valid_ndcg10)) log_csv << e.valid_ndcg10;
    log_csv << ',' << e.seconds << '\n';
    log_csv.flush();
  });

  Checkpoint ck;
  ck.config = cfg;
  ck.dataset_fingerprint = dataset_fingerprint(data);
  ck.n_users = data.n_users;
  ck.n_items = data.n_items;
  ck.n_groups = data.n_groups;
  ck.best_epoch = r.best_epoch;
  ck.best_valid = r.best_valid;
  ck.params = trainer.model().params();
  save_checkpoint(out / "checkpoint.bin", ck);

  std::cout << json{{"best_epoch", r.best_epoch},
                    {"best_valid_ndcg10", r.best_valid},
                    {"epochs_run", r.epochs_run},
                    {"checkpoint", (out / "checkpoint.bin").string()},
                    {"checkpoint_hash", file_hash(out / "checkpoint.bin")}}
                   .dump()
            << '\n';
  write_manifest(out, to_json(cfg), ck.dataset_fingerprint, {cfg.seed});
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  bool popularity = false;
  std::string task = "both";
  std::string ks = "5,10";
  std::size_t seeds = 5;
  std::size_t jobs = 1;
};

std::vector<Task> tasks_of(const std::string& s) {
  if (s == "both") return {Task::User, Task::Group};
  return {task_from_string(s)};
}

int cmd_eval(const EvalArgs& a) {
  if (a.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  const Dataset data = load_dataset(a.common.data);
  const auto ks = parse_ks(a.ks);
  const auto tasks = tasks_of(a.task);
  const fs::path out(a.common.out);
  const std::string fp = dataset_fingerprint(data);
  std::vector<RankingReport> reports;
  Matrix similarity;
  json config_echo;
  std::vector<std::uint64_t> seeds;
  const auto t0 = std::chrono::steady_clock::now();

  if (a.popularity) {
    seeds = seed_list(1, a.seeds);
    config_echo = {{"model", "popularity"}};
    for (Task t : tasks) {
      RankingReport rep{t, ks, {}, {}, 0.0};
      const StaticScorer scorer = popularity_baseline(data, t);
      const AnchorItems items = index_by_split(t == Task::User ? data.user_items : data.group_items);
      // The ranking is deterministic; every seed repeats the same evaluation.
      for (auto s : seeds) {
        rep.seeds.push_back(s);
        rep.runs.push_back(evaluate_ranking(scorer, items, EvalTarget::Test, ks));
      }
      rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      reports.push_back(std::move(rep));
    }
  } else {
    if (a.checkpoint.empty()) throw std::invalid_argument("eval needs --checkpoint or --popularity");
    Checkpoint ck = load_checkpoint(a.checkpoint);
    if (ck.dataset_fingerprint != fp || ck.n_users != data.n_users || ck.n_items != data.n_items ||
        ck.n_groups != data.n_groups)
      throw CheckpointError("checkpoint was trained on a different dataset (fingerprint " + ck.dataset_fingerprint +
                            ", data " + fp + ")");
    IGRecModel model(data, ck.config);
    if (model.params().size() != ck.params.size())
      throw CheckpointError("checkpoint tensors do not match its config");
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      if (ck.params.name(i) != model.params().name(i) || !ck.params[i].same_shape(model.params()[i]))
        throw CheckpointError("checkpoint tensor '" + ck.params.name(i) + "' does not match its config");
    }
    model.params() = ck.params;
    std::vector<TrialOutcome> trials{evaluate_model(model, data, ks)};
    trials.front().seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Further seeds retrain the checkpoint's configuration from scratch.
    std::vector<TrainConfig> extra;
    for (std::size_t i = 1; i < a.seeds; ++i) {
      extra.push_back(ck.config);
      extra.back().seed = ck.config.seed + i;
    }
    for (auto& tr : run_trials(data, extra, ks, a.jobs)) trials.push_back(std::move(tr));
    for (const auto& t : trials) seeds.push_back(t.config.seed);
    for (auto& rep : collect_reports(trials, ks))
      if (std::find(tasks.begin(), tasks.end(), rep.task) != tasks.end()) reports.push_back(std::move(rep));
    if (reports.size() != tasks.size()) throw std::invalid_argument("checkpoint has no group representation");
    similarity = mean_similarity(trials);
    config_echo = to_json(ck.config);
  }

  const ExportFiles files = export_report(reports, similarity.values().empty() ? nullptr : &similarity, out,
                                          fs::path(a.common.data).filename().string(), config_echo);
  json summary = json::object();
  for (const auto& rep : reports)
    for (auto k : ks) {
      const std::string t = to_string(rep.task);
      summary[t]["recall@" + std::to_string(k)] = rep.recall(k).mean;
      summary[t]["ndcg@" + std::to_string(k)] = rep.ndcg(k).mean;
    }
  std::cout << summary.dump() << '\n';
  write_manifest(out, config_echo, fp, seeds);
  log::info("wrote ", files.metrics_csv.string(), " and ", files.summary_json.string());
  return 0;
}

// ---- sweep / ablate -----------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string grid;
  std::size_t budget = 1000;
  std::size_t jobs = 1;
  std::string ks = "5,10";
};

int cmd_sweep(const SweepArgs& a) {
  if (a.budget < 1) throw std::invalid_argument("--budget must be at least 1");
  const Dataset data = load_dataset(a.common.data);
  std::ifstream is(a.grid);
  if (!is) throw std::runtime_error("cannot open grid " + a.grid);
  SweepSpec spec = parse_sweep_spec(json::parse(is));
  const TrainConfig defaults = resolve_config(a.common);
  if (spec.seeds.empty()) spec.seeds = {config_from_json(spec.base, defaults).seed};
  const auto ks = parse_ks(a.ks);
  const auto points = expand_sweep(spec, defaults);
  const auto rows = run_sweep(data, points, spec.seeds, ks, a.budget, a.jobs);
  const fs::path out(a.common.out);
  write_sweep(rows, spec, ks, out);
  std::cout << json{{"points", rows.size()}, {"best_valid_ndcg10", rows.empty() ? 0.0 : [&] {
                      double b = 0.0;
                      for (const auto& r : rows) b = std::max(b, r.valid_ndcg10);
                      return b;
                    }()}}.dump()
            << '\n';
  json echo = to_json(config_from_json(spec.base, defaults));
  write_manifest(out, {{"base", echo}, {"grid", json::parse(std::ifstream(a.grid))}, {"budget", a.budget}},
                 dataset_fingerprint(data), spec.seeds);
  return 0;
}

struct AblateArgs {
  Common common;
  std::string variants = "Full,A,B,C,D";
  std::string generators;
  std::size_t seeds = 1;
  std::size_t jobs = 1;
  std::string ks = "5,10";
};

int cmd_ablate(const AblateArgs& a) {
  if (a.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  const Dataset data = load_dataset(a.common.data);
  const TrainConfig base = resolve_config(a.common);
  const auto ks = parse_ks(a.ks);
  const auto seeds = seed_list(base.seed, a.seeds);
  const fs::path out(a.common.out);
  fs::create_directories(out);
  json result = json::object();
  if (!a.generators.empty()) {
    std::vector<InterestGenerator> gens;
    for (const auto& g : split_list(a.generators)) gens.push_back(generator_from_string(g));
    const auto entries = run_generator_comparison(data, base, gens, seeds, ks, a.jobs);
    write_comparison(entries, ks, out / "interest_generation.csv", true);
    result["interest_generation"] = (out / "interest_generation.csv").string();
  } else {
    std::vector<Variant> variants;
    for (const auto& v : split_list(a.variants)) variants.push_back(variant_from_string(v));
    const auto entries = run_ablation(data, base, variants, seeds, ks, a.jobs);
    write_comparison(entries, ks, out / "ablation.csv", false);
    result["ablation"] = (out / "ablation.csv").string();
  }
  std::cout << result.dump() << '\n';
  write_manifest(out, to_json(base), dataset_fingerprint(data), seeds);
  return 0;
}

// ---- synth ------------------------------------------------------------------

int cmd_synth(const SyntheticSpec& spec, const std::string& out_dir) {
  const SyntheticWorld w = generate_synthetic(spec);
  const fs::path out(out_dir);
  save_dataset(out, w.dataset);
  json truth = {{"user_interests", w.user_interests}, {"group_interest", w.group_interest}, {"item_block", w.item_block}};
  std::ofstream(out / "truth.json", std::ios::trunc) << truth.dump() << '\n';
  std::cout << json{{"users", w.dataset.n_users}, {"items", w.dataset.n_items}, {"groups", w.dataset.n_groups}}.dump()
            << '\n';
  write_manifest(out,
                 {{"users", spec.n_users}, {"items", spec.n_items}, {"groups", spec.n_groups},
                  {"interests", spec.n_interests}, {"noise", spec.noise}},
                 dataset_fingerprint(w.dataset), {spec.seed});
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_config) {
  sub->add_option("--data", c.data, "prepared dataset directory")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--out", c.out, "output directory")->required();
  if (with_config) {
    sub->add_option("--config", c.config_file, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  }
}

int report_error(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"command", g_command}, {"type", type}, {"message", message}}}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_argv.emplace_back(argv[i]);

  CLI::App app{"IGRec training and evaluation engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", IGREC_VERSION);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads for kernels and evaluation (0 = runtime default)");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "split interactions and optionally synthesize group-item edges");
  p->add_option("dir", prep.dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  p->add_flag("--synthesize-groups", prep.synthesize, "build group-item edges from members' train items");
  p->add_option("--cap", prep.cap, "items kept per synthesized group")->capture_default_str();
  p->add_option("--seed", prep.seed, "split seed")->capture_default_str();
  p->add_option("--subsample", prep.subsample, "keep this fraction of users")
      ->check(CLI::Range(1e-6, 1.0));
  p->add_option("--out", prep.out, "write the prepared dataset here instead of in place");

  Common train;
  std::uint64_t train_seed = 0;
  std::size_t train_epochs = 0;
  auto* t = app.add_subcommand("train", "train one model and save its best checkpoint");
  add_common(t, train, true);
  auto* seed_opt = t->add_option("--seed", train_seed, "random seed");
  auto* epochs_opt = t->add_option("--epochs", train_epochs, "maximum epochs");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "rank test items and export metrics");
  add_common(e, ev.common, false);
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->check(CLI::ExistingFile);
  e->add_flag("--popularity", ev.popularity, "evaluate the popularity baseline instead");
  e->add_option("--task", ev.task, "user, group or both")->check(CLI::IsMember({"user", "group", "both"}))->capture_default_str();
  e->add_option("--k", ev.ks, "comma separated cutoffs")->capture_default_str();
  e->add_option("--seeds", ev.seeds, "number of runs")->capture_default_str();
  e->add_option("--jobs", ev.jobs, "retraining runs executed concurrently")->capture_default_str();

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "grid search ranked by validation NDCG@10");
  add_common(s, sw.common, true);
  s->add_option("--grid", sw.grid, "grid JSON file")->required()->check(CLI::ExistingFile);
  s->add_option("--budget", sw.budget, "maximum grid points")->capture_default_str();
  s->add_option("--jobs", sw.jobs, "trials run concurrently")->capture_default_str();
  s->add_option("--k", sw.ks, "comma separated cutoffs")->capture_default_str();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "compare model variants on shared seeds");
  add_common(a, ab.common, true);
  a->add_option("--variants", ab.variants, "subset of Full,A,B,C,D")->capture_default_str();
  a->add_option("--generators", ab.generators, "compare interest generators instead: self_gate,fc1,fc2,free_embedding");
  a->add_option("--seeds", ab.seeds, "seeds per variant")->capture_default_str();
  a->add_option("--jobs", ab.jobs, "trials run concurrently")->capture_default_str();
  a->add_option("--k", ab.ks, "comma separated cutoffs")->capture_default_str();

  SyntheticSpec syn;
  std::string synth_out;
  auto* y = app.add_subcommand("synth", "write a synthetic dataset with planted interests");
  y->add_option("--out", synth_out, "output directory")->required();
  y->add_option("--users", syn.n_users)->capture_default_str();
  y->add_option("--items", syn.n_items)->capture_default_str();
  y->add_option("--groups", syn.n_groups)->capture_default_str();
  y->add_option("--interests", syn.n_interests)->capture_default_str();
  y->add_option("--noise", syn.noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  y->add_option("--seed", syn.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    g_command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    report_error("usage", err.what());
    return 2;
  }
  g_command = app.get_subcommands().front()->get_name();
  if (threads > 0) kernels::set_threads(threads);

  try {
    if (*p) return cmd_prepare(prep);
    if (*t) {
      if (seed_opt->count()) train.overrides.push_back("seed=" + std::to_string(train_seed));
      if (epochs_opt->count()) train.overrides.push_back("epochs=" + std::to_string(train_epochs));
      return cmd_train(train);
    }
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_sweep(sw);
    if (*a) return cmd_ablate(ab);
    if (*y) return cmd_synth(syn, synth_out);
  } catch (const DataError& err) {
    return report_error("data", err.what());
  } catch (const CheckpointError& err) {
    return report_error("checkpoint", err.what());
  } catch (const TrainingError& err) {
    return report_error("training", err.what());
  } catch (const std::invalid_argument& err) {
    return report_error("invalid_argument", err.what());
  } catch (const std::exception& err) {
    return report_error("runtime", err.what());
  }
  return 0;
}
