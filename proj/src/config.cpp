#include "igrec/config.hpp"

#include <stdexcept>

namespace igrec {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("config: " + msg);
}

}  // namespace

void TrainConfig::validate() const {
  require(dim >= 1, "dim must be >= 1");
  require(interests >= 1, "interests (M) must be >= 1");
  require(tau > 0.0, "tau must be > 0");
  require(threshold >= 0.0 && threshold <= 1.0, "threshold t must be in [0, 1]");
  require(eta1 >= 0.0 && eta1 <= 1.0, "eta1 must be in [0, 1]");
  require(eta2 >= 0.0, "eta2 must be >= 0");
  require(lr >= 0.0, "lr must be >= 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(user_batch >= 1, "user_batch must be >= 1");
  require(group_batch >= 1, "group_batch must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(init_std > 0.0 && gate_init_std >= 0.0, "init std must be positive");
}

double TrainConfig::effective_eta2() const {
  if (!uses_interests() || variant == Variant::NoInterestReg) return 0.0;
  return eta2;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "Full";
    case Variant::NoMultiInterest: return "A";
    case Variant::MeanInterests: return "B";
    case Variant::NoInterestReg: return "C";
    case Variant::HardGumbel: return "D";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "Full" || s == "full") return Variant::Full;
  if (s == "A") return Variant::NoMultiInterest;
  if (s == "B") return Variant::MeanInterests;
  if (s == "C") return Variant::NoInterestReg;
  if (s == "D") return Variant::HardGumbel;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

std::string to_string(InterestGenerator g) {
  switch (g) {
    case InterestGenerator::SelfGate: return "self_gate";
    case InterestGenerator::OneFC: return "fc1";
    case InterestGenerator::TwoFC: return "fc2";
    case InterestGenerator::FreeEmbedding: return "free_embedding";
  }
  return "?";
}

InterestGenerator generator_from_string(const std::string& s) {
  if (s == "self_gate") return InterestGenerator::SelfGate;
  if (s == "fc1") return InterestGenerator::OneFC;
  if (s == "fc2") return InterestGenerator::TwoFC;
  if (s == "free_embedding") return InterestGenerator::FreeEmbedding;
  throw std::invalid_argument("unknown interest generator '" + s + "'");
}

std::string to_string(Task t) { return t == Task::User ? "user" : "group"; }

Task task_from_string(const std::string& s) {
  if (s == "user") return Task::User;
  if (s == "group") return Task::Group;
  throw std::invalid_argument("unknown task '" + s + "'");
}

std::string to_string(GumbelMode m) { return m == GumbelMode::Soft ? "soft" : "hard"; }

GumbelMode gumbel_from_string(const std::string& s) {
  if (s == "soft") return GumbelMode::Soft;
  if (s == "hard") return GumbelMode::Hard;
  throw std::invalid_argument("unknown gumbel mode '" + s + "'");
}

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::Mean: return "mean";
    case Pooling::Max: return "max";
    case Pooling::Sum: return "sum";
  }
  return "?";
}

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::Mean;
  if (s == "max") return Pooling::Max;
  if (s == "sum") return Pooling::Sum;
  throw std::invalid_argument("unknown pooling '" + s + "'");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"dim", c.dim},
      {"interests", c.interests},
      {"layers", c.layers},
      {"tau", c.tau},
      {"threshold", c.threshold},
      {"eta1", c.eta1},
      {"eta2", c.eta2},
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"user_batch", c.user_batch},
      {"group_batch", c.group_batch},
      {"epochs", c.epochs},
      {"patience", c.patience},
      {"steps_per_epoch", c.steps_per_epoch},
      {"eval_every", c.eval_every},
      {"seed", c.seed},
      {"init_std", c.init_std},
      {"gate_init_std", c.gate_init_std},
      {"gumbel", to_string(c.gumbel)},
      {"variant", to_string(c.variant)},
      {"generator", to_string(c.generator)},
      {"pooling", to_string(c.pooling)},
      {"use_groups", c.use_groups},
      {"select_task", to_string(c.select_task)},
  };
}

void apply_config_key(TrainConfig& c, const std::string& key, const nlohmann::json& v) {
  if (v.is_number_integer() && v.get<long long>() < 0)
    throw std::invalid_argument("config: negative value for '" + key + "'");
  try {
    if (key == "dim") c.dim = v.get<std::size_t>();
    else if (key == "interests" || key == "M") c.interests = v.get<std::size_t>();
    else if (key == "layers" || key == "K") c.layers = v.get<std::size_t>();
    else if (key == "tau") c.tau = v.get<double>();
    else if (key == "threshold" || key == "t") c.threshold = v.get<double>();
    else if (key == "eta1") c.eta1 = v.get<double>();
    else if (key == "eta2") c.eta2 = v.get<double>();
    else if (key == "lr") c.lr = v.get<double>();
    else if (key == "weight_decay" || key == "lambda") c.weight_decay = v.get<double>();
    else if (key == "user_batch") c.user_batch = v.get<std::size_t>();
    else if (key == "group_batch") c.group_batch = v.get<std::size_t>();
    else if (key == "epochs") c.epochs = v.get<std::size_t>();
    else if (key == "patience") c.patience = v.get<std::size_t>();
    else if (key == "steps_per_epoch") c.steps_per_epoch = v.get<std::size_t>();
    else if (key == "eval_every") c.eval_every = v.get<std::size_t>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "init_std") c.init_std = v.get<double>();
    else if (key == "gate_init_std") c.gate_init_std = v.get<double>();
    else if (key == "gumbel") c.gumbel = gumbel_from_string(v.get<std::string>());
    else if (key == "variant") c.variant = variant_from_string(v.get<std::string>());
    else if (key == "generator") c.generator = generator_from_string(v.get<std::string>());
    else if (key == "pooling") c.pooling = pooling_from_string(v.get<std::string>());
    else if (key == "use_groups") c.use_groups = v.get<bool>();
    else if (key == "select_task") c.select_task = task_from_string(v.get<std::string>());
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
  }
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) apply_config_key(base, it.key(), it.value());
  return base;
}

}  // namespace igrec
