#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "igrec/aggregator.hpp"
#include "igrec/fusion.hpp"

namespace igrec {

enum class Variant {
  Full,
  NoMultiInterest,  // A: i*_g is the mean of member embeddings
  MeanInterests,    // B: omega fixed to uniform
  NoInterestReg,    // C: eta2 = 0
  HardGumbel,       // D: hard Gumbel-Softmax
};

enum class InterestGenerator {
  SelfGate,
  OneFC,           // i^n = e_u W^n + b^n
  TwoFC,           // i^n = sigmoid(e_u W1^n + b1^n) W2^n + b2^n
  FreeEmbedding,   // M free |U| x d tables
};

enum class Task { User, Group };

struct TrainConfig {
  std::size_t dim = 64;
  std::size_t interests = 4;
  std::size_t layers = 3;
  double tau = 0.5;
  double threshold = 0.1;
  double eta1 = 0.9;
  double eta2 = 0.4;
  double lr = 0.005;
  double weight_decay = 1e-4;  // lambda
  std::size_t user_batch = 2048;
  std::size_t group_batch = 256;
  std::size_t epochs = 300;
  std::size_t patience = 20;
  std::size_t steps_per_epoch = 0;  // 0: ceil(train user edges / user_batch)
  std::size_t eval_every = 1;
  std::uint64_t seed = 2024;
  double init_std = 0.1;
  double gate_init_std = 0.1;
  GumbelMode gumbel = GumbelMode::Soft;
  Variant variant = Variant::Full;
  InterestGenerator generator = InterestGenerator::SelfGate;
  Pooling pooling = Pooling::Mean;
  bool use_groups = true;  // false: plain LightGCN (MF when layers == 0)
  Task select_task = Task::User;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;

  // Settings after applying the ablation variant.
  double effective_eta1() const { return use_groups ? eta1 : 1.0; }
  double effective_eta2() const;
  GumbelMode effective_gumbel() const { return variant == Variant::HardGumbel ? GumbelMode::Hard : gumbel; }
  bool uses_interests() const { return use_groups && variant != Variant::NoMultiInterest; }
};

nlohmann::json to_json(const TrainConfig& c);
// Unknown keys are rejected; missing keys keep `base` values.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});
void apply_config_key(TrainConfig& c, const std::string& key, const nlohmann::json& value);

std::string to_string(Variant v);
std::string to_string(InterestGenerator g);
std::string to_string(Task t);
std::string to_string(GumbelMode m);
std::string to_string(Pooling p);
Variant variant_from_string(const std::string& s);
InterestGenerator generator_from_string(const std::string& s);
Task task_from_string(const std::string& s);
GumbelMode gumbel_from_string(const std::string& s);
Pooling pooling_from_string(const std::string& s);

}  // namespace igrec
