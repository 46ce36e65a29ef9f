#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "igrec/config.hpp"
#include "igrec/optim.hpp"

namespace igrec {

// Binary layout (little-endian), see docs/checkpoint.md:
//   "IGRECKPT" | u32 version | u64 header_len | header JSON
//   u64 tensor_count | per tensor: u64 name_len, name, u64 rows, u64 cols, rows*cols f64
struct Checkpoint {
  TrainConfig config;
  std::string dataset_fingerprint;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_groups = 0;
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
  ParameterSet params;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a of the file bytes, hex.
std::string file_hash(const std::filesystem::path& path);

}  // namespace igrec
