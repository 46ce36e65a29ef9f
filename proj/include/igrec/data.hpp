#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "igrec/tensor.hpp"

namespace igrec {

// Malformed or inconsistent input data. `line` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::string file = {}, std::size_t line = 0);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };
const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct Edge {
  std::size_t anchor;
  std::size_t item;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Anchor-item interactions (R_u or R_g) with one split label per edge.
struct Interactions {
  std::size_t n_anchors = 0;
  std::size_t n_items = 0;
  std::vector<Edge> edges;
  std::vector<Split> split;  // empty until split_holdout has run

  bool is_split() const { return !edges.empty() && split.size() == edges.size(); }
  std::size_t count(Split s) const;
};

// Per-anchor item lists for one split, sorted ascending.
struct AnchorItems {
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> valid;
  std::vector<std::vector<std::size_t>> test;
};
AnchorItems index_by_split(const Interactions& x);

struct Dataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_groups = 0;
  Interactions user_items;
  Interactions group_items;
  std::vector<std::vector<std::size_t>> group_members;  // U(g), sorted

  // S as a binary |G| x |U| matrix.
  SparseMatrix membership() const;
  // G(u) for every user, sorted.
  std::vector<std::vector<std::size_t>> user_groups() const;
  // Throws DataError if any invariant is violated.
  void validate() const;
};

// ---- file I/O -----------------------------------------------------------------

struct DatasetMeta {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_groups = 0;
};

DatasetMeta load_meta(const std::filesystem::path& path);
void save_meta(const std::filesystem::path& path, const DatasetMeta& meta);

// "anchor<TAB>item" per line, deduplicated in first-seen order.
std::vector<Edge> load_interactions(const std::filesystem::path& path, std::size_t n_anchors,
                                    std::size_t n_items);
// "gid<SPACE>u1,u2,...". Returns U(g) for g < n_groups; unlisted groups stay empty.
std::vector<std::vector<std::size_t>> load_group_members(const std::filesystem::path& path,
                                                         std::size_t n_groups, std::size_t n_users);

void save_interactions(const std::filesystem::path& path, const std::vector<Edge>& edges);
void save_group_members(const std::filesystem::path& path,
                        const std::vector<std::vector<std::size_t>>& members);
// "anchor<TAB>item<TAB>train|valid|test".
void save_split(const std::filesystem::path& path, const Interactions& x);
void load_split(const std::filesystem::path& path, Interactions& x);

namespace files {
inline constexpr const char* kMeta = "meta.json";
inline constexpr const char* kUserItems = "users.tsv";
inline constexpr const char* kGroupItems = "groups_items.tsv";
inline constexpr const char* kGroupMembers = "group_members.txt";
inline constexpr const char* kUserSplit = "users.split.tsv";
inline constexpr const char* kGroupSplit = "groups_items.split.tsv";
inline constexpr const char* kSynthGroupItems = "groups_items.synth.tsv";
}  // namespace files

// Loads the canonical layout. Split files, when present, are applied;
// a synthesized group-item file is used when no groups_items.tsv exists.
// With `prepared` false only the raw inputs are read.
Dataset load_dataset(const std::filesystem::path& dir, bool prepared = true);
void save_dataset(const std::filesystem::path& dir, const Dataset& d);

// Content hash of the canonical files (FNV-1a, hex).
std::string dataset_fingerprint(const Dataset& d);

// ---- preparation ----------------------------------------------------------------

// For every group, ranks items by frequency over its members' train
// interactions (ties by smaller item id) and keeps the top `cap`.
std::vector<Edge> synthesize_group_items(const Dataset& d, std::size_t cap = 30);

// Per-anchor random 80/10/10 split: valid and test each take round(n/10)
// edges and the rest stay in train. Anchors with fewer than 3 edges keep
// everything in train.
std::vector<Split> split_holdout(const std::vector<Edge>& edges, std::size_t n_anchors,
                                 std::uint64_t seed);

struct PrepareOptions {
  std::uint64_t seed = 2024;
  bool synthesize_groups = false;
  std::size_t cap = 30;
};
// Splits R_u, optionally synthesizes R_g from train R_u, then splits R_g.
void prepare(Dataset& d, const PrepareOptions& opts);

// Keeps each user with probability `fraction`. Groups shrink to their kept
// members and vanish when none remain; ids are remapped densely.
Dataset subsample(const Dataset& d, double fraction, std::uint64_t seed);

// ---- graph ----------------------------------------------------------------------

// Symmetric-degree normalized bipartite adjacency over train edges.
struct NormAdjacency {
  SparseMatrix user_item;  // |U| x |V|
  SparseMatrix item_user;  // transpose
};
NormAdjacency build_norm_adjacency(const Dataset& d);

// ---- sampling ---------------------------------------------------------------------

struct BprTriple {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
};

class BprSampler {
 public:
  // `train` holds each anchor's sorted train items.
  BprSampler(std::vector<std::vector<std::size_t>> train, std::size_t n_items, std::uint64_t seed);

  std::vector<BprTriple> sample(std::size_t batch_size);
  std::size_t eligible_anchors() const { return anchors_.size(); }
  std::size_t skipped_anchors() const { return skipped_; }
  const std::vector<std::size_t>& train_items(std::size_t anchor) const { return train_[anchor]; }

 private:
  std::vector<std::vector<std::size_t>> train_;
  std::vector<std::size_t> anchors_;
  std::size_t n_items_;
  std::size_t skipped_ = 0;
  std::mt19937_64 rng_;
};

// ---- synthetic worlds -----------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 120;
  std::size_t n_groups = 40;
  std::size_t n_interests = 3;  // planted interests, items split into this many blocks
  double noise = 0.0;           // probability an edge ignores the user's interests
  std::uint64_t seed = 7;
  std::size_t min_user_items = 10;
  std::size_t max_user_items = 20;
  std::size_t min_group_size = 3;
  std::size_t max_group_size = 8;
  std::size_t group_items = 12;
  double two_interest_prob = 0.5;
};

struct SyntheticWorld {
  Dataset dataset;                                   // unsplit
  std::vector<std::vector<std::size_t>> user_interests;
  std::vector<std::size_t> group_interest;
  std::vector<std::size_t> item_block;               // planted interest of each item
};

SyntheticWorld generate_synthetic(const SyntheticSpec& spec);

}  // namespace igrec
