#include "igrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "igrec/log.hpp"

namespace igrec {

namespace fs = std::filesystem;

DataError::DataError(const std::string& what, std::string file, std::size_t line)
    : std::runtime_error(file.empty() ? what
                                      : file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      file_(std::move(file)),
      line_(line) {}

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw DataError("unknown split label '" + s + "'");
}

std::size_t Interactions::count(Split s) const {
  return static_cast<std::size_t>(std::count(split.begin(), split.end(), s));
}

AnchorItems index_by_split(const Interactions& x) {
  AnchorItems out;
  out.train.resize(x.n_anchors);
  out.valid.resize(x.n_anchors);
  out.test.resize(x.n_anchors);
  for (std::size_t e = 0; e < x.edges.size(); ++e) {
    const Split s = x.split.empty() ? Split::Train : x.split[e];
    auto& bucket = s == Split::Train ? out.train : s == Split::Valid ? out.valid : out.test;
    bucket[x.edges[e].anchor].push_back(x.edges[e].item);
  }
  for (auto* lists : {&out.train, &out.valid, &out.test})
    for (auto& l : *lists) std::sort(l.begin(), l.end());
  return out;
}

SparseMatrix Dataset::membership() const {
  std::vector<Triplet> t;
  for (std::size_t g = 0; g < group_members.size(); ++g)
    for (std::size_t u : group_members[g]) t.push_back({g, u, 1.0});
  return SparseMatrix(n_groups, n_users, std::move(t));
}

std::vector<std::vector<std::size_t>> Dataset::user_groups() const {
  std::vector<std::vector<std::size_t>> out(n_users);
  for (std::size_t g = 0; g < group_members.size(); ++g)
    for (std::size_t u : group_members[g]) out[u].push_back(g);
  return out;
}

namespace {

void validate_interactions(const Interactions& x, const char* what) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Edge& e : x.edges) {
    if (e.anchor >= x.n_anchors || e.item >= x.n_items) throw DataError(std::string(what) + ": id out of range");
    if (!seen.insert({e.anchor, e.item}).second) throw DataError(std::string(what) + ": duplicate edge");
  }
  if (!x.split.empty() && x.split.size() != x.edges.size()) {
    throw DataError(std::string(what) + ": split label count does not match edge count");
  }
}

}  // namespace

void Dataset::validate() const {
  if (user_items.n_anchors != n_users || user_items.n_items != n_items) throw DataError("user_items shape");
  if (group_items.n_anchors != n_groups || group_items.n_items != n_items) throw DataError("group_items shape");
  validate_interactions(user_items, "user_items");
  validate_interactions(group_items, "group_items");
  if (group_members.size() != n_groups) throw DataError("group_members size does not match n_groups");
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (group_members[g].empty()) throw DataError("group " + std::to_string(g) + " has no members");
    for (std::size_t u : group_members[g])
      if (u >= n_users) throw DataError("group " + std::to_string(g) + " member out of range");
  }
}

// ---- parsing ------------------------------------------------------------------

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool parse_index(const std::string& tok, std::size_t& out) {
  if (tok.empty()) return false;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file", path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file", path.string());
  return out;
}

}  // namespace

DatasetMeta load_meta(const fs::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
    DatasetMeta m;
    m.n_users = j.at("n_users").get<std::size_t>();
    m.n_items = j.at("n_items").get<std::size_t>();
    m.n_groups = j.at("n_groups").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad meta.json: ") + e.what(), path.string());
  }
}

void save_meta(const fs::path& path, const DatasetMeta& meta) {
  nlohmann::json j{{"n_users", meta.n_users}, {"n_items", meta.n_items}, {"n_groups", meta.n_groups}};
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

std::vector<Edge> load_interactions(const fs::path& path, std::size_t n_anchors, std::size_t n_items) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto tok = split_ws(line);
    Edge e{};
    if (tok.size() != 2 || !parse_index(tok[0], e.anchor) || !parse_index(tok[1], e.item)) {
      throw DataError("malformed line, expected 'id<TAB>item_id'", path.string(), lineno);
    }
    if (e.anchor >= n_anchors) throw DataError("anchor id out of range", path.string(), lineno);
    if (e.item >= n_items) throw DataError("item id out of range", path.string(), lineno);
    if (seen.insert((static_cast<std::uint64_t>(e.anchor) << 32) ^ e.item).second) edges.push_back(e);
  }
  return edges;
}

std::vector<std::vector<std::size_t>> load_group_members(const fs::path& path, std::size_t n_groups,
                                                         std::size_t n_users) {
  auto in = open_in(path);
  std::vector<std::vector<std::size_t>> members(n_groups);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto tok = split_ws(line);
    std::size_t g = 0;
    if (tok.empty() || !parse_index(tok[0], g)) throw DataError("malformed group id", path.string(), lineno);
    if (g >= n_groups) throw DataError("group id out of range", path.string(), lineno);
    if (tok.size() < 2) throw DataError("group has an empty member list", path.string(), lineno);
    if (tok.size() > 2) throw DataError("malformed line, expected 'gid u1,u2,...'", path.string(), lineno);
    std::vector<std::size_t> users;
    std::string field;
    std::istringstream list(tok[1]);
    while (std::getline(list, field, ',')) {
      if (field.empty()) continue;
      std::size_t u = 0;
      if (!parse_index(field, u)) throw DataError("malformed member id '" + field + "'", path.string(), lineno);
      if (u >= n_users) throw DataError("member id out of range", path.string(), lineno);
      users.push_back(u);
    }
    if (users.empty()) throw DataError("group has an empty member list", path.string(), lineno);
    auto& dst = members[g];
    dst.insert(dst.end(), users.begin(), users.end());
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }
  return members;
}

void save_interactions(const fs::path& path, const std::vector<Edge>& edges) {
  auto out = open_out(path);
  for (const Edge& e : edges) out << e.anchor << '\t' << e.item << '\n';
}

void save_group_members(const fs::path& path, const std::vector<std::vector<std::size_t>>& members) {
  auto out = open_out(path);
  for (std::size_t g = 0; g < members.size(); ++g) {
    out << g << ' ';
    for (std::size_t i = 0; i < members[g].size(); ++i) out << (i ? "," : "") << members[g][i];
    out << '\n';
  }
}

void save_split(const fs::path& path, const Interactions& x) {
  if (!x.is_split() && !x.edges.empty()) throw DataError("save_split: interactions are not split");
  auto out = open_out(path);
  for (std::size_t e = 0; e < x.edges.size(); ++e)
    out << x.edges[e].anchor << '\t' << x.edges[e].item << '\t' << to_string(x.split[e]) << '\n';
}

void load_split(const fs::path& path, Interactions& x) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::vector<Split> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto tok = split_ws(line);
    Edge e{};
    if (tok.size() != 3 || !parse_index(tok[0], e.anchor) || !parse_index(tok[1], e.item)) {
      throw DataError("malformed split line", path.string(), lineno);
    }
    if (e.anchor >= x.n_anchors || e.item >= x.n_items) throw DataError("id out of range", path.string(), lineno);
    try {
      labels.push_back(split_from_string(tok[2]));
    } catch (const DataError&) {
      throw DataError("unknown split label '" + tok[2] + "'", path.string(), lineno);
    }
    edges.push_back(e);
  }
  auto key = [](const Edge& a, const Edge& b) { return a.anchor != b.anchor ? a.anchor < b.anchor : a.item < b.item; };
  auto lhs = edges;
  auto rhs = x.edges;
  std::sort(lhs.begin(), lhs.end(), key);
  std::sort(rhs.begin(), rhs.end(), key);
  if (!x.edges.empty() && lhs != rhs) {
    throw DataError("split file does not cover exactly the interaction edges", path.string());
  }
  x.edges = std::move(edges);
  x.split = std::move(labels);
}

Dataset load_dataset(const fs::path& dir, bool prepared) {
  const DatasetMeta meta = load_meta(dir / files::kMeta);
  Dataset d;
  d.n_users = meta.n_users;
  d.n_items = meta.n_items;
  d.n_groups = meta.n_groups;
  d.user_items = {meta.n_users, meta.n_items, load_interactions(dir / files::kUserItems, meta.n_users, meta.n_items), {}};
  d.group_items = {meta.n_groups, meta.n_items, {}, {}};
  if (fs::exists(dir / files::kGroupItems)) {
    d.group_items.edges = load_interactions(dir / files::kGroupItems, meta.n_groups, meta.n_items);
  } else if (prepared && fs::exists(dir / files::kSynthGroupItems)) {
    d.group_items.edges = load_interactions(dir / files::kSynthGroupItems, meta.n_groups, meta.n_items);
  }
  d.group_members = load_group_members(dir / files::kGroupMembers, meta.n_groups, meta.n_users);
  if (prepared && fs::exists(dir / files::kUserSplit)) load_split(dir / files::kUserSplit, d.user_items);
  if (prepared && fs::exists(dir / files::kGroupSplit)) load_split(dir / files::kGroupSplit, d.group_items);
  d.validate();
  return d;
}

void save_dataset(const fs::path& dir, const Dataset& d) {
  fs::create_directories(dir);
  save_meta(dir / files::kMeta, {d.n_users, d.n_items, d.n_groups});
  save_interactions(dir / files::kUserItems, d.user_items.edges);
  save_interactions(dir / files::kGroupItems, d.group_items.edges);
  save_group_members(dir / files::kGroupMembers, d.group_members);
  if (d.user_items.is_split()) save_split(dir / files::kUserSplit, d.user_items);
  if (d.group_items.is_split()) save_split(dir / files::kGroupSplit, d.group_items);
}

std::string dataset_fingerprint(const Dataset& d) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(d.n_users);
  mix(d.n_items);
  mix(d.n_groups);
  for (const Interactions* x : {&d.user_items, &d.group_items}) {
    mix(x->edges.size());
    for (std::size_t e = 0; e < x->edges.size(); ++e) {
      mix(x->edges[e].anchor);
      mix(x->edges[e].item);
      mix(x->split.empty() ? 255U : static_cast<std::uint64_t>(x->split[e]));
    }
  }
  for (const auto& m : d.group_members) {
    mix(m.size());
    for (std::size_t u : m) mix(u);
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---- preparation ----------------------------------------------------------------

std::vector<Edge> synthesize_group_items(const Dataset& d, std::size_t cap) {
  const AnchorItems users = index_by_split(d.user_items);
  std::vector<Edge> out;
  std::vector<std::size_t> freq(d.n_items, 0);
  std::vector<std::size_t> touched;
  for (std::size_t g = 0; g < d.group_members.size(); ++g) {
    touched.clear();
    for (std::size_t u : d.group_members[g]) {
      for (std::size_t v : users.train[u]) {
        if (freq[v]++ == 0) touched.push_back(v);
      }
    }
    std::sort(touched.begin(), touched.end(), [&freq](std::size_t a, std::size_t b) {
      return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
    });
    const std::size_t keep = std::min(cap, touched.size());
    for (std::size_t i = 0; i < keep; ++i) out.push_back({g, touched[i]});
    for (std::size_t v : touched) freq[v] = 0;
  }
  return out;
}

std::vector<Split> split_holdout(const std::vector<Edge>& edges, std::size_t n_anchors, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_anchor(n_anchors);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].anchor >= n_anchors) throw DataError("split_holdout: anchor id out of range");
    by_anchor[edges[e].anchor].push_back(e);
  }
  std::vector<Split> split(edges.size(), Split::Train);
  std::mt19937_64 rng(seed);
  for (auto& ids : by_anchor) {
    const std::size_t n = ids.size();
    if (n < 3) continue;
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n)));
    const std::size_t n_valid = n_test;
    for (std::size_t i = 0; i < n_test; ++i) split[ids[i]] = Split::Test;
    for (std::size_t i = n_test; i < n_test + n_valid; ++i) split[ids[i]] = Split::Valid;
  }
  return split;
}

void prepare(Dataset& d, const PrepareOptions& opts) {
  d.user_items.split = split_holdout(d.user_items.edges, d.n_users, opts.seed);
  if (opts.synthesize_groups) {
    if (!d.group_items.edges.empty()) {
      throw DataError("dataset already has group-item interactions; refusing to synthesize");
    }
    d.group_items.edges = synthesize_group_items(d, opts.cap);
  }
  d.group_items.split = split_holdout(d.group_items.edges, d.n_groups, opts.seed ^ 0x9e3779b97f4a7c15ULL);
  d.validate();
}

Dataset subsample(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("subsample: fraction must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(fraction);
  std::vector<char> keep_user(d.n_users, 0), keep_group(d.n_groups, 0);
  for (std::size_t u = 0; u < d.n_users; ++u) keep_user[u] = keep(rng) ? 1 : 0;
  for (std::size_t g = 0; g < d.n_groups; ++g)
    for (std::size_t u : d.group_members[g])
      if (keep_user[u]) keep_group[g] = 1;
  // Keep at least one group so the group task stays defined.
  if (d.n_groups > 0 && std::find(keep_group.begin(), keep_group.end(), 1) == keep_group.end()) {
    for (std::size_t g = 0; g < d.n_groups; ++g) {
      if (d.group_members[g].empty()) continue;
      keep_user[d.group_members[g].front()] = 1;
      keep_group[g] = 1;
      break;
    }
  }

  std::vector<std::size_t> umap(d.n_users, SIZE_MAX), gmap(d.n_groups, SIZE_MAX), imap(d.n_items, SIZE_MAX);
  Dataset out;
  for (std::size_t u = 0; u < d.n_users; ++u)
    if (keep_user[u]) umap[u] = out.n_users++;
  for (std::size_t g = 0; g < d.n_groups; ++g)
    if (keep_group[g]) gmap[g] = out.n_groups++;
  auto map_item = [&](std::size_t v) {
    if (imap[v] == SIZE_MAX) imap[v] = out.n_items++;
    return imap[v];
  };
  std::vector<Edge> ue, ge;
  for (const Edge& e : d.user_items.edges)
    if (keep_user[e.anchor]) ue.push_back({umap[e.anchor], map_item(e.item)});
  for (const Edge& e : d.group_items.edges)
    if (keep_group[e.anchor]) ge.push_back({gmap[e.anchor], map_item(e.item)});
  out.user_items = {out.n_users, out.n_items, std::move(ue), {}};
  out.group_items = {out.n_groups, out.n_items, std::move(ge), {}};
  out.group_members.resize(out.n_groups);
  for (std::size_t g = 0; g < d.n_groups; ++g) {
    if (!keep_group[g]) continue;
    for (std::size_t u : d.group_members[g])
      if (keep_user[u]) out.group_members[gmap[g]].push_back(umap[u]);
  }
  out.validate();
  return out;
}

// ---- graph ---------------------------------------------------------------------

NormAdjacency build_norm_adjacency(const Dataset& d) {
  std::vector<std::size_t> deg_u(d.n_users, 0), deg_v(d.n_items, 0);
  const auto& x = d.user_items;
  auto is_train = [&x](std::size_t e) { return x.split.empty() || x.split[e] == Split::Train; };
  for (std::size_t e = 0; e < x.edges.size(); ++e) {
    if (!is_train(e)) continue;
    ++deg_u[x.edges[e].anchor];
    ++deg_v[x.edges[e].item];
  }
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < x.edges.size(); ++e) {
    if (!is_train(e)) continue;
    const auto [u, v] = x.edges[e];
    t.push_back({u, v, 1.0 / (std::sqrt(static_cast<double>(deg_u[u])) * std::sqrt(static_cast<double>(deg_v[v])))});
  }
  NormAdjacency adj;
  adj.user_item = SparseMatrix(d.n_users, d.n_items, std::move(t));
  adj.item_user = adj.user_item.transposed();
  return adj;
}

// ---- sampling ---------------------------------------------------------------------

BprSampler::BprSampler(std::vector<std::vector<std::size_t>> train, std::size_t n_items, std::uint64_t seed)
    : train_(std::move(train)), n_items_(n_items), rng_(seed) {
  for (std::size_t a = 0; a < train_.size(); ++a) {
    auto& items = train_[a];
    std::sort(items.begin(), items.end());
    if (items.empty()) continue;
    if (items.size() >= n_items_) {
      ++skipped_;
      continue;
    }
    anchors_.push_back(a);
  }
  if (skipped_ > 0) log::warn("BprSampler: skipped ", skipped_, " anchor(s) that interacted with every item");
}

std::vector<BprTriple> BprSampler::sample(std::size_t batch_size) {
  std::vector<BprTriple> out;
  if (anchors_.empty()) return out;
  out.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors_.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_item(0, n_items_ - 1);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t a = anchors_[pick_anchor(rng_)];
    const auto& items = train_[a];
    std::uniform_int_distribution<std::size_t> pick_pos(0, items.size() - 1);
    const std::size_t pos = items[pick_pos(rng_)];
    std::size_t neg = pick_item(rng_);
    while (std::binary_search(items.begin(), items.end(), neg)) neg = pick_item(rng_);
    out.push_back({a, pos, neg});
  }
  return out;
}

// ---- synthetic worlds -------------------------------------------------------------

SyntheticWorld generate_synthetic(const SyntheticSpec& s) {
  if (s.n_interests < 2) throw std::invalid_argument("generate_synthetic: need at least 2 planted interests");
  if (s.n_items < s.n_interests || s.n_users == 0) throw std::invalid_argument("generate_synthetic: infeasible sizes");
  if (s.noise < 0.0 || s.noise > 1.0) throw std::invalid_argument("generate_synthetic: noise must be in [0, 1]");
  if (s.min_user_items == 0 || s.min_user_items > s.max_user_items || s.min_group_size == 0 ||
      s.min_group_size > s.max_group_size) {
    throw std::invalid_argument("generate_synthetic: infeasible size ranges");
  }
  const std::size_t block = s.n_items / s.n_interests;
  if (s.max_user_items > block) throw std::invalid_argument("generate_synthetic: interest blocks smaller than user degree");

  std::mt19937_64 rng(s.seed);
  SyntheticWorld w;
  w.item_block.resize(s.n_items);
  for (std::size_t v = 0; v < s.n_items; ++v) w.item_block[v] = std::min(v / block, s.n_interests - 1);
  auto block_begin = [&](std::size_t k) { return k * block; };
  auto block_end = [&](std::size_t k) { return k + 1 == s.n_interests ? s.n_items : (k + 1) * block; };

  std::uniform_int_distribution<std::size_t> pick_interest(0, s.n_interests - 1);
  std::uniform_int_distribution<std::size_t> pick_degree(s.min_user_items, s.max_user_items);
  std::uniform_int_distribution<std::size_t> pick_any_item(0, s.n_items - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  w.user_interests.resize(s.n_users);
  std::vector<std::vector<std::size_t>> users_with(s.n_interests);
  std::vector<Edge> ue;
  for (std::size_t u = 0; u < s.n_users; ++u) {
    auto& mine = w.user_interests[u];
    mine.push_back(pick_interest(rng));
    if (unit(rng) < s.two_interest_prob) {
      std::size_t k2 = pick_interest(rng);
      while (k2 == mine[0]) k2 = pick_interest(rng);
      mine.push_back(k2);
    }
    std::sort(mine.begin(), mine.end());
    for (std::size_t k : mine) users_with[k].push_back(u);
    const std::size_t degree = pick_degree(rng);
    std::set<std::size_t> items;
    while (items.size() < degree) {
      if (unit(rng) < s.noise) {
        items.insert(pick_any_item(rng));
      } else {
        const std::size_t k = mine[std::uniform_int_distribution<std::size_t>(0, mine.size() - 1)(rng)];
        items.insert(std::uniform_int_distribution<std::size_t>(block_begin(k), block_end(k) - 1)(rng));
      }
    }
    for (std::size_t v : items) ue.push_back({u, v});
  }

  std::vector<std::vector<std::size_t>> members(s.n_groups);
  std::vector<Edge> ge;
  w.group_interest.resize(s.n_groups);
  std::uniform_int_distribution<std::size_t> pick_size(s.min_group_size, s.max_group_size);
  for (std::size_t g = 0; g < s.n_groups; ++g) {
    const std::size_t k = pick_interest(rng);
    w.group_interest[g] = k;
    auto pool = users_with[k];
    if (pool.empty()) throw std::invalid_argument("generate_synthetic: no user holds a planted interest");
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(pool.size(), pick_size(rng)));
    std::sort(pool.begin(), pool.end());
    members[g] = std::move(pool);
    std::set<std::size_t> items;
    const std::size_t want = std::min(s.group_items, block_end(k) - block_begin(k));
    while (items.size() < want) {
      if (unit(rng) < s.noise) {
        items.insert(pick_any_item(rng));
      } else {
        items.insert(std::uniform_int_distribution<std::size_t>(block_begin(k), block_end(k) - 1)(rng));
      }
    }
    for (std::size_t v : items) ge.push_back({g, v});
  }

  Dataset& d = w.dataset;
  d.n_users = s.n_users;
  d.n_items = s.n_items;
  d.n_groups = s.n_groups;
  d.user_items = {s.n_users, s.n_items, std::move(ue), {}};
  d.group_items = {s.n_groups, s.n_items, std::move(ge), {}};
  d.group_members = std::move(members);
  d.validate();
  return w;
}

}  // namespace igrec
