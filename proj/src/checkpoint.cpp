#include "igrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace igrec {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'I', 'G', 'R', 'E', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("truncated checkpoint: " + path.string());
  return v;
}

std::string get_string(std::istream& is, std::uint64_t len, const std::filesystem::path& path) {
  if (len > (1ull << 32)) throw CheckpointError("corrupt checkpoint (string length): " + path.string());
  std::string s(len, '\0');
  if (len && !is.read(s.data(), static_cast<std::streamsize>(len)))
    throw CheckpointError("truncated checkpoint: " + path.string());
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  nlohmann::json header = {
      {"config", to_json(c.config)},
      {"dataset_fingerprint", c.dataset_fingerprint},
      {"n_users", c.n_users},
      {"n_items", c.n_items},
      {"n_groups", c.n_groups},
      {"best_epoch", c.best_epoch},
      {"best_valid", c.best_valid},
  };
  const std::string text = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write checkpoint: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(os, c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const std::string& name = c.params.name(i);
    const Matrix& m = c.params[i];
    put<std::uint64_t>(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(os, m.rows());
    put<std::uint64_t>(os, m.cols());
    os.write(reinterpret_cast<const char*>(m.values().data()),
             static_cast<std::streamsize>(m.values().size() * sizeof(double)));
  }
  if (!os) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw CheckpointError("not an IGRec checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());

  Checkpoint c;
  const auto header_len = get<std::uint64_t>(is, path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_string(is, header_len, path));
    c.config = config_from_json(header.at("config"));
    c.dataset_fingerprint = header.at("dataset_fingerprint").get<std::string>();
    c.n_users = header.at("n_users").get<std::size_t>();
    c.n_items = header.at("n_items").get<std::size_t>();
    c.n_groups = header.at("n_groups").get<std::size_t>();
    c.best_epoch = header.at("best_epoch").get<std::size_t>();
    c.best_valid = header.at("best_valid").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }

  const auto count = get<std::uint64_t>(is, path);
  for (std::uint64_t t = 0; t < count; ++t) {
    std::string name = get_string(is, get<std::uint64_t>(is, path), path);
    const auto rows = get<std::uint64_t>(is, path);
    const auto cols = get<std::uint64_t>(is, path);
    if (rows > (1ull << 32) || cols > (1ull << 32)) throw CheckpointError("corrupt tensor shape in " + path.string());
    Matrix m(rows, cols);
    if (!m.values().empty() &&
        !is.read(reinterpret_cast<char*>(m.values().data()),
                 static_cast<std::streamsize>(m.values().size() * sizeof(double))))
      throw CheckpointError("truncated tensor '" + name + "' in " + path.string());
    c.params.add(std::move(name), std::move(m));
  }
  return c;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 14];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace igrec
