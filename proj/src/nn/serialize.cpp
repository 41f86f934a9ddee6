#include "docgen/nn/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace docgen::nn {

namespace {
constexpr char kMagic[8] = {'D', 'G', 'C', 'K', 'P', 'T', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["meta"] = meta;
  header["params"] = nlohmann::json::array();
  for (const Parameter* p : store.all()) {
    header["params"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
  }
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u64(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  std::uint64_t checksum = fnv1a(nullptr, 0);
  for (const Parameter* p : store.all()) {
    const char* bytes = reinterpret_cast<const char*>(p->value.data());
    std::size_t len = p->value.size() * sizeof(double);
    os.write(bytes, static_cast<std::streamsize>(len));
    checksum = fnv1a(bytes, len, checksum);
  }
  write_u64(os, checksum);
  if (!os) throw std::runtime_error("error writing checkpoint: " + path);
}

namespace {

nlohmann::json load_checkpoint_impl(const std::string& path, ParameterStore& store, bool create) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  }
  std::uint64_t header_len = read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(header_str);

  std::uint64_t checksum = fnv1a(nullptr, 0);
  for (const auto& entry : header.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
    Parameter* p;
    if (create) {
      p = &store.create(name, shape);
    } else {
      p = store.find(name);
      if (!p) throw std::runtime_error("checkpoint parameter " + name + " missing from store");
      if (p->value.shape() != shape) {
        throw std::runtime_error("checkpoint parameter " + name + " shape mismatch");
      }
    }
    char* bytes = reinterpret_cast<char*>(p->value.data());
    std::size_t len = p->value.size() * sizeof(double);
    is.read(bytes, static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error("truncated checkpoint data: " + path);
    checksum = fnv1a(bytes, len, checksum);
  }
  std::uint64_t stored = read_u64(is);
  if (!is || stored != checksum) {
    throw std::runtime_error("checkpoint checksum mismatch: " + path);
  }
  return header.at("meta");
}

}  // namespace

nlohmann::json load_checkpoint(const std::string& path, ParameterStore& store) {
  return load_checkpoint_impl(path, store, /*create=*/true);
}

nlohmann::json load_checkpoint_into(const std::string& path, ParameterStore& store) {
  return load_checkpoint_impl(path, store, /*create=*/false);
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  }
  std::uint64_t header_len = read_u64(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("truncated checkpoint header: " + path);
  return nlohmann::json::parse(header_str).at("meta");
}

std::unordered_map<std::string, std::vector<double>> load_word2vec_text(const std::string& path,
                                                                        std::size_t dim) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open embedding file: " + path);
  std::unordered_map<std::string, std::vector<double>> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    vec.reserve(dim);
    double v;
    while (ls >> v) vec.push_back(v);
    if (line_no == 1 && vec.size() == 1 && table.empty()) {
      // "count dim" header line
      continue;
    }
    if (vec.size() != dim) {
      throw std::runtime_error("embedding file " + path + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) + " values, got " +
                               std::to_string(vec.size()));
    }
    table[word] = std::move(vec);
  }
  return table;
}

}  // namespace docgen::nn
