#include "snntcl/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace snntcl {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need swaps");

namespace {

template <typename T>
void write_raw(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& context) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is)
    throw ValidationError(context + ": truncated or unreadable data");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const std::string& context) {
  auto n = read_raw<std::uint32_t>(is, context);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw ValidationError(context + ": truncated string");
  return s;
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("TSPK", 4);
  write_raw<std::uint32_t>(os, kTensorFormatVersion);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  write_raw<std::uint32_t>(os, 0);  // reserved
  for (auto d : t.shape()) write_raw<std::uint64_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is, const std::string& context) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TSPK", 4) != 0)
    throw ValidationError(context + ": bad tensor magic");
  auto version = read_raw<std::uint32_t>(is, context);
  if (version != kTensorFormatVersion)
    throw ValidationError(context + ": unsupported tensor format version " +
                          std::to_string(version));
  auto rank = read_raw<std::uint32_t>(is, context);
  read_raw<std::uint32_t>(is, context);  // reserved
  Shape shape(rank);
  std::size_t n = 1;
  for (auto& d : shape) {
    d = read_raw<std::uint64_t>(is, context);
    n *= d;
  }
  std::vector<double> data(n);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw ValidationError(context + ": truncated tensor payload");
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  write_tensor(os, t);
  if (!os) throw ValidationError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path);
  return read_tensor(is, path);
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os.write("SNCK", 4);
  write_raw<std::uint32_t>(os, kCheckpointVersion);
  write_raw<std::uint64_t>(os, ck.arch_hash);
  write_string(os, ck.run_config_json);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, t] : ck.params) {
    write_string(os, name);
    write_tensor(os, t);
  }
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ck.opt_state.size()));
  for (const auto& [name, t] : ck.opt_state) {
    write_string(os, name);
    write_tensor(os, t);
  }
  if (!os) throw ValidationError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SNCK", 4) != 0)
    throw ValidationError(path + ": not a checkpoint file");
  auto version = read_raw<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw ValidationError(path + ": unsupported checkpoint version " +
                          std::to_string(version));
  Checkpoint ck;
  ck.arch_hash = read_raw<std::uint64_t>(is, path);
  ck.run_config_json = read_string(is, path);
  auto np = read_raw<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < np; ++i) {
    std::string name = read_string(is, path);
    ck.params.emplace_back(name, read_tensor(is, path + ":" + name));
  }
  auto no = read_raw<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < no; ++i) {
    std::string name = read_string(is, path);
    ck.opt_state.emplace_back(name, read_tensor(is, path + ":" + name));
  }
  return ck;
}

}  // namespace snntcl
