#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snntcl/tensor.hpp"

namespace snntcl {

// Tensor file: 16-byte header (magic "TSPK", format version u32, rank u32,
// reserved u32), rank little-endian u64 dimension sizes, row-major
// little-endian f64 payload.
inline constexpr std::uint32_t kTensorFormatVersion = 1;

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is, const std::string& context);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// Checkpoint: header (magic "SNCK", version u32, architecture hash u64),
// embedded run-config JSON, named parameter tensors in the tensor format,
// then named optimizer state tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint64_t arch_hash = 0;
  std::string run_config_json;
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Tensor>> opt_state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a, used for architecture hashes.
std::uint64_t fnv1a(const std::string& s);

}  // namespace snntcl
