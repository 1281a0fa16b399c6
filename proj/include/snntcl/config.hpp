#pragma once

#include <cstdint>
#include <string>

#include "snntcl/data.hpp"
#include "snntcl/losses.hpp"
#include "snntcl/nn.hpp"

namespace snntcl {

enum class LrSchedule { Constant, Cosine };

struct OptimConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  LrSchedule lr_schedule = LrSchedule::Cosine;
  std::uint64_t seed = 42;

  void validate() const;
  double lr_at(std::size_t epoch) const;
};

struct DataConfig {
  // Either a directory holding train/ and eval/ dataset subdirectories, or
  // a synthetic spec (eval split generated from seed+1).
  std::string dir;
  bool use_synthetic = false;
  SyntheticSpec synthetic;
  std::size_t synthetic_eval_per_class = 40;
};

enum class AugmentPreset { None, Standard, Full };

struct RunConfig {
  EncoderConfig encoder;       // resolved against the dataset by the trainer
  std::string encoder_preset;  // "tiny-sew" or "" for explicit blocks
  LifParams lif;
  LossConfig loss;
  OptimConfig optim;
  DataConfig data;
  std::size_t T = 4;
  AugmentPreset augment = AugmentPreset::None;

  void validate() const;
  /// Fills in-channels, image side and class count from the dataset and
  /// expands the preset, if any.
  void resolve_encoder(const Dataset& train);

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::uint64_t arch_hash() const;
};

}  // namespace snntcl
