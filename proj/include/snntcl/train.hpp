#pragma once

#include <string>
#include <vector>

#include "snntcl/config.hpp"
#include "snntcl/serialize.hpp"

namespace snntcl {

/// One momentum-SGD update: g' = g + wd*w; v <- momentum*v + g';
/// w <- w - lr*v. Rejects non-finite gradients.
void sgd_step(Tensor& w, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay);

struct EpochRecord {
  std::size_t epoch = 0;
  double ce_loss = 0.0;
  double cl_loss = 0.0;
  double total_loss = 0.0;
  double train_acc = 0.0;
  double eval_acc = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::string final_checkpoint;
  std::string best_checkpoint;
  double best_eval_acc = 0.0;
};

struct FitOptions {
  /// false zeroes the wall_seconds column, making metrics files byte-stable
  /// across runs.
  bool wall_clock = true;
  bool verbose = false;
};

/// Runs the full training loop described by the config, writing
/// metrics.csv, metrics.jsonl, final.ck and best.ck under out_dir.
FitResult fit(const RunConfig& cfg, const std::string& out_dir,
              const FitOptions& opts = {});

/// Weight decay applies to weights only, not biases or batchnorm affine
/// parameters.
bool decay_exempt(const std::string& param_name);

Checkpoint make_checkpoint(Model& model, const RunConfig& resolved_cfg,
                           const std::vector<std::pair<std::string, Tensor>>&
                               velocity = {});
void restore_model(Model& model, const Checkpoint& ck);
/// Rebuilds the model from the config embedded in the checkpoint.
Model model_from_checkpoint(const Checkpoint& ck, RunConfig* cfg_out = nullptr);

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochRecord>& history);
void write_metrics_jsonl(const std::string& path,
                         const std::vector<EpochRecord>& history);

/// Loads the train/eval pair named by the data config (from disk or
/// generated synthetically).
std::pair<Dataset, Dataset> load_data_pair(const DataConfig& data);

/// Augmentation policy implied by the run config for the given dataset.
AugmentPolicy resolve_policy(const RunConfig& cfg, const Dataset& train);

}  // namespace snntcl
