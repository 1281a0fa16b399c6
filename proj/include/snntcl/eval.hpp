#pragma once

#include <string>
#include <vector>

#include "snntcl/data.hpp"
#include "snntcl/nn.hpp"

namespace snntcl {

/// Accuracy (percent) at inference with T time steps: batchnorm in running-
/// statistics mode, argmax of mean-over-t logits, no projection heads.
double evaluate_accuracy(Model& model, const Dataset& ds, std::size_t T,
                         std::size_t batch_size = 64);

struct SweepRow {
  std::size_t inference_T = 0;
  double accuracy = 0.0;  // percent
  double mean_ce = 0.0;
};

struct SweepReport {
  std::size_t train_T = 0;
  std::vector<SweepRow> rows;
};

/// Evaluates at every T' in 1..train_T from zero initial state, presenting
/// the first T' of the train_T-step input frames.
SweepReport sweep_inference(Model& model, const Dataset& ds,
                            std::size_t train_T, std::size_t batch_size = 64);

struct FiringReport {
  std::vector<double> block_rates;  // percent, one per block
  double accuracy = 0.0;            // percent
};

/// Firing rates aggregated over the whole evaluation set.
FiringReport profile_firing(Model& model, const Dataset& ds, std::size_t T,
                            std::size_t batch_size = 64);

void write_sweep_csv(const std::string& path, const SweepReport& report);
void write_firing_csv(const std::string& path, const FiringReport& report);

/// Renders accuracy-vs-T' curves from one or more sweep CSVs as an SVG.
void plot_sweeps(const std::vector<std::string>& csv_paths,
                 const std::string& out_path);

/// Model input for one sample at T steps: event frames binned, static
/// images normalized (per dataset statistics) and replicated.
Tensor inference_input(const Dataset& ds, std::size_t index, std::size_t T);

}  // namespace snntcl
