#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snntcl/tensor.hpp"

namespace snntcl {

struct LifParams {
  double alpha = 0.5;
  double v_th = 1.0;
  SurrogateKind surrogate = SurrogateKind::Rectangular;
  double surrogate_width = 1.0;
  bool reset_detach = true;

  void validate() const;
};

/// One membrane-update step. u_pre = alpha*u_prev + x, spike on
/// u_pre >= v_th (boundary spikes), hard reset to zero. With reset_detach
/// the (1 - y) reset factor is a constant in the backward pass.
struct LifStepResult {
  Tensor y;
  Tensor u_next;
};
LifStepResult lif_step(const Tensor& u_prev, const Tensor& x,
                       const LifParams& params);

struct BlockSpec {
  enum class Kind { Conv, Linear };
  Kind kind = Kind::Conv;
  std::size_t out = 0;       // channels or features
  std::size_t kernel = 3;    // conv only
  std::size_t stride = 1;    // conv only
  bool batchnorm = true;
  bool residual = false;     // spike-ADD skip with projection shortcut
};

struct EncoderConfig {
  std::size_t in_channels = 2;
  std::size_t image_side = 12;
  std::vector<BlockSpec> blocks;
  std::vector<std::size_t> tap_blocks;  // final block is an implicit tap
  std::size_t classes = 4;
  std::size_t proj_dim = 128;  // projection head output width

  /// 3 conv blocks (8/16/32 channels, stride 2 on the last two), spike-ADD
  /// residual on the last, taps at the midpoint and final block.
  static EncoderConfig tiny_sew(std::size_t in_channels,
                                std::size_t image_side, std::size_t classes);

  /// Tap indices including the implicit final block, ascending, deduplicated.
  std::vector<std::size_t> taps() const;
  void validate() const;
};

struct TemporalOutputs {
  Tensor logits;                        // [T, B, C]
  std::vector<Tensor> tap_embeddings;   // per tap: [T, B, proj_dim], unit rows
  std::vector<Tensor> spikes;           // per block: [T, B, ...], binary, detached
};

/// Per-block firing rates in percent. Rejects non-binary spike tensors.
std::vector<double> firing_rate(const std::vector<Tensor>& spikes);

struct LinearLayer {
  Tensor w, b;
};

/// linear -> relu -> linear -> row L2 normalization.
struct ProjectionHead {
  LinearLayer l1, l2;
  Tensor forward(const Tensor& h, bool strict = false) const;
};

class Model {
 public:
  Model(EncoderConfig cfg, LifParams lif);

  /// Deterministic initialization; every parameter draws from its own
  /// (seed, "init/<name>") stream.
  void init_params(std::uint64_t seed);

  /// Named trainable tensors, stable order. Heads last so that checkpoint
  /// layouts of head-free configurations are prefixes.
  std::vector<std::pair<std::string, Tensor*>> params(bool include_heads = true);
  /// Non-trainable named buffers (batchnorm running statistics).
  std::vector<std::pair<std::string, std::vector<double>*>> buffers();

  /// Clears stale node ids and registers all parameters with the graph.
  void watch(Graph& g, bool include_heads = true);

  /// input: [T, B, C, H, W] (conv encoder) or [T, B, F]. Membrane state
  /// starts at zero and persists across the T steps.
  TemporalOutputs forward(const Tensor& input, bool training, bool with_taps,
                          bool record_spikes = false);

  const EncoderConfig& config() const { return cfg_; }
  const LifParams& lif() const { return lif_; }
  std::size_t block_count() const { return cfg_.blocks.size(); }
  /// Feature width seen by the tap head at a given block index.
  std::size_t tap_width(std::size_t block) const;

 private:
  struct Block {
    Tensor w, b;                 // conv [O,I,kh,kw] or linear [O,I]
    Tensor bn_gamma, bn_beta;
    std::vector<double> bn_mean, bn_var;
    Tensor sc_w;                 // shortcut 1x1 conv
    Tensor sc_gamma, sc_beta;
    std::vector<double> sc_mean, sc_var;
  };

  EncoderConfig cfg_;
  LifParams lif_;
  std::vector<Block> blocks_;
  LinearLayer readout_;
  std::vector<ProjectionHead> heads_;  // one per tap
  std::vector<std::size_t> block_widths_;  // output channels/features
};

}  // namespace snntcl
