#pragma once

#include <vector>

#include "snntcl/tensor.hpp"

namespace snntcl {

enum class LossFamily { BL, TET, TCL, STCL };

struct LossConfig {
  LossFamily family = LossFamily::TCL;
  double tau = 0.07;
  double lambda = 0.5;  // 5.0 is the STCL default
  bool supervised = true;
  std::vector<double> tap_weights;  // empty = uniform

  void validate() const;
  std::vector<double> effective_tap_weights(std::size_t n_taps) const;
  static double default_lambda(LossFamily family) {
    return family == LossFamily::STCL ? 5.0 : 0.5;
  }
};

/// Cross-entropy on the time-averaged logits. logits: [T,B,C].
Tensor loss_bl(const Tensor& logits, const std::vector<int>& labels);

/// Mean of per-time-step cross-entropies. logits: [T,B,C].
Tensor loss_tet(const Tensor& logits, const std::vector<int>& labels);

/// Temporal contrastive loss over an embedding bank z: [T,B,D] with
/// unit-norm rows (views already folded into the batch axis). Anchors are
/// all (sample, time) pairs; positives are same-sample other-time rows
/// (unsupervised) or all same-label rows except the anchor itself
/// (supervised). Denominators run over every other row.
Tensor loss_temporal_contrastive(const Tensor& z,
                                 const std::vector<int>& labels,
                                 const LossConfig& cfg);

struct LossBreakdown {
  Tensor total;
  double ce = 0.0;  // cross-entropy part
  double cl = 0.0;  // contrastive part, before lambda
};

/// BL + lambda * weighted-mean contrastive loss over taps.
LossBreakdown loss_tcl(const Tensor& logits, const std::vector<Tensor>& taps,
                       const std::vector<int>& labels, const LossConfig& cfg);

/// Siamese total: BL(view1) + BL(view2) + lambda * contrastive loss over the
/// merged two-view bank (both views of a sample share its label).
LossBreakdown loss_stcl(const Tensor& logits_v1, const Tensor& logits_v2,
                        const std::vector<Tensor>& taps_v1,
                        const std::vector<Tensor>& taps_v2,
                        const std::vector<int>& labels, const LossConfig& cfg);

/// Same contrastive value computed from a precomputed similarity matrix
/// sim[(t*B+b)*A + (t'*B+b')] of cosine similarities (A = T*B rows). Used by
/// the monotonicity harness in the tests.
double contrastive_from_similarity(const std::vector<double>& sim,
                                   std::size_t T, std::size_t B,
                                   const std::vector<int>& labels,
                                   const LossConfig& cfg);

}  // namespace snntcl
