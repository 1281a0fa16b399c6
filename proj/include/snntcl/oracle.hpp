#pragma once

// Scalar-loop reference implementations used to cross-check the engine.
// Deliberately free of any engine types: plain nested vectors in, doubles
// out, explicit loops over every index tuple.

#include <cstddef>
#include <vector>

namespace snntcl::oracle {

/// Temporal contrastive loss over a bank z[row][t][d] of unit-norm vectors,
/// where rows fold the view and batch axes. labels: one class per row.
/// supervised=false: positives are same-row other-time entries;
/// supervised=true: all same-label entries except the anchor itself, each
/// weighted by 1/|P(i)| with |P(i)| counting same-label rows including i.
double oracle_contrastive(const std::vector<std::vector<std::vector<double>>>& z,
                          const std::vector<int>& labels, double tau,
                          bool supervised);

struct LifTrace {
  std::vector<double> u_pre;
  std::vector<double> spikes;
  std::vector<double> u;
};

struct LifScalarParams {
  double alpha = 0.5;
  double v_th = 1.0;
};

/// Direct recurrence: u_pre = alpha*u + x, spike iff u_pre >= v_th (boundary
/// spikes), hard reset to zero.
LifTrace oracle_lif(const std::vector<double>& inputs,
                    const LifScalarParams& params);

/// -log softmax(logits)[label] via direct scalar math.
double oracle_ce(const std::vector<double>& logits, int label);

}  // namespace snntcl::oracle
