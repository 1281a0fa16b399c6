#include "snntcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snntcl {

void LossConfig::validate() const {
  if (!(tau > 0.0))
    throw ValidationError("loss: tau must be > 0, got " + std::to_string(tau));
  if (lambda < 0.0)
    throw ValidationError("loss: lambda must be >= 0, got " +
                          std::to_string(lambda));
  for (double w : tap_weights)
    if (w < 0.0) throw ValidationError("loss: negative tap weight");
}

std::vector<double> LossConfig::effective_tap_weights(std::size_t n_taps) const {
  if (tap_weights.empty())
    return std::vector<double>(n_taps, 1.0 / static_cast<double>(n_taps));
  if (tap_weights.size() != n_taps)
    throw ValidationError("loss: " + std::to_string(tap_weights.size()) +
                          " tap weights for " + std::to_string(n_taps) +
                          " taps");
  double s = std::accumulate(tap_weights.begin(), tap_weights.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-9)
    throw ValidationError("loss: tap weights must sum to 1");
  return tap_weights;
}

Tensor loss_bl(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 3)
    throw ShapeError("loss_bl: expected [T,B,C] logits, got " +
                     shape_str(logits.shape()));
  return softmax_cross_entropy(mean_axis(logits, 0), labels);
}

Tensor loss_tet(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 3)
    throw ShapeError("loss_tet: expected [T,B,C] logits, got " +
                     shape_str(logits.shape()));
  const std::size_t T = logits.dim(0), B = logits.dim(1), C = logits.dim(2);
  if (labels.size() != B)
    throw ShapeError("loss_tet: label count mismatch");
  // Mean CE over the T*B flattened rows equals (1/T) sum_t CE_t.
  std::vector<int> tiled(T * B);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b) tiled[t * B + b] = labels[b];
  return softmax_cross_entropy(reshape(logits, Shape{T * B, C}), tiled);
}

namespace {

struct ContrastiveIndex {
  std::size_t A = 0;
  std::vector<double> weight;  // [A*A] positive-pair weights
  std::vector<double> wrow;    // [A] row sums of weight
  std::size_t positive_pairs = 0;
};

// Row index convention: anchor (t, b) lives at row t*B + b.
ContrastiveIndex build_index(std::size_t T, std::size_t B,
                             const std::vector<int>& labels, bool supervised) {
  if (labels.size() != B)
    throw ShapeError("contrastive: " + std::to_string(labels.size()) +
                     " labels for batch " + std::to_string(B));
  ContrastiveIndex idx;
  idx.A = T * B;
  idx.weight.assign(idx.A * idx.A, 0.0);
  idx.wrow.assign(idx.A, 0.0);
  std::vector<std::size_t> class_size(B, 0);
  if (supervised) {
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t q = 0; q < B; ++q)
        if (labels[i] == labels[q]) ++class_size[i];
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < B; ++i) {
      const std::size_t a = t * B + i;
      for (std::size_t t2 = 0; t2 < T; ++t2)
        for (std::size_t q = 0; q < B; ++q) {
          const std::size_t p = t2 * B + q;
          double w = 0.0;
          if (supervised) {
            if (labels[i] == labels[q] && !(i == q && t == t2))
              w = 1.0 / static_cast<double>(class_size[i]);
          } else {
            if (i == q && t2 != t) w = 1.0;
          }
          if (w != 0.0) {
            idx.weight[a * idx.A + p] = w;
            idx.wrow[a] += w;
            ++idx.positive_pairs;
          }
        }
    }
  return idx;
}

// Z Z^T with gradient flowing through both operands.
Tensor gram(const Tensor& z) {
  const std::size_t A = z.dim(0), D = z.dim(1);
  Tensor out(Shape{A, A});
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < D; ++d) s += z[a * D + d] * z[b * D + d];
      out.at(a * A + b) = s;
      out.at(b * A + a) = s;
    }
  if (Graph* g = Graph::active(); g && z.tracked()) {
    int nz = z.node();
    Tensor zv = z.detached();
    out.set_node(g->add_node({nz}, out.size(), [nz, zv, A, D](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      auto& dz = g.grad_buf(nz);
      // dZ = (dS + dS^T) Z
      for (std::size_t a = 0; a < A; ++a)
        for (std::size_t b = 0; b < A; ++b) {
          const double gv = go[a * A + b] + go[b * A + a];
          if (gv == 0.0) continue;
          for (std::size_t d = 0; d < D; ++d)
            dz[a * D + d] += gv * zv[b * D + d];
        }
    }));
  }
  return out;
}

}  // namespace

Tensor loss_temporal_contrastive(const Tensor& z,
                                 const std::vector<int>& labels,
                                 const LossConfig& cfg) {
  cfg.validate();
  if (z.rank() != 3)
    throw ShapeError("contrastive: expected [T,B,D] bank, got " +
                     shape_str(z.shape()));
  const std::size_t T = z.dim(0), B = z.dim(1), D = z.dim(2);
  const std::size_t A = T * B;
  Tensor rows = reshape(z, Shape{A, D});
  for (std::size_t a = 0; a < A; ++a) {
    double n = 0.0;
    for (std::size_t d = 0; d < D; ++d) n += rows[a * D + d] * rows[a * D + d];
    if (std::abs(std::sqrt(n) - 1.0) > 1e-9)
      throw ValidationError("contrastive: bank row " + std::to_string(a) +
                            " has norm " + std::to_string(std::sqrt(n)) +
                            ", expected 1");
  }
  ContrastiveIndex idx = build_index(T, B, labels, cfg.supervised);
  if (idx.positive_pairs == 0)
    throw ValidationError("contrastive: no positive pairs exist (B=" +
                          std::to_string(B) + ", T=" + std::to_string(T) + ")");

  Tensor sim = scalar_mul(gram(rows), 1.0 / cfg.tau);

  // Off-diagonal row maxima, held constant for log-sum-exp stabilization.
  std::vector<double> rowmax(A, -1e300);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t k = 0; k < A; ++k)
      if (k != a) rowmax[a] = std::max(rowmax[a], sim[a * A + k]);
  Tensor max_mat(Shape{A, A});
  Tensor mask(Shape{A, A});
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t k = 0; k < A; ++k) {
      max_mat.at(a * A + k) = rowmax[a];
      mask.at(a * A + k) = k == a ? 0.0 : 1.0;
    }

  Tensor denom = sum_axis(mul(snntcl::exp(sub(sim, max_mat)), mask), 1);
  Tensor lse = add(snntcl::log(denom), Tensor(Shape{A}, rowmax));

  Tensor weighted_lse = sum(mul(lse, Tensor(Shape{A}, idx.wrow)));
  Tensor weighted_pos = sum(mul(sim, Tensor(Shape{A, A}, idx.weight)));
  return scalar_mul(sub(weighted_lse, weighted_pos),
                    1.0 / static_cast<double>(T));
}

double contrastive_from_similarity(const std::vector<double>& sim,
                                   std::size_t T, std::size_t B,
                                   const std::vector<int>& labels,
                                   const LossConfig& cfg) {
  cfg.validate();
  const std::size_t A = T * B;
  if (sim.size() != A * A)
    throw ShapeError("contrastive_from_similarity: matrix size mismatch");
  ContrastiveIndex idx = build_index(T, B, labels, cfg.supervised);
  if (idx.positive_pairs == 0)
    throw ValidationError("contrastive_from_similarity: no positive pairs");
  double total = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    if (idx.wrow[a] == 0.0) continue;
    double m = -1e300;
    for (std::size_t k = 0; k < A; ++k)
      if (k != a) m = std::max(m, sim[a * A + k] / cfg.tau);
    double denom = 0.0;
    for (std::size_t k = 0; k < A; ++k)
      if (k != a) denom += std::exp(sim[a * A + k] / cfg.tau - m);
    const double lse = std::log(denom) + m;
    for (std::size_t p = 0; p < A; ++p) {
      const double w = idx.weight[a * A + p];
      if (w != 0.0) total += w * (lse - sim[a * A + p] / cfg.tau);
    }
  }
  return total / static_cast<double>(T);
}

LossBreakdown loss_tcl(const Tensor& logits, const std::vector<Tensor>& taps,
                       const std::vector<int>& labels, const LossConfig& cfg) {
  cfg.validate();
  LossBreakdown out;
  Tensor ce = loss_bl(logits, labels);
  out.ce = ce.value();
  if (cfg.lambda == 0.0 || taps.empty()) {
    out.total = ce;
    return out;
  }
  auto w = cfg.effective_tap_weights(taps.size());
  Tensor cl;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    Tensor term =
        scalar_mul(loss_temporal_contrastive(taps[i], labels, cfg), w[i]);
    cl = i == 0 ? term : add(cl, term);
  }
  out.cl = cl.value();
  out.total = add(ce, scalar_mul(cl, cfg.lambda));
  return out;
}

LossBreakdown loss_stcl(const Tensor& logits_v1, const Tensor& logits_v2,
                        const std::vector<Tensor>& taps_v1,
                        const std::vector<Tensor>& taps_v2,
                        const std::vector<int>& labels, const LossConfig& cfg) {
  cfg.validate();
  if (taps_v1.size() != taps_v2.size())
    throw ShapeError("loss_stcl: view tap counts differ");
  LossBreakdown out;
  Tensor ce = add(loss_bl(logits_v1, labels), loss_bl(logits_v2, labels));
  out.ce = ce.value();
  if (cfg.lambda == 0.0 || taps_v1.empty()) {
    out.total = ce;
    return out;
  }
  std::vector<int> merged_labels(labels);
  merged_labels.insert(merged_labels.end(), labels.begin(), labels.end());
  auto w = cfg.effective_tap_weights(taps_v1.size());
  Tensor cl;
  for (std::size_t i = 0; i < taps_v1.size(); ++i) {
    Tensor bank = concat({taps_v1[i], taps_v2[i]}, 1);  // [T, 2B, D]
    Tensor term =
        scalar_mul(loss_temporal_contrastive(bank, merged_labels, cfg), w[i]);
    cl = i == 0 ? term : add(cl, term);
  }
  out.cl = cl.value();
  out.total = add(ce, scalar_mul(cl, cfg.lambda));
  return out;
}

}  // namespace snntcl
