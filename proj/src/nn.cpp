#include "snntcl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "snntcl/rng.hpp"

namespace snntcl {

void LifParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("lif: alpha must be in (0,1], got " +
                          std::to_string(alpha));
  if (!(v_th > 0.0))
    throw ValidationError("lif: v_th must be > 0, got " + std::to_string(v_th));
  if (!(surrogate_width > 0.0))
    throw ValidationError("lif: surrogate width must be > 0, got " +
                          std::to_string(surrogate_width));
}

LifStepResult lif_step(const Tensor& u_prev, const Tensor& x,
                       const LifParams& params) {
  if (u_prev.shape() != x.shape())
    throw ShapeError("lif_step: state shape " + shape_str(u_prev.shape()) +
                     " does not match input " + shape_str(x.shape()));
  Tensor u_pre = add(scalar_mul(u_prev, params.alpha), x);
  Tensor y = heaviside_surrogate(u_pre, params.v_th, params.surrogate,
                                 params.surrogate_width);
  Tensor u_next;
  if (params.reset_detach) {
    Tensor keep(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) keep.at(i) = 1.0 - y[i];
    u_next = mul(u_pre, keep);
  } else {
    u_next = mul(u_pre, sub(Tensor::full(y.shape(), 1.0), y));
  }
  return {std::move(y), std::move(u_next)};
}

EncoderConfig EncoderConfig::tiny_sew(std::size_t in_channels,
                                      std::size_t image_side,
                                      std::size_t classes) {
  EncoderConfig cfg;
  cfg.in_channels = in_channels;
  cfg.image_side = image_side;
  cfg.classes = classes;
  cfg.blocks = {
      {BlockSpec::Kind::Conv, 8, 3, 1, true, false},
      {BlockSpec::Kind::Conv, 16, 3, 2, true, false},
      {BlockSpec::Kind::Conv, 32, 3, 2, true, true},
  };
  cfg.tap_blocks = {1};  // midpoint; final block is implicit
  return cfg;
}

std::vector<std::size_t> EncoderConfig::taps() const {
  std::set<std::size_t> t(tap_blocks.begin(), tap_blocks.end());
  t.insert(blocks.size() - 1);
  return {t.begin(), t.end()};
}

void EncoderConfig::validate() const {
  if (blocks.empty()) throw ValidationError("encoder: no blocks");
  for (auto i : tap_blocks)
    if (i >= blocks.size())
      throw ValidationError("encoder: tap block " + std::to_string(i) +
                            " out of range");
  for (const auto& b : blocks) {
    if (b.out == 0) throw ValidationError("encoder: block with zero width");
    if (b.kind == BlockSpec::Kind::Conv && b.stride != 1 && b.stride != 2)
      throw ValidationError("encoder: conv stride must be 1 or 2");
  }
  if (classes == 0) throw ValidationError("encoder: classes must be >= 1");
}

std::vector<double> firing_rate(const std::vector<Tensor>& spikes) {
  std::vector<double> rates;
  rates.reserve(spikes.size());
  for (std::size_t b = 0; b < spikes.size(); ++b) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < spikes[b].size(); ++i) {
      const double v = spikes[b][i];
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw ValidationError("firing_rate: non-binary value " +
                              std::to_string(v) + " in block " +
                              std::to_string(b));
    }
    rates.push_back(spikes[b].size() == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(ones) /
                              static_cast<double>(spikes[b].size()));
  }
  return rates;
}

Tensor ProjectionHead::forward(const Tensor& h, bool strict) const {
  Tensor z = linear(relu(linear(h, l1.w, l1.b)), l2.w, l2.b);
  return l2_normalize_rows(z, strict);
}

namespace {

Tensor slice_step(const Tensor& input, std::size_t t) {
  Shape s(input.shape().begin() + 1, input.shape().end());
  std::size_t n = input.size() / input.dim(0);
  std::vector<double> v(input.data().begin() + t * n,
                        input.data().begin() + (t + 1) * n);
  return Tensor(std::move(s), std::move(v));
}

Tensor with_leading_axis(const Tensor& t) {
  Shape s{1};
  s.insert(s.end(), t.shape().begin(), t.shape().end());
  return reshape(t, s);
}

void init_dense(Tensor& w, std::size_t fan_in, RngStream& rs) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : w.data()) v = rs.normal(0.0, stddev);
}

}  // namespace

Model::Model(EncoderConfig cfg, LifParams lif)
    : cfg_(std::move(cfg)), lif_(lif) {
  cfg_.validate();
  lif_.validate();
  std::size_t in = cfg_.in_channels;
  bool spatial = true;
  for (const auto& spec : cfg_.blocks) {
    Block b;
    if (spec.kind == BlockSpec::Kind::Conv) {
      if (!spatial)
        throw ValidationError("encoder: conv block after linear block");
      b.w = Tensor(Shape{spec.out, in, spec.kernel, spec.kernel});
      if (!spec.batchnorm) b.b = Tensor(Shape{spec.out});
    } else {
      b.w = Tensor(Shape{spec.out, in});
      if (!spec.batchnorm) b.b = Tensor(Shape{spec.out});
      spatial = false;
    }
    if (spec.batchnorm) {
      b.bn_gamma = Tensor(Shape{spec.out});
      b.bn_beta = Tensor(Shape{spec.out});
      b.bn_mean.assign(spec.out, 0.0);
      b.bn_var.assign(spec.out, 1.0);
    }
    if (spec.residual) {
      if (spec.kind != BlockSpec::Kind::Conv)
        throw ValidationError("encoder: residual only supported on conv blocks");
      b.sc_w = Tensor(Shape{spec.out, in, 1, 1});
      b.sc_gamma = Tensor(Shape{spec.out});
      b.sc_beta = Tensor(Shape{spec.out});
      b.sc_mean.assign(spec.out, 0.0);
      b.sc_var.assign(spec.out, 1.0);
    }
    block_widths_.push_back(spec.out);
    blocks_.push_back(std::move(b));
    in = spec.out;
  }
  readout_.w = Tensor(Shape{cfg_.classes, in});
  readout_.b = Tensor(Shape{cfg_.classes});
  for (auto tap : cfg_.taps()) {
    const std::size_t d = block_widths_[tap];
    ProjectionHead head;
    head.l1.w = Tensor(Shape{d, d});
    head.l1.b = Tensor(Shape{d});
    head.l2.w = Tensor(Shape{cfg_.proj_dim, d});
    head.l2.b = Tensor(Shape{cfg_.proj_dim});
    heads_.push_back(std::move(head));
  }
}

std::size_t Model::tap_width(std::size_t block) const {
  return block_widths_.at(block);
}

std::vector<std::pair<std::string, Tensor*>> Model::params(bool include_heads) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    auto& b = blocks_[i];
    out.emplace_back(p + ".weight", &b.w);
    if (b.b.size()) out.emplace_back(p + ".bias", &b.b);
    if (b.bn_gamma.size()) {
      out.emplace_back(p + ".bn.gamma", &b.bn_gamma);
      out.emplace_back(p + ".bn.beta", &b.bn_beta);
    }
    if (b.sc_w.size()) {
      out.emplace_back(p + ".shortcut.weight", &b.sc_w);
      out.emplace_back(p + ".shortcut.bn.gamma", &b.sc_gamma);
      out.emplace_back(p + ".shortcut.bn.beta", &b.sc_beta);
    }
  }
  out.emplace_back("readout.weight", &readout_.w);
  out.emplace_back("readout.bias", &readout_.b);
  if (include_heads) {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      const std::string p = "head" + std::to_string(h);
      out.emplace_back(p + ".l1.weight", &heads_[h].l1.w);
      out.emplace_back(p + ".l1.bias", &heads_[h].l1.b);
      out.emplace_back(p + ".l2.weight", &heads_[h].l2.w);
      out.emplace_back(p + ".l2.bias", &heads_[h].l2.b);
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> Model::buffers() {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    auto& b = blocks_[i];
    if (!b.bn_mean.empty()) {
      out.emplace_back(p + ".bn.running_mean", &b.bn_mean);
      out.emplace_back(p + ".bn.running_var", &b.bn_var);
    }
    if (!b.sc_mean.empty()) {
      out.emplace_back(p + ".shortcut.bn.running_mean", &b.sc_mean);
      out.emplace_back(p + ".shortcut.bn.running_var", &b.sc_var);
    }
  }
  return out;
}

void Model::init_params(std::uint64_t seed) {
  for (auto& [name, t] : params(true)) {
    RngStream rs(seed, "init/" + name);
    if (name.starts_with("head") && name.ends_with(".l2.bias")) {
      // Nonzero so an all-silent tap still yields a nonzero embedding row
      // (row normalization leaves exact zeros alone).
      for (auto& v : t->data()) v = rs.uniform(-0.1, 0.1);
    } else if (name.ends_with(".bias") || name.ends_with(".beta")) {
      for (auto& v : t->data()) v = 0.0;
    } else if (name.ends_with(".gamma")) {
      for (auto& v : t->data()) v = 1.0;
    } else {
      std::size_t fan_in = t->size() / t->dim(0);
      init_dense(*t, fan_in, rs);
    }
  }
  for (auto& [name, buf] : buffers()) {
    const bool var = name.ends_with("running_var");
    std::fill(buf->begin(), buf->end(), var ? 1.0 : 0.0);
  }
}

void Model::watch(Graph& g, bool include_heads) {
  for (auto& [name, t] : params(true)) t->set_node(-1);
  for (auto& [name, t] : params(include_heads)) g.watch(*t);
}

TemporalOutputs Model::forward(const Tensor& input, bool training,
                               bool with_taps, bool record_spikes) {
  if (input.rank() < 3)
    throw ShapeError("forward: expected [T,B,...] input, got " +
                     shape_str(input.shape()));
  const std::size_t T = input.dim(0);
  const auto taps = cfg_.taps();

  std::vector<Tensor> u(blocks_.size());     // main-path membrane per block
  std::vector<Tensor> u_sc(blocks_.size());  // shortcut membrane
  std::vector<Tensor> step_logits;
  std::vector<std::vector<Tensor>> step_embeddings(taps.size());
  std::vector<std::vector<Tensor>> step_spikes(blocks_.size());

  for (std::size_t t = 0; t < T; ++t) {
    Tensor h = slice_step(input, t);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& spec = cfg_.blocks[i];
      auto& blk = blocks_[i];
      Tensor residual_in = h;
      Tensor pre;
      if (spec.kind == BlockSpec::Kind::Conv) {
        pre = conv2d(h, blk.w, blk.b, spec.stride, spec.kernel / 2);
      } else {
        if (h.rank() > 2) pre = flatten(h);
        else pre = h;
        pre = linear(pre, blk.w, blk.b);
      }
      if (spec.batchnorm)
        pre = batchnorm(pre, blk.bn_gamma, blk.bn_beta, blk.bn_mean,
                        blk.bn_var, training);
      if (t == 0) u[i] = Tensor(pre.shape());
      else if (u[i].shape() != pre.shape())
        throw ShapeError("forward: membrane state drifted from " +
                         shape_str(u[i].shape()) + " to " +
                         shape_str(pre.shape()) + " at block " +
                         std::to_string(i));
      auto [y, u_next] = lif_step(u[i], pre, lif_);
      u[i] = u_next;
      Tensor out = y;
      if (spec.residual) {
        Tensor sc = conv2d(residual_in, blk.sc_w, Tensor(), spec.stride, 0);
        sc = batchnorm(sc, blk.sc_gamma, blk.sc_beta, blk.sc_mean, blk.sc_var,
                       training);
        if (t == 0) u_sc[i] = Tensor(sc.shape());
        auto [y_sc, u_sc_next] = lif_step(u_sc[i], sc, lif_);
        u_sc[i] = u_sc_next;
        out = add(y, y_sc);  // spike-ADD, values in {0,1,2}
      }
      if (record_spikes) step_spikes[i].push_back(with_leading_axis(y.detached()));
      h = out;
      if (with_taps) {
        auto it = std::find(taps.begin(), taps.end(), i);
        if (it != taps.end()) {
          const std::size_t hi = static_cast<std::size_t>(it - taps.begin());
          Tensor feat = out.rank() == 4 ? global_avg_pool(out) : out;
          Tensor z = heads_[hi].forward(feat);
          step_embeddings[hi].push_back(with_leading_axis(z));
        }
      }
    }
    Tensor pooled = h.rank() == 4 ? global_avg_pool(h) : h;
    step_logits.push_back(with_leading_axis(linear(pooled, readout_.w, readout_.b)));
  }

  TemporalOutputs out;
  out.logits = concat(step_logits, 0);
  if (with_taps)
    for (auto& se : step_embeddings) out.tap_embeddings.push_back(concat(se, 0));
  if (record_spikes)
    for (auto& ss : step_spikes) out.spikes.push_back(concat(ss, 0).detached());
  return out;
}

}  // namespace snntcl
