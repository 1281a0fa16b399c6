#include "snntcl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "snntcl/eval.hpp"
#include "snntcl/rng.hpp"

namespace snntcl {

namespace fs = std::filesystem;

void sgd_step(Tensor& w, const Tensor& grad, Tensor& velocity, double lr,
              double momentum, double weight_decay) {
  if (w.shape() != grad.shape() || w.shape() != velocity.shape())
    throw ShapeError("sgd_step: shape mismatch");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = grad[i];
    if (!std::isfinite(g))
      throw NumericError("sgd_step: non-finite gradient");
    const double g2 = g + weight_decay * w[i];
    velocity.at(i) = momentum * velocity[i] + g2;
    w.at(i) = w[i] - lr * velocity[i];
  }
}

bool decay_exempt(const std::string& name) {
  return name.ends_with(".bias") || name.ends_with(".gamma") ||
         name.ends_with(".beta");
}

std::pair<Dataset, Dataset> load_data_pair(const DataConfig& data) {
  if (data.use_synthetic) {
    // One pool split per class: train and eval must share the class
    // patterns and normalization statistics.
    SyntheticSpec pool_spec = data.synthetic;
    pool_spec.samples_per_class += data.synthetic_eval_per_class;
    return split_train_eval(generate_synthetic(pool_spec),
                            data.synthetic.samples_per_class);
  }
  return {load_dataset((fs::path(data.dir) / "train").string()),
          load_dataset((fs::path(data.dir) / "eval").string())};
}

AugmentPolicy resolve_policy(const RunConfig& cfg, const Dataset& train) {
  if (train.kind == DatasetKind::Event) return AugmentPolicy::none();
  std::vector<double> mean = train.mean, stddev = train.stddev;
  if (mean.empty()) mean.assign(train.channels(), 0.0);
  if (stddev.empty()) stddev.assign(train.channels(), 1.0);
  switch (cfg.augment) {
    case AugmentPreset::None: {
      AugmentPolicy p;
      AugmentOp norm;
      norm.kind = AugmentOp::Kind::Normalize;
      norm.mean = mean;
      norm.stddev = stddev;
      p.ops = {norm};
      return p;
    }
    case AugmentPreset::Standard:
      return AugmentPolicy::standard(mean, stddev);
    case AugmentPreset::Full:
      return AugmentPolicy::full(mean, stddev, std::max<std::size_t>(2, train.side() / 3));
  }
  return AugmentPolicy::none();
}

Checkpoint make_checkpoint(
    Model& model, const RunConfig& resolved_cfg,
    const std::vector<std::pair<std::string, Tensor>>& velocity) {
  Checkpoint ck;
  ck.arch_hash = resolved_cfg.arch_hash();
  ck.run_config_json = resolved_cfg.to_json();
  for (auto& [name, t] : model.params(true)) ck.params.emplace_back(name, t->clone());
  for (auto& [name, buf] : model.buffers())
    ck.params.emplace_back("buffer:" + name,
                           Tensor(Shape{buf->size()}, *buf));
  for (const auto& [name, t] : velocity)
    ck.opt_state.emplace_back(name, t.clone());
  return ck;
}

void restore_model(Model& model, const Checkpoint& ck) {
  auto params = model.params(true);
  auto buffers = model.buffers();
  for (const auto& [name, t] : ck.params) {
    if (name.starts_with("buffer:")) {
      const std::string bname = name.substr(7);
      bool found = false;
      for (auto& [n, buf] : buffers)
        if (n == bname) {
          if (buf->size() != t.size())
            throw ValidationError("checkpoint: buffer size mismatch for " + bname);
          *buf = t.data();
          found = true;
        }
      if (!found)
        throw ValidationError("checkpoint: unknown buffer " + bname);
      continue;
    }
    bool found = false;
    for (auto& [n, p] : params)
      if (n == name) {
        if (p->shape() != t.shape())
          throw ValidationError("checkpoint: shape mismatch for " + name);
        p->data() = t.data();
        found = true;
      }
    if (!found) throw ValidationError("checkpoint: unknown parameter " + name);
  }
}

Model model_from_checkpoint(const Checkpoint& ck, RunConfig* cfg_out) {
  RunConfig cfg = RunConfig::from_json(ck.run_config_json);
  cfg.encoder.validate();
  if (cfg.arch_hash() != ck.arch_hash)
    throw ValidationError("checkpoint: architecture hash mismatch");
  Model model(cfg.encoder, cfg.lif);
  restore_model(model, ck);
  if (cfg_out) *cfg_out = cfg;
  return model;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Stacks per-sample [T, ...] tensors into one [T, B, ...] batch.
Tensor stack_time_major(const std::vector<Tensor>& samples) {
  const std::size_t B = samples.size();
  const std::size_t T = samples[0].dim(0);
  const std::size_t n = samples[0].size() / T;
  Shape s{T, B};
  s.insert(s.end(), samples[0].shape().begin() + 1, samples[0].shape().end());
  Tensor out(s);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      std::copy(samples[b].data().begin() + t * n,
                samples[b].data().begin() + (t + 1) * n,
                out.data().begin() + (t * B + b) * n);
  return out;
}

double batch_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t T = logits.dim(0), B = logits.dim(1), C = logits.dim(2);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < B; ++b) {
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (std::size_t t = 0; t < T; ++t) m += logits[(t * B + b) * C + c];
      if (m > best) {
        best = m;
        arg = c;
      }
    }
    if (arg == static_cast<std::size_t>(labels[b])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(B);
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write metrics: " + path);
  os << "epoch,ce_loss,cl_loss,total_loss,train_acc,eval_acc,lr,wall_seconds\n";
  for (const auto& r : history)
    os << r.epoch << ',' << fmt_double(r.ce_loss) << ','
       << fmt_double(r.cl_loss) << ',' << fmt_double(r.total_loss) << ','
       << fmt_double(r.train_acc) << ',' << fmt_double(r.eval_acc) << ','
       << fmt_double(r.lr) << ',' << fmt_double(r.wall_seconds) << '\n';
}

void write_metrics_jsonl(const std::string& path,
                         const std::vector<EpochRecord>& history) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write metrics: " + path);
  for (const auto& r : history)
    os << "{\"epoch\":" << r.epoch << ",\"ce_loss\":" << fmt_double(r.ce_loss)
       << ",\"cl_loss\":" << fmt_double(r.cl_loss)
       << ",\"total_loss\":" << fmt_double(r.total_loss)
       << ",\"train_acc\":" << fmt_double(r.train_acc)
       << ",\"eval_acc\":" << fmt_double(r.eval_acc)
       << ",\"lr\":" << fmt_double(r.lr)
       << ",\"wall_seconds\":" << fmt_double(r.wall_seconds) << "}\n";
}

FitResult fit(const RunConfig& cfg, const std::string& out_dir,
              const FitOptions& opts) {
  cfg.validate();
  auto [train_ds, eval_ds] = load_data_pair(cfg.data);
  RunConfig rc = cfg;
  rc.resolve_encoder(train_ds);

  Model model(rc.encoder, rc.lif);
  model.init_params(rc.optim.seed);

  const bool contrastive = (rc.loss.family == LossFamily::TCL ||
                            rc.loss.family == LossFamily::STCL) &&
                           rc.loss.lambda > 0.0;
  const bool siamese = rc.loss.family == LossFamily::STCL;
  const AugmentPolicy policy = resolve_policy(rc, train_ds);
  const bool is_event = train_ds.kind == DatasetKind::Event;

  std::vector<std::pair<std::string, Tensor>> velocity;
  for (auto& [name, t] : model.params(contrastive))
    velocity.emplace_back(name, Tensor(t->shape()));

  fs::create_directories(out_dir);
  FitResult result;
  result.final_checkpoint = (fs::path(out_dir) / "final.ck").string();
  result.best_checkpoint = (fs::path(out_dir) / "best.ck").string();
  result.best_eval_acc = -1.0;

  const std::size_t N = train_ds.size();
  std::vector<std::size_t> order(N);

  for (std::size_t epoch = 0; epoch < rc.optim.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = rc.optim.lr_at(epoch);
    RngStream shuffle_rng(rc.optim.seed, "shuffle/epoch" + std::to_string(epoch));
    RngStream aug_rng(rc.optim.seed, "augment/epoch" + std::to_string(epoch));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double sum_ce = 0.0, sum_cl = 0.0, sum_total = 0.0, sum_acc = 0.0;
    std::size_t seen = 0;

    for (std::size_t start = 0; start < N; start += rc.optim.batch_size) {
      const std::size_t bsz = std::min(rc.optim.batch_size, N - start);
      std::vector<int> labels(bsz);
      std::vector<Tensor> inputs1(bsz), inputs2;
      if (siamese) inputs2.resize(bsz);
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t idx = order[start + b];
        labels[b] = train_ds.labels[idx];
        Tensor sample = train_ds.sample(idx);
        if (is_event) {
          inputs1[b] = bin_event_frames(sample, rc.T);
          if (siamese) inputs2[b] = inputs1[b].clone();
        } else if (siamese) {
          auto [v1, v2] = make_views(sample, policy, aug_rng);
          inputs1[b] = replicate_static(v1, rc.T);
          inputs2[b] = replicate_static(v2, rc.T);
        } else {
          inputs1[b] = replicate_static(augment(sample, policy, aug_rng), rc.T);
        }
      }
      Tensor batch1 = stack_time_major(inputs1);

      Graph graph;
      model.watch(graph, contrastive);
      LossBreakdown loss;
      Tensor logits_for_acc;
      if (siamese) {
        Tensor batch2 = stack_time_major(inputs2);
        TemporalOutputs out1 = model.forward(batch1, true, contrastive);
        TemporalOutputs out2 = model.forward(batch2, true, contrastive);
        loss = loss_stcl(out1.logits, out2.logits, out1.tap_embeddings,
                         out2.tap_embeddings, labels, rc.loss);
        logits_for_acc = out1.logits.detached();
      } else {
        TemporalOutputs out = model.forward(batch1, true, contrastive);
        logits_for_acc = out.logits.detached();
        switch (rc.loss.family) {
          case LossFamily::BL:
            loss.total = loss_bl(out.logits, labels);
            loss.ce = loss.total.value();
            break;
          case LossFamily::TET:
            loss.total = loss_tet(out.logits, labels);
            loss.ce = loss.total.value();
            break;
          default:
            loss = loss_tcl(out.logits, out.tap_embeddings, labels, rc.loss);
            break;
        }
      }
      if (!std::isfinite(loss.total.value()))
        throw NumericError("fit: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(start / rc.optim.batch_size));
      graph.backward(loss.total);
      for (auto& [name, vel] : velocity) {
        for (auto& [pname, p] : model.params(true)) {
          if (pname != name) continue;
          Tensor grad = graph.grad(*p);
          const double wd = decay_exempt(name) ? 0.0 : rc.optim.weight_decay;
          sgd_step(*p, grad, vel, lr, rc.optim.momentum, wd);
          break;
        }
      }
      const double w = static_cast<double>(bsz);
      sum_ce += loss.ce * w;
      sum_cl += loss.cl * w;
      sum_total += loss.total.value() * w;
      sum_acc += batch_accuracy(logits_for_acc, labels) * w;
      seen += bsz;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.ce_loss = sum_ce / static_cast<double>(seen);
    rec.cl_loss = sum_cl / static_cast<double>(seen);
    rec.total_loss = sum_total / static_cast<double>(seen);
    rec.train_acc = 100.0 * sum_acc / static_cast<double>(seen);
    rec.eval_acc = evaluate_accuracy(model, eval_ds, rc.T);
    rec.lr = lr;
    rec.wall_seconds =
        opts.wall_clock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count()
            : 0.0;
    result.history.push_back(rec);
    if (opts.verbose)
      std::fprintf(stderr,
                   "epoch %zu total %.4f ce %.4f cl %.4f train %.2f eval %.2f\n",
                   epoch, rec.total_loss, rec.ce_loss, rec.cl_loss,
                   rec.train_acc, rec.eval_acc);
    if (rec.eval_acc > result.best_eval_acc) {
      result.best_eval_acc = rec.eval_acc;
      save_checkpoint(result.best_checkpoint,
                      make_checkpoint(model, rc, velocity));
    }
  }

  save_checkpoint(result.final_checkpoint, make_checkpoint(model, rc, velocity));
  write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), result.history);
  write_metrics_jsonl((fs::path(out_dir) / "metrics.jsonl").string(),
                      result.history);
  return result;
}

}  // namespace snntcl
