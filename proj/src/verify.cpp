#include "snntcl/verify.hpp"

#include <cmath>
#include <functional>

#include "snntcl/losses.hpp"
#include "snntcl/nn.hpp"
#include "snntcl/oracle.hpp"
#include "snntcl/rng.hpp"
#include "snntcl/tensor.hpp"

namespace snntcl::verify {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kGradTol = 1e-5;

double rel_err(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    worst = std::max(worst, d / scale);
  }
  return worst;
}

Tensor random_tensor(Shape shape, RngStream& rng, double lo = -2.0,
                     double hi = 2.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Checks d(sum(probe * op(inputs)))/d(input i) against finite differences;
// the random probe exercises the whole jacobian.
CheckResult check_op(
    const std::string& name, std::vector<Tensor> inputs,
    const std::function<Tensor(const std::vector<Tensor>&)>& op,
    RngStream& rng) {
  Tensor out0 = op(inputs);
  Tensor probe = random_tensor(out0.shape(), rng, -1.0, 1.0);

  CheckResult res{name, 0.0, true};
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    Tensor analytic;
    {
      Graph g;
      std::vector<Tensor> tracked = inputs;
      for (auto& t : tracked) t.set_node(-1);
      g.watch(tracked[which]);
      Tensor loss = sum(mul(op(tracked), probe));
      g.backward(loss);
      analytic = g.grad(tracked[which]);
    }
    auto f = [&](const Tensor& x) {
      std::vector<Tensor> probe_inputs = inputs;
      probe_inputs[which] = x;
      Tensor out = op(probe_inputs);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
      return s;
    };
    Tensor numeric = finite_diff_gradient(f, inputs[which], kFdStep);
    res.max_err = std::max(res.max_err, rel_err(analytic, numeric));
  }
  res.pass = res.max_err <= kGradTol;
  return res;
}

Tensor away_from(Tensor t, double point, double margin) {
  for (auto& v : t.data())
    if (std::abs(v - point) < margin) v = point + (v >= point ? margin : -margin);
  return t;
}

}  // namespace

std::vector<CheckResult> gradient_checks(std::uint64_t seed) {
  RngStream rng(seed, "verify/grad");
  std::vector<CheckResult> results;
  auto add_check = [&](const std::string& name, std::vector<Tensor> inputs,
                       std::function<Tensor(const std::vector<Tensor>&)> op) {
    results.push_back(check_op(name, std::move(inputs), op, rng));
  };

  add_check("add", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
            [](const auto& in) { return add(in[0], in[1]); });
  add_check("sub", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
            [](const auto& in) { return sub(in[0], in[1]); });
  add_check("mul", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
            [](const auto& in) { return mul(in[0], in[1]); });
  add_check("scalar_mul", {random_tensor({5}, rng)},
            [](const auto& in) { return scalar_mul(in[0], -1.7); });
  add_check("matmul", {random_tensor({2, 3}, rng), random_tensor({3, 4}, rng)},
            [](const auto& in) { return matmul(in[0], in[1]); });
  add_check("relu", {away_from(random_tensor({4, 4}, rng), 0.0, 0.05)},
            [](const auto& in) { return relu(in[0]); });
  add_check("exp", {random_tensor({3, 3}, rng, -1.5, 1.5)},
            [](const auto& in) { return snntcl::exp(in[0]); });
  add_check("log", {random_tensor({3, 3}, rng, 0.2, 2.0)},
            [](const auto& in) { return snntcl::log(in[0]); });
  add_check("sum", {random_tensor({2, 5}, rng)},
            [](const auto& in) { return sum(in[0]); });
  add_check("sum_axis", {random_tensor({2, 3, 4}, rng)},
            [](const auto& in) { return sum_axis(in[0], 1); });
  add_check("mean_axis", {random_tensor({3, 2, 4}, rng)},
            [](const auto& in) { return mean_axis(in[0], 0); });
  add_check("reshape", {random_tensor({2, 6}, rng)},
            [](const auto& in) { return reshape(in[0], {3, 4}); });
  add_check("concat",
            {random_tensor({2, 3}, rng), random_tensor({4, 3}, rng)},
            [](const auto& in) { return concat({in[0], in[1]}, 0); });
  add_check("conv2d",
            {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng),
             random_tensor({3}, rng)},
            [](const auto& in) { return conv2d(in[0], in[1], in[2], 1, 1); });
  add_check("conv2d_stride2",
            {random_tensor({1, 2, 6, 6}, rng), random_tensor({2, 2, 3, 3}, rng),
             random_tensor({2}, rng)},
            [](const auto& in) { return conv2d(in[0], in[1], in[2], 2, 1); });
  add_check("avgpool2d", {random_tensor({1, 2, 6, 6}, rng)},
            [](const auto& in) { return avgpool2d(in[0], 2, 2); });
  add_check("global_avg_pool", {random_tensor({2, 3, 4, 4}, rng)},
            [](const auto& in) { return global_avg_pool(in[0]); });
  add_check("linear",
            {random_tensor({3, 4}, rng), random_tensor({5, 4}, rng),
             random_tensor({5}, rng)},
            [](const auto& in) { return linear(in[0], in[1], in[2]); });
  add_check("l2_normalize_rows", {random_tensor({4, 3}, rng, 0.3, 2.0)},
            [](const auto& in) { return l2_normalize_rows(in[0]); });
  {
    std::vector<double> rm(3, 0.0), rv(3, 1.0);
    add_check("batchnorm_2d",
              {random_tensor({6, 3}, rng), random_tensor({3}, rng, 0.5, 1.5),
               random_tensor({3}, rng)},
              [rm, rv](const auto& in) mutable {
                return batchnorm(in[0], in[1], in[2], rm, rv, true);
              });
  }
  {
    std::vector<double> rm(2, 0.0), rv(2, 1.0);
    add_check("batchnorm_4d",
              {random_tensor({3, 2, 4, 4}, rng),
               random_tensor({2}, rng, 0.5, 1.5), random_tensor({2}, rng)},
              [rm, rv](const auto& in) mutable {
                return batchnorm(in[0], in[1], in[2], rm, rv, true);
              });
  }
  {
    std::vector<int> labels{0, 2, 1};
    add_check("softmax_cross_entropy", {random_tensor({3, 3}, rng)},
              [labels](const auto& in) {
                return softmax_cross_entropy(in[0], labels);
              });
  }

  // Spike nonlinearity: backward against the closed-form surrogate
  // derivative (finite differences cannot see a piecewise-constant forward).
  for (auto kind : {SurrogateKind::Rectangular, SurrogateKind::Triangular}) {
    const double width = 1.0, v_th = 1.0;
    Tensor u = random_tensor({40}, rng, -1.0, 3.0);
    u = away_from(u, v_th - width / 2.0, 1e-3);
    u = away_from(u, v_th + width / 2.0, 1e-3);
    Tensor probe = random_tensor({40}, rng, -1.0, 1.0);
    Tensor analytic;
    {
      Graph g;
      u.set_node(-1);
      g.watch(u);
      g.backward(sum(mul(heaviside_surrogate(u, v_th, kind, width), probe)));
      analytic = g.grad(u);
    }
    CheckResult res;
    res.name = kind == SurrogateKind::Rectangular ? "surrogate_rectangular"
                                                  : "surrogate_triangular";
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double expected =
          probe[i] * surrogate_derivative_scalar(u[i], v_th, kind, width);
      res.max_err = std::max(res.max_err, std::abs(analytic[i] - expected));
    }
    res.pass = res.max_err <= 1e-12;
    results.push_back(res);
  }

  // Loss families as tensor-to-scalar maps.
  {
    std::vector<int> labels{0, 1};
    add_check("loss_bl", {random_tensor({3, 2, 4}, rng)},
              [labels](const auto& in) { return loss_bl(in[0], labels); });
    add_check("loss_tet", {random_tensor({3, 2, 4}, rng)},
              [labels](const auto& in) { return loss_tet(in[0], labels); });
  }
  for (bool supervised : {false, true}) {
    const std::size_t T = 2, B = 3, D = 4;
    std::vector<int> labels{0, 0, 1};
    LossConfig cfg;
    cfg.tau = 0.07;
    cfg.supervised = supervised;
    // Raw (unnormalized) bank; normalization is part of the checked map so
    // perturbed points stay valid.
    add_check(supervised ? "loss_contrastive_sup" : "loss_contrastive_unsup",
              {random_tensor({T * B, D}, rng, -1.5, 1.5)},
              [labels, cfg, T, B, D](const auto& in) {
                Tensor bank =
                    reshape(l2_normalize_rows(in[0]), {T, B, D});
                return loss_temporal_contrastive(bank, labels, cfg);
              });
  }
  {
    const std::size_t T = 2, B = 2, C = 3, D = 3;
    std::vector<int> labels{0, 1};
    LossConfig cfg;
    cfg.family = LossFamily::TCL;
    cfg.lambda = 0.7;
    add_check("loss_tcl",
              {random_tensor({T, B, C}, rng), random_tensor({T * B, D}, rng, -1.5, 1.5)},
              [labels, cfg, T, B, D](const auto& in) {
                Tensor bank = reshape(l2_normalize_rows(in[1]), {T, B, D});
                return loss_tcl(in[0], {bank}, labels, cfg).total;
              });
    LossConfig scfg = cfg;
    scfg.family = LossFamily::STCL;
    scfg.lambda = 5.0;
    add_check("loss_stcl",
              {random_tensor({T, B, C}, rng), random_tensor({T, B, C}, rng),
               random_tensor({T * B, D}, rng, -1.5, 1.5),
               random_tensor({T * B, D}, rng, -1.5, 1.5)},
              [labels, scfg, T, B, D](const auto& in) {
                Tensor bank1 = reshape(l2_normalize_rows(in[2]), {T, B, D});
                Tensor bank2 = reshape(l2_normalize_rows(in[3]), {T, B, D});
                return loss_stcl(in[0], in[1], {bank1}, {bank2}, labels, scfg)
                    .total;
              });
  }
  {
    // project(): two-layer head + normalization as one map.
    add_check("project",
              {random_tensor({2, 3}, rng), random_tensor({3, 3}, rng),
               random_tensor({3}, rng), random_tensor({4, 3}, rng),
               random_tensor({4}, rng, 0.1, 0.5)},
              [](const auto& in) {
                ProjectionHead head;
                head.l1 = {in[1], in[2]};
                head.l2 = {in[3], in[4]};
                return head.forward(in[0]);
              });
  }
  return results;
}

std::vector<CheckResult> oracle_checks(std::uint64_t seed, std::size_t banks) {
  std::vector<CheckResult> results;

  // Contrastive losses vs the scalar-loop oracle on random banks.
  {
    RngStream rng(seed, "verify/oracle-banks");
    CheckResult res{"contrastive_vs_oracle", 0.0, true};
    std::size_t done = 0;
    while (done < banks) {
      const std::size_t B = static_cast<std::size_t>(rng.uniform_int(1, 4));
      const std::size_t T = static_cast<std::size_t>(rng.uniform_int(1, 3));
      const std::size_t D = static_cast<std::size_t>(rng.uniform_int(2, 6));
      const std::size_t V = static_cast<std::size_t>(rng.uniform_int(1, 2));
      const bool supervised = rng.bernoulli(0.5);
      static const double taus[] = {0.05, 0.07, 0.5, 5.0};
      const double tau = taus[rng.uniform_int(0, 3)];
      const std::size_t rows = V * B;
      std::vector<int> labels(rows);
      for (std::size_t i = 0; i < B; ++i) {
        const int y = static_cast<int>(rng.uniform_int(0, 3));
        for (std::size_t v = 0; v < V; ++v) labels[v * B + i] = y;
      }
      std::vector<std::vector<std::vector<double>>> bank(
          rows, std::vector<std::vector<double>>(T, std::vector<double>(D)));
      Tensor z(Shape{T, rows, D});
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < T; ++t) {
          double norm = 0.0;
          for (std::size_t d = 0; d < D; ++d) {
            bank[r][t][d] = rng.normal(0.0, 1.0);
            norm += bank[r][t][d] * bank[r][t][d];
          }
          norm = std::sqrt(norm);
          for (std::size_t d = 0; d < D; ++d) {
            bank[r][t][d] /= norm;
            z.at((t * rows + r) * D + d) = bank[r][t][d];
          }
        }
      LossConfig cfg;
      cfg.tau = tau;
      cfg.supervised = supervised;
      double engine;
      try {
        engine = loss_temporal_contrastive(z, labels, cfg).value();
      } catch (const ValidationError&) {
        continue;  // no positive pairs for this draw; redraw
      }
      const double reference =
          oracle::oracle_contrastive(bank, labels, tau, supervised);
      res.max_err = std::max(res.max_err, std::abs(engine - reference));
      ++done;
    }
    res.pass = res.max_err <= 1e-10;
    results.push_back(res);
  }

  // LIF traces must be bit-identical to the scalar recurrence, including
  // threshold-boundary inputs.
  {
    RngStream rng(seed, "verify/oracle-lif");
    CheckResult res{"lif_vs_oracle", 0.0, true};
    for (std::size_t trial = 0; trial < 100; ++trial) {
      LifParams params;
      params.alpha = rng.uniform(0.1, 1.0);
      params.v_th = rng.uniform(0.5, 1.5);
      const std::size_t T = static_cast<std::size_t>(rng.uniform_int(3, 12));
      std::vector<double> inputs(T);
      for (auto& x : inputs) x = rng.uniform(-0.5, 1.5);
      if (trial % 5 == 0) inputs[T / 2] = params.v_th;  // exact boundary
      oracle::LifScalarParams op{params.alpha, params.v_th};
      auto trace = oracle::oracle_lif(inputs, op);
      Tensor u = Tensor::zeros({1});
      for (std::size_t t = 0; t < T; ++t) {
        auto [y, u_next] = lif_step(u, Tensor({1}, {inputs[t]}), params);
        if (y[0] != trace.spikes[t] || u_next[0] != trace.u[t]) {
          res.pass = false;
          res.max_err = std::max(
              {res.max_err, std::abs(y[0] - trace.spikes[t]),
               std::abs(u_next[0] - trace.u[t])});
        }
        u = u_next;
      }
    }
    res.pass = res.pass && res.max_err == 0.0;
    results.push_back(res);
  }

  // Cross-entropy against direct scalar math.
  {
    RngStream rng(seed, "verify/oracle-ce");
    CheckResult res{"ce_vs_oracle", 0.0, true};
    for (std::size_t trial = 0; trial < 100; ++trial) {
      const std::size_t C = static_cast<std::size_t>(rng.uniform_int(2, 6));
      std::vector<double> logits(C);
      for (auto& v : logits) v = rng.uniform(-3.0, 3.0);
      const int label = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(C) - 1));
      Tensor row(Shape{1, C}, logits);
      const double engine = softmax_cross_entropy(row, {label}).value();
      const double reference = oracle::oracle_ce(logits, label);
      res.max_err = std::max(res.max_err, std::abs(engine - reference));
    }
    res.pass = res.max_err <= 1e-12;
    results.push_back(res);
  }
  return results;
}

bool all_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace snntcl::verify
