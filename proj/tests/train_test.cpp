#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "snntcl/eval.hpp"
#include "snntcl/train.hpp"

using namespace snntcl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("snntcl-train-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_static_config(LossFamily family, std::uint64_t seed = 42) {
  RunConfig cfg;
  cfg.encoder_preset = "tiny-sew";
  cfg.loss.family = family;
  cfg.loss.lambda = LossConfig::default_lambda(family);
  cfg.T = 2;
  cfg.optim.epochs = 2;
  cfg.optim.batch_size = 8;
  cfg.optim.seed = seed;
  cfg.data.use_synthetic = true;
  cfg.data.synthetic.classes = 2;
  cfg.data.synthetic.samples_per_class = 8;
  cfg.data.synthetic.image_side = 8;
  cfg.data.synthetic.channels = 1;
  cfg.data.synthetic.seed = 3;
  cfg.data.synthetic_eval_per_class = 4;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sgd_step worked example") {
  Tensor w = Tensor::zeros({1});
  Tensor v = Tensor::zeros({1});
  Tensor g(Shape{1}, {1.0});
  sgd_step(w, g, v, 0.1, 0.9, 0.0);
  CHECK(w[0] == doctest::Approx(-0.1).epsilon(1e-12));
  sgd_step(w, g, v, 0.1, 0.9, 0.0);
  // v = 0.9*1 + 1 = 1.9; w = -0.1 - 0.19 = -0.29
  CHECK(w[0] == doctest::Approx(-0.29).epsilon(1e-12));
}

TEST_CASE("weight decay pulls toward zero and skips exempt names") {
  Tensor w(Shape{1}, {1.0});
  Tensor v = Tensor::zeros({1});
  Tensor g = Tensor::zeros({1});
  sgd_step(w, g, v, 0.1, 0.0, 0.5);
  CHECK(w[0] == doctest::Approx(0.95).epsilon(1e-12));

  CHECK(decay_exempt("block0.bias"));
  CHECK(decay_exempt("block1.bn.gamma"));
  CHECK(decay_exempt("block2.shortcut.bn.beta"));
  CHECK_FALSE(decay_exempt("block0.weight"));
  CHECK_FALSE(decay_exempt("readout.weight"));
}

TEST_CASE("sgd_step rejects non-finite gradients") {
  Tensor w = Tensor::zeros({1});
  Tensor v = Tensor::zeros({1});
  Tensor g(Shape{1}, {std::nan("")});
  CHECK_THROWS_AS(sgd_step(w, g, v, 0.1, 0.9, 0.0), NumericError);
}

TEST_CASE("cosine schedule starts at lr and decays") {
  OptimConfig o;
  o.lr = 0.1;
  o.epochs = 10;
  CHECK(o.lr_at(0) == doctest::Approx(0.1));
  CHECK(o.lr_at(5) == doctest::Approx(0.05));
  CHECK(o.lr_at(9) < o.lr_at(1));
  o.lr_schedule = LrSchedule::Constant;
  CHECK(o.lr_at(9) == 0.1);
}

TEST_CASE("config json round trip and unknown-key rejection") {
  RunConfig cfg = tiny_static_config(LossFamily::TCL);
  const std::string text = cfg.to_json();
  RunConfig back = RunConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.loss.family == LossFamily::TCL);
  CHECK(back.data.synthetic.samples_per_class == 8);
  CHECK_THROWS_AS(RunConfig::from_json("{\"typo\": 1}"), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json("{\"optim\": {\"lerning_rate\": 0.1}}"),
                  ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json("not json"), ValidationError);
}

TEST_CASE("fit with zero epochs still writes a checkpoint") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::BL);
  cfg.optim.epochs = 0;
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  CHECK(result.history.empty());
  CHECK(fs::exists(result.final_checkpoint));
  Checkpoint ck = load_checkpoint(result.final_checkpoint);
  RunConfig loaded_cfg;
  Model model = model_from_checkpoint(ck, &loaded_cfg);
  CHECK(loaded_cfg.encoder.blocks.size() == 3);
}

TEST_CASE("training reduces the loss on learnable static data") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::BL);
  cfg.optim.epochs = 5;
  cfg.optim.lr = 0.05;
  cfg.data.synthetic.samples_per_class = 16;
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  REQUIRE(result.history.size() == 5);
  CHECK(result.history.back().total_loss < result.history.front().total_loss);
  CHECK(fs::exists(tmp.path / "run" / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "run" / "metrics.jsonl"));
  CHECK(fs::exists(result.best_checkpoint));
}

TEST_CASE("loss decomposition holds in the metrics") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::TCL);
  cfg.loss.lambda = 0.5;
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  for (const auto& rec : result.history) {
    CHECK(rec.total_loss ==
          doctest::Approx(rec.ce_loss + 0.5 * rec.cl_loss).epsilon(1e-9));
    CHECK(rec.cl_loss >= 0.0);
  }
}

TEST_CASE("lambda zero TCL matches BL exactly") {
  TempDir tmp;
  FitOptions opts;
  opts.wall_clock = false;
  RunConfig bl = tiny_static_config(LossFamily::BL);
  RunConfig tcl = tiny_static_config(LossFamily::TCL);
  tcl.loss.lambda = 0.0;
  FitResult r1 = fit(bl, (tmp.path / "bl").string(), opts);
  FitResult r2 = fit(tcl, (tmp.path / "tcl").string(), opts);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].total_loss == r2.history[e].total_loss);
    CHECK(r1.history[e].eval_acc == r2.history[e].eval_acc);
  }
}

TEST_CASE("identical runs are byte-identical") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::TCL);
  FitOptions opts;
  opts.wall_clock = false;
  fit(cfg, (tmp.path / "a").string(), opts);
  fit(cfg, (tmp.path / "b").string(), opts);
  CHECK(slurp(tmp.path / "a" / "final.ck") == slurp(tmp.path / "b" / "final.ck"));
  CHECK(slurp(tmp.path / "a" / "metrics.csv") ==
        slurp(tmp.path / "b" / "metrics.csv"));
  CHECK(slurp(tmp.path / "a" / "metrics.csv").starts_with(
      "epoch,ce_loss,cl_loss,total_loss,train_acc,eval_acc,lr,wall_seconds\n"));
}

TEST_CASE("checkpoint round trip preserves evaluation behavior") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::BL);
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  Checkpoint ck = load_checkpoint(result.final_checkpoint);
  RunConfig loaded;
  Model model = model_from_checkpoint(ck, &loaded);
  auto [train_ds, eval_ds] = load_data_pair(loaded.data);
  const double acc = evaluate_accuracy(model, eval_ds, loaded.T);
  CHECK(acc == doctest::Approx(result.history.back().eval_acc).epsilon(1e-12));
}

TEST_CASE("checkpoint rejects mismatched architectures") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::BL);
  cfg.optim.epochs = 0;
  FitResult result = fit(cfg, (tmp.path / "run").string());
  Checkpoint ck = load_checkpoint(result.final_checkpoint);
  ck.arch_hash ^= 1;
  CHECK_THROWS_AS(model_from_checkpoint(ck), ValidationError);
}

TEST_CASE("stcl training runs and keeps both loss parts") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::STCL);
  cfg.augment = AugmentPreset::Full;
  cfg.optim.epochs = 1;
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  REQUIRE(result.history.size() == 1);
  CHECK(result.history[0].ce_loss > 0.0);
  CHECK(result.history[0].cl_loss > 0.0);
  CHECK(result.history[0].total_loss ==
        doctest::Approx(result.history[0].ce_loss +
                        5.0 * result.history[0].cl_loss)
            .epsilon(1e-9));
}

TEST_CASE("event data trains through the binning path") {
  TempDir tmp;
  RunConfig cfg = tiny_static_config(LossFamily::TCL);
  cfg.data.synthetic.temporal = true;
  cfg.data.synthetic.event_steps = 4;
  cfg.T = 2;
  cfg.optim.epochs = 1;
  FitOptions opts;
  opts.wall_clock = false;
  FitResult result = fit(cfg, (tmp.path / "run").string(), opts);
  CHECK(result.history.size() == 1);
}

TEST_CASE("tensor file round trip") {
  TempDir tmp;
  Tensor t(Shape{2, 3}, {1.5, -2.25, 0.0, 1e-300, 3.0, 7.125});
  const std::string path = (tmp.path / "t.tensor").string();
  save_tensor(path, t);
  Tensor back = load_tensor(path);
  CHECK(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
  CHECK_THROWS(load_tensor((tmp.path / "missing.tensor").string()));
}
