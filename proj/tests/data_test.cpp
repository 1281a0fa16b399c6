#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "snntcl/data.hpp"

using namespace snntcl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("snntcl-data-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("replicate_static copies frames") {
  Tensor img(Shape{1, 2, 2}, {1, 2, 3, 4});
  Tensor rep = replicate_static(img, 3);
  CHECK(rep.shape() == Shape{3, 1, 2, 2});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 4; ++i) CHECK(rep[t * 4 + i] == img[i]);
}

TEST_CASE("bin_event_frames ORs within uniform bins") {
  Tensor frames(Shape{4, 2, 1, 1}, {1, 0, 0, 0, 0, 0, 0, 1});
  Tensor binned = bin_event_frames(frames, 2);
  CHECK(binned.shape() == Shape{2, 2, 1, 1});
  CHECK(binned[0] == 1.0);  // OR of frames 0,1 channel 0
  CHECK(binned[1] == 0.0);
  CHECK(binned[3] == 1.0);  // OR of frames 2,3 channel 1
  Tensor same = bin_event_frames(frames, 4);
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(same[i] == frames[i]);
  CHECK_THROWS_AS(bin_event_frames(frames, 5), ValidationError);
}

TEST_CASE("event_area_downscale pools and binarizes") {
  Tensor frames(Shape{1, 1, 4, 4});
  // fill one 2x2 super-pixel fully, another half
  frames.at(0) = frames.at(1) = frames.at(4) = frames.at(5) = 1.0;  // top-left
  frames.at(2) = frames.at(3) = 1.0;                                // half of top-right
  Tensor down = event_area_downscale(frames, 2);
  CHECK(down[0] == 1.0);
  CHECK(down[1] == 1.0);  // exactly 0.5 rounds up
  CHECK(down[2] == 0.0);
  CHECK(down[3] == 0.0);
}

TEST_CASE("horizontal flip is an involution and crop offsets are bounded") {
  Tensor img(Shape{1, 2, 3}, {1, 2, 3, 4, 5, 6});
  AugmentPolicy flip_always;
  AugmentOp f;
  f.kind = AugmentOp::Kind::HorizontalFlip;
  f.p = 1.0;
  flip_always.ops = {f, f};
  RngStream rng(1, "test/flip");
  Tensor twice = augment(img, flip_always, rng);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(twice[i] == img[i]);

  AugmentPolicy crop;
  AugmentOp c;
  c.kind = AugmentOp::Kind::RandomCrop;
  c.pad = 2;
  crop.ops = {c};
  for (int trial = 0; trial < 20; ++trial) {
    Tensor out = augment(img, crop, rng);
    CHECK(out.shape() == img.shape());
  }
}

TEST_CASE("cutout zeroes exactly size^2 pixels per channel") {
  Tensor img = Tensor::full({2, 6, 6}, 1.0);
  AugmentPolicy policy;
  AugmentOp cut;
  cut.kind = AugmentOp::Kind::Cutout;
  cut.size = 3;
  policy.ops = {cut};
  RngStream rng(2, "test/cutout");
  Tensor out = augment(img, policy, rng);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] == 0.0) ++zeros;
  CHECK(zeros == 2 * 9);
}

TEST_CASE("grayscale averages channels; normalize uses stored stats") {
  Tensor img(Shape{2, 1, 1}, {0.0, 1.0});
  AugmentPolicy policy;
  AugmentOp g;
  g.kind = AugmentOp::Kind::RandomGrayscale;
  g.p = 1.0;
  policy.ops = {g};
  RngStream rng(3, "test/gray");
  Tensor out = augment(img, policy, rng);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.5));

  AugmentOp n;
  n.kind = AugmentOp::Kind::Normalize;
  n.mean = {0.5, 0.5};
  n.stddev = {0.5, 2.0};
  policy.ops = {n};
  Tensor norm = augment(img, policy, rng);
  CHECK(norm[0] == doctest::Approx(-1.0));
  CHECK(norm[1] == doctest::Approx(0.25));
}

TEST_CASE("policy rejects pixel ops after normalize") {
  AugmentPolicy p;
  AugmentOp n;
  n.kind = AugmentOp::Kind::Normalize;
  n.mean = {0.0};
  n.stddev = {1.0};
  AugmentOp f;
  f.kind = AugmentOp::Kind::HorizontalFlip;
  p.ops = {n, f};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.ops = {n, n};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.ops = {f, n};
  p.validate();
}

TEST_CASE("two views differ under a stochastic policy") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.samples_per_class = 2;
  spec.seed = 4;
  Dataset ds = generate_synthetic(spec);
  AugmentPolicy policy = AugmentPolicy::full(ds.mean, ds.stddev, 4);
  RngStream rng(5, "test/views");
  auto [v1, v2] = make_views(ds.sample(0), policy, rng);
  double diff = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) diff += std::abs(v1[i] - v2[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.samples_per_class = 5;
  spec.seed = 77;
  Dataset a = generate_synthetic(spec);
  Dataset b = generate_synthetic(spec);
  for (std::size_t i = 0; i < a.images.size(); ++i)
    CHECK(a.images[i] == b.images[i]);
  spec.seed = 78;
  Dataset c = generate_synthetic(spec);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.images.size(); ++i)
    diff += std::abs(a.images[i] - c.images[i]);
  CHECK(diff > 1.0);
}

TEST_CASE("static classes are separable and labels are balanced") {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.samples_per_class = 30;
  spec.seed = 21;
  Dataset ds = generate_synthetic(spec);
  std::vector<std::size_t> hist(4, 0);
  for (int y : ds.labels) ++hist[static_cast<std::size_t>(y)];
  for (auto h : hist) CHECK(h == 30);
  CHECK(nearest_centroid_accuracy(ds, true) > 0.9);
  CHECK(ds.mean.size() == 3);
  for (double s : ds.stddev) CHECK(s > 0.0);
}

TEST_CASE("event classes live in temporal order, not in static appearance") {
  SyntheticSpec spec;
  spec.temporal = true;
  spec.classes = 4;
  spec.samples_per_class = 40;
  spec.event_steps = 4;
  spec.seed = 31;
  Dataset ds = generate_synthetic(spec);
  CHECK(ds.kind == DatasetKind::Event);
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    CHECK((ds.images[i] == 0.0 || ds.images[i] == 1.0));
  const double per_step = nearest_centroid_accuracy(ds, true);
  const double collapsed = nearest_centroid_accuracy(ds, false);
  CHECK(per_step > 0.95);            // full spatio-temporal signal
  CHECK(collapsed < 0.6);            // time-collapsed frames mostly ambiguous
  CHECK(per_step - collapsed > 0.3);
}

TEST_CASE("dataset save/load round trip") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.classes = 2;
  spec.samples_per_class = 3;
  spec.seed = 9;
  Dataset ds = generate_synthetic(spec);
  const std::string dir = (tmp.path / "ds").string();
  save_dataset(ds, dir);
  Dataset back = load_dataset(dir);
  CHECK(back.kind == ds.kind);
  CHECK(back.class_count == ds.class_count);
  CHECK(back.labels == ds.labels);
  CHECK(back.images.shape() == ds.images.shape());
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    CHECK(back.images[i] == ds.images[i]);
  CHECK(back.mean == ds.mean);
  CHECK(back.stddev == ds.stddev);
}

TEST_CASE("dataset loading rejects corrupted inputs") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.classes = 2;
  spec.samples_per_class = 2;
  Dataset ds = generate_synthetic(spec);
  const std::string dir = (tmp.path / "ds").string();
  save_dataset(ds, dir);

  // truncated tensor payload
  {
    const auto p = fs::path(dir) / "images.tensor";
    fs::resize_file(p, fs::file_size(p) / 2);
    CHECK_THROWS(load_dataset(dir));
  }
  // label outside class_count
  save_dataset(ds, dir);
  {
    std::ofstream meta(fs::path(dir) / "meta.txt");
    meta << "format_version 1\nkind static\nclass_count 1\nseed 0\n";
  }
  CHECK_THROWS_AS(load_dataset(dir), ValidationError);
  CHECK_THROWS_AS(load_dataset((tmp.path / "missing").string()),
                  ValidationError);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.kind = DatasetKind::Event;
  ds.images = Tensor(Shape{1, 2, 2, 4, 4});
  ds.images.at(0) = 0.5;
  ds.labels = {0};
  ds.class_count = 1;
  CHECK_THROWS_AS(ds.validate(), ValidationError);
  ds.images.at(0) = 1.0;
  ds.validate();
}

TEST_CASE("split_train_eval partitions a class-blocked pool") {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.samples_per_class = 5;
  spec.channels = 2;
  spec.seed = 9;
  Dataset pool = generate_synthetic(spec);
  auto [train, eval] = split_train_eval(pool, 3);

  CHECK(train.size() == 9);
  CHECK(eval.size() == 6);
  CHECK(train.class_count == 3);
  // Both halves carry the pool statistics, so they normalize identically.
  CHECK(train.mean == pool.mean);
  CHECK(eval.mean == pool.mean);
  CHECK(eval.stddev == pool.stddev);

  // Rows are copied intact: train gets the first 3 of each class block,
  // eval the remaining 2.
  const std::size_t feat = pool.images.size() / pool.size();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t src = c * 5 + j, dst = c * 3 + j;
      CHECK(train.labels[dst] == pool.labels[src]);
      for (std::size_t f = 0; f < feat; f += 7)
        CHECK(train.images[dst * feat + f] == pool.images[src * feat + f]);
    }
    for (std::size_t j = 0; j < 2; ++j) {
      const std::size_t src = c * 5 + 3 + j, dst = c * 2 + j;
      CHECK(eval.labels[dst] == pool.labels[src]);
      for (std::size_t f = 0; f < feat; f += 7)
        CHECK(eval.images[dst * feat + f] == pool.images[src * feat + f]);
    }
  }

  CHECK_THROWS_AS(split_train_eval(pool, 0), ValidationError);
  CHECK_THROWS_AS(split_train_eval(pool, 5), ValidationError);
}
