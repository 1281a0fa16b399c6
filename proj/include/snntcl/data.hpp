#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snntcl/rng.hpp"
#include "snntcl/tensor.hpp"

namespace snntcl {

enum class DatasetKind { Static, Event };

struct Dataset {
  DatasetKind kind = DatasetKind::Static;
  Tensor images;  // static: [N,C,H,W]; event: [N,T_ev,2,H,W], binary
  std::vector<int> labels;
  std::size_t class_count = 0;
  std::vector<double> mean, stddev;  // per-channel, static kind
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t channels() const {
    return kind == DatasetKind::Static ? images.dim(1) : images.dim(2);
  }
  std::size_t side() const {
    return images.dim(images.rank() - 1);
  }
  /// One sample without the leading N axis.
  Tensor sample(std::size_t i) const;
  void validate() const;
};

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t samples_per_class = 200;
  std::size_t image_side = 12;
  bool temporal = false;  // event kind
  std::size_t event_steps = 4;
  std::size_t channels = 3;  // static kind
  double noise = 0.25;
  std::uint64_t seed = 0;
};

/// Static kind: class-conditional blob patterns plus noise. Event kind:
/// binary spatio-temporal patterns where the class is encoded in the
/// temporal order of active regions, so time-collapsed frames lose most of
/// the class signal.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Splits one generated pool into train/eval, taking the first
/// train_per_class samples of every class block for train and the rest for
/// eval. Both halves share class patterns and normalization statistics;
/// generating the eval set under a different seed would redraw the static
/// class prototypes and score against a different task.
std::pair<Dataset, Dataset> split_train_eval(const Dataset& pool,
                                             std::size_t train_per_class);

/// Fraction correct of a leave-one-out nearest-centroid classifier.
/// per_step=false first collapses event frames over time; used as the
/// dataset self-test showing temporal order carries signal.
double nearest_centroid_accuracy(const Dataset& ds, bool per_step);

struct AugmentOp {
  enum class Kind {
    RandomCrop,
    HorizontalFlip,
    Normalize,
    Cutout,
    ColorJitter,
    RandomGrayscale,
  };
  Kind kind = Kind::HorizontalFlip;
  double p = 0.5;                  // flip / grayscale trigger probability
  std::size_t pad = 2;             // random crop padding
  std::size_t size = 4;            // cutout square side
  double strength = 0.4;           // color jitter magnitude
  std::vector<double> mean, stddev;  // normalize
};

struct AugmentPolicy {
  std::vector<AugmentOp> ops;

  /// Normalize must appear at most once and after all pixel-space ops.
  void validate() const;

  static AugmentPolicy none() { return {}; }
  /// Crop(pad 2) + flip(0.5) + normalize: the TCL static recipe.
  static AugmentPolicy standard(std::vector<double> mean,
                                std::vector<double> stddev);
  /// standard + cutout + color jitter(0.4) + random grayscale(0.2): the
  /// STCL static recipe.
  static AugmentPolicy full(std::vector<double> mean,
                            std::vector<double> stddev,
                            std::size_t cutout_size);
};

/// image: [C,H,W], pixel space. Deterministic given the stream state;
/// output shape equals input shape.
Tensor augment(const Tensor& image, const AugmentPolicy& policy,
               RngStream& rng);

/// Two independent augmentation draws of the same image.
std::pair<Tensor, Tensor> make_views(const Tensor& image,
                                     const AugmentPolicy& policy,
                                     RngStream& rng);

/// [C,H,W] -> [T,C,H,W], T identical copies.
Tensor replicate_static(const Tensor& image, std::size_t T);

/// Groups event frames [T_ev,2,H,W] into T uniform bins with logical OR.
Tensor bin_event_frames(const Tensor& frames, std::size_t T);

/// Area pooling to out_side x out_side followed by binarization at 0.5.
Tensor event_area_downscale(const Tensor& frames, std::size_t out_side);

/// Directory layout: meta.txt (key value lines) + images.tensor +
/// labels.tensor. Round trips are byte-identical.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace snntcl
