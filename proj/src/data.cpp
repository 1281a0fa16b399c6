#include "snntcl/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "snntcl/serialize.hpp"

namespace snntcl {

namespace fs = std::filesystem;

Tensor Dataset::sample(std::size_t i) const {
  Shape s(images.shape().begin() + 1, images.shape().end());
  std::size_t n = images.size() / images.dim(0);
  std::vector<double> v(images.data().begin() + i * n,
                        images.data().begin() + (i + 1) * n);
  return Tensor(std::move(s), std::move(v));
}

void Dataset::validate() const {
  if (images.dim(0) != labels.size())
    throw ValidationError("dataset: images count " +
                          std::to_string(images.dim(0)) +
                          " does not match labels count " +
                          std::to_string(labels.size()));
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= class_count)
      throw ValidationError("dataset: label " + std::to_string(y) +
                            " outside class_count " +
                            std::to_string(class_count));
  if (kind == DatasetKind::Static && images.rank() != 4)
    throw ValidationError("dataset: static images must be [N,C,H,W]");
  if (kind == DatasetKind::Event) {
    if (images.rank() != 5 || images.dim(2) != 2)
      throw ValidationError("dataset: event images must be [N,T,2,H,W]");
    for (std::size_t i = 0; i < images.size(); ++i)
      if (images[i] != 0.0 && images[i] != 1.0)
        throw ValidationError("dataset: event data must be binary");
  }
}

namespace {

// Quadrant regions; each class activates the quadrants in a distinct order,
// so collapsing over time makes all classes look alike.
std::size_t region_of(std::size_t y, std::size_t x, std::size_t side) {
  const std::size_t half = side / 2;
  return (y >= half ? 2u : 0u) + (x >= half ? 1u : 0u);
}

// Distinct orderings of the 4 quadrants, rotations first so the first four
// classes start in different quadrants.
std::vector<std::array<std::size_t, 4>> quadrant_orders() {
  std::vector<std::array<std::size_t, 4>> orders;
  for (std::size_t r = 0; r < 4; ++r)
    orders.push_back({r, (r + 1) % 4, (r + 2) % 4, (r + 3) % 4});
  std::array<std::size_t, 4> p{0, 1, 2, 3};
  do {
    if (std::find(orders.begin(), orders.end(), p) == orders.end())
      orders.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return orders;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.image_side < 8)
    throw ValidationError("synthetic: image_side must be >= 8");
  if (spec.classes == 0 || spec.samples_per_class == 0)
    throw ValidationError("synthetic: empty dataset spec");
  const std::size_t N = spec.classes * spec.samples_per_class;
  const std::size_t H = spec.image_side, W = spec.image_side;
  Dataset ds;
  ds.class_count = spec.classes;
  ds.seed = spec.seed;
  ds.labels.resize(N);
  for (std::size_t i = 0; i < N; ++i)
    ds.labels[i] = static_cast<int>(i / spec.samples_per_class);

  if (spec.temporal) {
    ds.kind = DatasetKind::Event;
    const auto orders = quadrant_orders();
    if (spec.classes > orders.size())
      throw ValidationError("synthetic: at most " +
                            std::to_string(orders.size()) +
                            " event classes supported");
    const std::size_t T = spec.event_steps;
    ds.images = Tensor(Shape{N, T, 2, H, W});
    const double p_on0 = 0.60, p_on1 = 0.30;
    const double p_noise = spec.noise * 0.35;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t c = static_cast<std::size_t>(ds.labels[i]);
      RngStream rs(spec.seed, "event-sample/" + std::to_string(i));
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t active = orders[c][t % 4];
        for (std::size_t ch = 0; ch < 2; ++ch)
          for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
              const bool in_region = region_of(y, x, H) == active;
              const double p =
                  in_region ? (ch == 0 ? p_on0 : p_on1) : p_noise;
              ds.images.at((((i * T + t) * 2 + ch) * H + y) * W + x) =
                  rs.bernoulli(p) ? 1.0 : 0.0;
            }
      }
    }
  } else {
    ds.kind = DatasetKind::Static;
    const std::size_t C = spec.channels;
    ds.images = Tensor(Shape{N, C, H, W});
    // Per-class smooth blob prototypes.
    std::vector<std::vector<double>> proto(spec.classes,
                                           std::vector<double>(C * H * W, 0.0));
    for (std::size_t c = 0; c < spec.classes; ++c) {
      RngStream rs(spec.seed, "class-pattern/" + std::to_string(c));
      for (std::size_t blob = 0; blob < 3; ++blob) {
        const double cy = rs.uniform(1.0, static_cast<double>(H) - 2.0);
        const double cx = rs.uniform(1.0, static_cast<double>(W) - 2.0);
        const double sigma = rs.uniform(1.2, 2.5);
        for (std::size_t ch = 0; ch < C; ++ch) {
          const double amp = rs.uniform(0.3, 1.0);
          for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
              const double dy = static_cast<double>(y) - cy;
              const double dx = static_cast<double>(x) - cx;
              proto[c][(ch * H + y) * W + x] +=
                  amp * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            }
        }
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t c = static_cast<std::size_t>(ds.labels[i]);
      RngStream rs(spec.seed, "static-sample/" + std::to_string(i));
      const std::ptrdiff_t sy = rs.uniform_int(-1, 1);
      const std::ptrdiff_t sx = rs.uniform_int(-1, 1);
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t y = 0; y < H; ++y)
          for (std::size_t x = 0; x < W; ++x) {
            const std::ptrdiff_t py = static_cast<std::ptrdiff_t>(y) - sy;
            const std::ptrdiff_t px = static_cast<std::ptrdiff_t>(x) - sx;
            double v = 0.0;
            if (py >= 0 && py < static_cast<std::ptrdiff_t>(H) && px >= 0 &&
                px < static_cast<std::ptrdiff_t>(W))
              v = proto[c][(ch * H + py) * W + px];
            v += rs.normal(0.0, spec.noise);
            ds.images.at(((i * C + ch) * H + y) * W + x) =
                std::clamp(v, 0.0, 1.5);
          }
    }
    // Per-channel statistics, stored for the normalize op.
    ds.mean.assign(C, 0.0);
    ds.stddev.assign(C, 0.0);
    const std::size_t per_ch = N * H * W;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t s = 0; s < H * W; ++s)
          ds.mean[ch] += ds.images[(i * C + ch) * H * W + s];
    for (auto& m : ds.mean) m /= static_cast<double>(per_ch);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t s = 0; s < H * W; ++s) {
          const double d = ds.images[(i * C + ch) * H * W + s] - ds.mean[ch];
          ds.stddev[ch] += d * d;
        }
    for (auto& s : ds.stddev) s = std::sqrt(s / static_cast<double>(per_ch));
  }
  ds.validate();
  return ds;
}

std::pair<Dataset, Dataset> split_train_eval(const Dataset& pool,
                                             std::size_t train_per_class) {
  const std::size_t K = pool.class_count;
  if (K == 0 || pool.size() % K != 0)
    throw ValidationError("split_train_eval: pool not class-blocked");
  const std::size_t per_class = pool.size() / K;
  if (train_per_class == 0 || train_per_class >= per_class)
    throw ValidationError("split_train_eval: train_per_class out of range");
  const std::size_t eval_per_class = per_class - train_per_class;
  const std::size_t feat = pool.images.size() / pool.size();

  auto make_part = [&](std::size_t offset, std::size_t count) {
    Dataset part;
    part.kind = pool.kind;
    part.class_count = K;
    part.mean = pool.mean;
    part.stddev = pool.stddev;
    part.seed = pool.seed;
    Shape s = pool.images.shape();
    s[0] = K * count;
    part.images = Tensor(s);
    part.labels.resize(K * count);
    for (std::size_t c = 0; c < K; ++c)
      for (std::size_t j = 0; j < count; ++j) {
        const std::size_t src = c * per_class + offset + j;
        const std::size_t dst = c * count + j;
        part.labels[dst] = pool.labels[src];
        std::copy_n(pool.images.data().data() + src * feat, feat,
                    part.images.data().data() + dst * feat);
      }
    part.validate();
    return part;
  };
  return {make_part(0, train_per_class),
          make_part(train_per_class, eval_per_class)};
}

double nearest_centroid_accuracy(const Dataset& ds, bool per_step) {
  const std::size_t N = ds.size();
  const std::size_t feat_full = ds.images.size() / N;
  const bool collapse = ds.kind == DatasetKind::Event && !per_step;
  const std::size_t T = collapse ? ds.images.dim(1) : 1;
  const std::size_t feat = collapse ? feat_full / T : feat_full;

  auto feature = [&](std::size_t i, std::vector<double>& out) {
    out.assign(feat, 0.0);
    const double* p = ds.images.data().data() + i * feat_full;
    if (collapse) {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < feat; ++f) out[f] += p[t * feat + f];
      for (auto& v : out) v /= static_cast<double>(T);
    } else {
      out.assign(p, p + feat);
    }
  };

  std::vector<std::vector<double>> sums(ds.class_count,
                                        std::vector<double>(feat, 0.0));
  std::vector<std::size_t> counts(ds.class_count, 0);
  std::vector<double> f;
  for (std::size_t i = 0; i < N; ++i) {
    feature(i, f);
    auto& c = sums[static_cast<std::size_t>(ds.labels[i])];
    for (std::size_t j = 0; j < feat; ++j) c[j] += f[j];
    ++counts[static_cast<std::size_t>(ds.labels[i])];
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < N; ++i) {
    feature(i, f);
    const std::size_t own = static_cast<std::size_t>(ds.labels[i]);
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < ds.class_count; ++c) {
      // leave-one-out: a sample never contributes to the centroid it is
      // scored against, otherwise self-inclusion alone separates classes
      const double n = static_cast<double>(counts[c] - (c == own ? 1 : 0));
      if (n == 0.0) continue;
      double d = 0.0;
      for (std::size_t j = 0; j < feat; ++j) {
        const double mu = (sums[c][j] - (c == own ? f[j] : 0.0)) / n;
        const double e = f[j] - mu;
        d += e * e;
      }
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    if (arg == own) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(N);
}

void AugmentPolicy::validate() const {
  bool seen_normalize = false;
  for (const auto& op : ops) {
    if (op.kind == AugmentOp::Kind::Normalize) {
      if (seen_normalize)
        throw ValidationError("augment: normalize appears more than once");
      seen_normalize = true;
    } else if (seen_normalize) {
      throw ValidationError("augment: pixel-space op after normalize");
    }
  }
}

AugmentPolicy AugmentPolicy::standard(std::vector<double> mean,
                                      std::vector<double> stddev) {
  AugmentPolicy p;
  AugmentOp crop;
  crop.kind = AugmentOp::Kind::RandomCrop;
  crop.pad = 2;
  AugmentOp flip;
  flip.kind = AugmentOp::Kind::HorizontalFlip;
  flip.p = 0.5;
  AugmentOp norm;
  norm.kind = AugmentOp::Kind::Normalize;
  norm.mean = std::move(mean);
  norm.stddev = std::move(stddev);
  p.ops = {crop, flip, norm};
  return p;
}

AugmentPolicy AugmentPolicy::full(std::vector<double> mean,
                                  std::vector<double> stddev,
                                  std::size_t cutout_size) {
  AugmentPolicy p;
  AugmentOp crop;
  crop.kind = AugmentOp::Kind::RandomCrop;
  crop.pad = 2;
  AugmentOp flip;
  flip.kind = AugmentOp::Kind::HorizontalFlip;
  flip.p = 0.5;
  AugmentOp jitter;
  jitter.kind = AugmentOp::Kind::ColorJitter;
  jitter.strength = 0.4;
  AugmentOp gray;
  gray.kind = AugmentOp::Kind::RandomGrayscale;
  gray.p = 0.2;
  AugmentOp cut;
  cut.kind = AugmentOp::Kind::Cutout;
  cut.size = cutout_size;
  AugmentOp norm;
  norm.kind = AugmentOp::Kind::Normalize;
  norm.mean = std::move(mean);
  norm.stddev = std::move(stddev);
  p.ops = {crop, flip, jitter, gray, cut, norm};
  return p;
}

namespace {

Tensor apply_crop(const Tensor& img, std::size_t pad, RngStream& rng) {
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  const std::size_t oy = static_cast<std::size_t>(rng.uniform_int(0, 2 * static_cast<std::int64_t>(pad)));
  const std::size_t ox = static_cast<std::size_t>(rng.uniform_int(0, 2 * static_cast<std::int64_t>(pad)));
  Tensor out(img.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + oy) -
                                  static_cast<std::ptrdiff_t>(pad);
        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + ox) -
                                  static_cast<std::ptrdiff_t>(pad);
        double v = 0.0;
        if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(H) && sx >= 0 &&
            sx < static_cast<std::ptrdiff_t>(W))
          v = img[(c * H + sy) * W + sx];
        out.at((c * H + y) * W + x) = v;
      }
  return out;
}

Tensor apply_flip(const Tensor& img) {
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  Tensor out(img.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        out.at((c * H + y) * W + x) = img[(c * H + y) * W + (W - 1 - x)];
  return out;
}

Tensor apply_cutout(const Tensor& img, std::size_t size, RngStream& rng) {
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  if (size > H || size > W)
    throw ValidationError("augment: cutout size " + std::to_string(size) +
                          " exceeds image side");
  const std::size_t cy = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(H - size)));
  const std::size_t cx = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(W - size)));
  Tensor out = img.clone();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = cy; y < cy + size; ++y)
      for (std::size_t x = cx; x < cx + size; ++x)
        out.at((c * H + y) * W + x) = 0.0;
  return out;
}

Tensor apply_color_jitter(const Tensor& img, double strength, RngStream& rng) {
  const std::size_t C = img.dim(0), S = img.dim(1) * img.dim(2);
  const double brightness = 1.0 + rng.uniform(-strength, strength);
  const double contrast = 1.0 + rng.uniform(-strength, strength);
  const double saturation = 1.0 + rng.uniform(-strength, strength);
  Tensor out(img.shape());
  std::vector<double> pix_mean(S, 0.0);
  double global_mean = 0.0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < S; ++s) {
      pix_mean[s] += img[c * S + s] / static_cast<double>(C);
      global_mean += img[c * S + s];
    }
  global_mean /= static_cast<double>(C * S);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < S; ++s) {
      double v = img[c * S + s] * brightness;
      v = global_mean + (v - global_mean) * contrast;
      v = pix_mean[s] + (v - pix_mean[s]) * saturation;
      out.at(c * S + s) = v;
    }
  return out;
}

Tensor apply_grayscale(const Tensor& img) {
  const std::size_t C = img.dim(0), S = img.dim(1) * img.dim(2);
  Tensor out(img.shape());
  for (std::size_t s = 0; s < S; ++s) {
    double m = 0.0;
    for (std::size_t c = 0; c < C; ++c) m += img[c * S + s];
    m /= static_cast<double>(C);
    for (std::size_t c = 0; c < C; ++c) out.at(c * S + s) = m;
  }
  return out;
}

Tensor apply_normalize(const Tensor& img, const std::vector<double>& mean,
                       const std::vector<double>& stddev) {
  const std::size_t C = img.dim(0), S = img.dim(1) * img.dim(2);
  if (mean.size() != C || stddev.size() != C)
    throw ValidationError("augment: normalize channel mismatch");
  Tensor out(img.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const double sd = stddev[c] > 0.0 ? stddev[c] : 1.0;
    for (std::size_t s = 0; s < S; ++s)
      out.at(c * S + s) = (img[c * S + s] - mean[c]) / sd;
  }
  return out;
}

}  // namespace

Tensor augment(const Tensor& image, const AugmentPolicy& policy,
               RngStream& rng) {
  if (image.rank() != 3)
    throw ShapeError("augment: expected [C,H,W] image, got " +
                     shape_str(image.shape()));
  policy.validate();
  Tensor img = image;
  for (const auto& op : policy.ops) {
    switch (op.kind) {
      case AugmentOp::Kind::RandomCrop:
        img = apply_crop(img, op.pad, rng);
        break;
      case AugmentOp::Kind::HorizontalFlip:
        if (rng.bernoulli(op.p)) img = apply_flip(img);
        break;
      case AugmentOp::Kind::Cutout:
        img = apply_cutout(img, op.size, rng);
        break;
      case AugmentOp::Kind::ColorJitter:
        img = apply_color_jitter(img, op.strength, rng);
        break;
      case AugmentOp::Kind::RandomGrayscale:
        if (rng.bernoulli(op.p)) img = apply_grayscale(img);
        break;
      case AugmentOp::Kind::Normalize:
        img = apply_normalize(img, op.mean, op.stddev);
        break;
    }
  }
  return img;
}

std::pair<Tensor, Tensor> make_views(const Tensor& image,
                                     const AugmentPolicy& policy,
                                     RngStream& rng) {
  Tensor v1 = augment(image, policy, rng);
  Tensor v2 = augment(image, policy, rng);
  return {std::move(v1), std::move(v2)};
}

Tensor replicate_static(const Tensor& image, std::size_t T) {
  if (T < 1) throw ValidationError("replicate_static: T must be >= 1");
  Shape s{T};
  s.insert(s.end(), image.shape().begin(), image.shape().end());
  Tensor out(s);
  for (std::size_t t = 0; t < T; ++t)
    std::copy(image.data().begin(), image.data().end(),
              out.data().begin() + t * image.size());
  return out;
}

Tensor bin_event_frames(const Tensor& frames, std::size_t T) {
  if (frames.rank() != 4)
    throw ShapeError("bin_event_frames: expected [T_ev,2,H,W]");
  const std::size_t T_ev = frames.dim(0);
  const std::size_t n = frames.size() / T_ev;
  if (T < 1 || T > T_ev)
    throw ValidationError("bin_event_frames: cannot bin " +
                          std::to_string(T_ev) + " frames into " +
                          std::to_string(T));
  if (T == T_ev) return frames.clone();
  Shape s = frames.shape();
  s[0] = T;
  Tensor out(s);
  for (std::size_t b = 0; b < T; ++b) {
    const std::size_t lo = b * T_ev / T, hi = (b + 1) * T_ev / T;
    for (std::size_t t = lo; t < hi; ++t)
      for (std::size_t i = 0; i < n; ++i)
        if (frames[t * n + i] != 0.0) out.at(b * n + i) = 1.0;
  }
  return out;
}

Tensor event_area_downscale(const Tensor& frames, std::size_t out_side) {
  if (frames.rank() != 4)
    throw ShapeError("event_area_downscale: expected [T,2,H,W]");
  const std::size_t T = frames.dim(0), C = frames.dim(1), H = frames.dim(2),
                    W = frames.dim(3);
  if (out_side == 0 || H % out_side != 0 || W % out_side != 0)
    throw ValidationError("event_area_downscale: side must divide input");
  const std::size_t fy = H / out_side, fx = W / out_side;
  Tensor out(Shape{T, C, out_side, out_side});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t oy = 0; oy < out_side; ++oy)
        for (std::size_t ox = 0; ox < out_side; ++ox) {
          double acc = 0.0;
          for (std::size_t y = oy * fy; y < (oy + 1) * fy; ++y)
            for (std::size_t x = ox * fx; x < (ox + 1) * fx; ++x)
              acc += frames[((t * C + c) * H + y) * W + x];
          acc /= static_cast<double>(fy * fx);
          out.at(((t * C + c) * out_side + oy) * out_side + ox) =
              acc >= 0.5 ? 1.0 : 0.0;
        }
  return out;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  ds.validate();
  fs::create_directories(dir);
  std::ofstream meta(fs::path(dir) / "meta.txt");
  if (!meta) throw ValidationError("cannot write meta: " + dir);
  meta << "format_version 1\n";
  meta << "kind " << (ds.kind == DatasetKind::Static ? "static" : "event")
       << "\n";
  meta << "class_count " << ds.class_count << "\n";
  meta << "seed " << ds.seed << "\n";
  if (!ds.mean.empty()) meta << "mean " << join_doubles(ds.mean) << "\n";
  if (!ds.stddev.empty()) meta << "std " << join_doubles(ds.stddev) << "\n";
  save_tensor((fs::path(dir) / "images.tensor").string(), ds.images);
  Tensor labels(Shape{ds.labels.size()});
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    labels.at(i) = static_cast<double>(ds.labels[i]);
  save_tensor((fs::path(dir) / "labels.tensor").string(), labels);
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream meta(fs::path(dir) / "meta.txt");
  if (!meta) throw ValidationError("cannot open dataset meta: " + dir);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    auto sp = line.find(' ');
    kv[line.substr(0, sp)] = sp == std::string::npos ? "" : line.substr(sp + 1);
  }
  if (kv["format_version"] != "1")
    throw ValidationError(dir + ": unsupported dataset format_version '" +
                          kv["format_version"] + "'");
  Dataset ds;
  if (kv["kind"] == "static")
    ds.kind = DatasetKind::Static;
  else if (kv["kind"] == "event")
    ds.kind = DatasetKind::Event;
  else
    throw ValidationError(dir + ": bad dataset kind '" + kv["kind"] + "'");
  ds.class_count = std::stoul(kv["class_count"]);
  if (kv.count("seed")) ds.seed = std::stoull(kv["seed"]);
  if (kv.count("mean")) ds.mean = split_doubles(kv["mean"]);
  if (kv.count("std")) ds.stddev = split_doubles(kv["std"]);
  ds.images = load_tensor((fs::path(dir) / "images.tensor").string());
  Tensor labels = load_tensor((fs::path(dir) / "labels.tensor").string());
  ds.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    ds.labels[i] = static_cast<int>(labels[i]);
  ds.validate();
  return ds;
}

}  // namespace snntcl
