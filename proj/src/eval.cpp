#include "snntcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "snntcl/losses.hpp"

namespace snntcl {

Tensor inference_input(const Dataset& ds, std::size_t index, std::size_t T) {
  Tensor sample = ds.sample(index);
  if (ds.kind == DatasetKind::Event) return bin_event_frames(sample, T);
  const std::size_t C = sample.dim(0), S = sample.dim(1) * sample.dim(2);
  Tensor norm = sample.clone();
  if (!ds.mean.empty()) {
    for (std::size_t c = 0; c < C; ++c) {
      const double sd = ds.stddev[c] > 0.0 ? ds.stddev[c] : 1.0;
      for (std::size_t s = 0; s < S; ++s)
        norm.at(c * S + s) = (norm[c * S + s] - ds.mean[c]) / sd;
    }
  }
  return replicate_static(norm, T);
}

namespace {

// Prepares inputs at T_base steps, then presents only the first T of them.
Tensor stack_batch(const Dataset& ds, std::size_t start, std::size_t bsz,
                   std::size_t T, std::size_t T_base) {
  Tensor first = inference_input(ds, start, T_base);
  const std::size_t n = first.size() / T_base;
  Shape s{T, bsz};
  s.insert(s.end(), first.shape().begin() + 1, first.shape().end());
  Tensor out(s);
  for (std::size_t b = 0; b < bsz; ++b) {
    Tensor in = b == 0 ? first : inference_input(ds, start + b, T_base);
    for (std::size_t t = 0; t < T; ++t)
      std::copy(in.data().begin() + t * n, in.data().begin() + (t + 1) * n,
                out.data().begin() + (t * bsz + b) * n);
  }
  return out;
}

struct EvalStats {
  double accuracy = 0.0;
  double mean_ce = 0.0;
  std::vector<double> block_ones;   // spike counts per block
  std::vector<double> block_total;  // element counts per block
};

EvalStats run_eval(Model& model, const Dataset& ds, std::size_t T,
                   std::size_t batch_size, bool record_spikes,
                   std::size_t T_base = 0) {
  if (T_base == 0) T_base = T;
  const std::size_t N = ds.size();
  EvalStats stats;
  std::size_t correct = 0;
  double ce_total = 0.0;
  for (std::size_t start = 0; start < N; start += batch_size) {
    const std::size_t bsz = std::min(batch_size, N - start);
    Tensor batch = stack_batch(ds, start, bsz, T, T_base);
    TemporalOutputs out = model.forward(batch, false, false, record_spikes);
    const std::size_t C = out.logits.dim(2);
    for (std::size_t b = 0; b < bsz; ++b) {
      std::vector<double> mean_logits(C, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
          mean_logits[c] += out.logits[(t * bsz + b) * C + c] /
                            static_cast<double>(T);
      const std::size_t arg = static_cast<std::size_t>(
          std::max_element(mean_logits.begin(), mean_logits.end()) -
          mean_logits.begin());
      if (arg == static_cast<std::size_t>(ds.labels[start + b])) ++correct;
      Tensor row(Shape{1, C}, mean_logits);
      ce_total += softmax_cross_entropy(row, {ds.labels[start + b]}).value();
    }
    if (record_spikes) {
      if (stats.block_ones.empty()) {
        stats.block_ones.assign(out.spikes.size(), 0.0);
        stats.block_total.assign(out.spikes.size(), 0.0);
      }
      for (std::size_t blk = 0; blk < out.spikes.size(); ++blk) {
        for (std::size_t i = 0; i < out.spikes[blk].size(); ++i) {
          const double v = out.spikes[blk][i];
          if (v == 1.0)
            stats.block_ones[blk] += 1.0;
          else if (v != 0.0)
            throw ValidationError("profile_firing: non-binary spike value");
        }
        stats.block_total[blk] += static_cast<double>(out.spikes[blk].size());
      }
    }
  }
  stats.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(N);
  stats.mean_ce = ce_total / static_cast<double>(N);
  return stats;
}

}  // namespace

double evaluate_accuracy(Model& model, const Dataset& ds, std::size_t T,
                         std::size_t batch_size) {
  return run_eval(model, ds, T, batch_size, false).accuracy;
}

SweepReport sweep_inference(Model& model, const Dataset& ds,
                            std::size_t train_T, std::size_t batch_size) {
  if (train_T < 1)
    throw ValidationError("sweep_inference: train_T must be >= 1");
  SweepReport report;
  report.train_T = train_T;
  for (std::size_t t = 1; t <= train_T; ++t) {
    EvalStats stats = run_eval(model, ds, t, batch_size, false, train_T);
    report.rows.push_back({t, stats.accuracy, stats.mean_ce});
  }
  return report;
}

FiringReport profile_firing(Model& model, const Dataset& ds, std::size_t T,
                            std::size_t batch_size) {
  EvalStats stats = run_eval(model, ds, T, batch_size, true);
  FiringReport report;
  report.accuracy = stats.accuracy;
  for (std::size_t b = 0; b < stats.block_ones.size(); ++b)
    report.block_rates.push_back(stats.block_total[b] > 0
                                     ? 100.0 * stats.block_ones[b] /
                                           stats.block_total[b]
                                     : 0.0);
  return report;
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write sweep report: " + path);
  os << "inference_T,accuracy,mean_ce,train_T\n";
  os.precision(10);
  for (const auto& row : report.rows)
    os << row.inference_T << ',' << row.accuracy << ',' << row.mean_ce << ','
       << report.train_T << '\n';
}

void write_firing_csv(const std::string& path, const FiringReport& report) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write firing report: " + path);
  for (std::size_t b = 0; b < report.block_rates.size(); ++b)
    os << "block" << b + 1 << ',';
  os << "accuracy\n";
  os.precision(10);
  for (double r : report.block_rates) os << r << ',';
  os << report.accuracy << '\n';
}

void plot_sweeps(const std::vector<std::string>& csv_paths,
                 const std::string& out_path) {
  struct Curve {
    std::string name;
    std::vector<std::pair<double, double>> pts;  // (T', accuracy)
  };
  std::vector<Curve> curves;
  double max_t = 1.0;
  for (const auto& path : csv_paths) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open sweep csv: " + path);
    Curve c;
    auto slash = path.find_last_of('/');
    c.name = slash == std::string::npos ? path : path.substr(slash + 1);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      std::stringstream ss(line);
      std::string tok;
      std::vector<double> vals;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      if (vals.size() >= 2) {
        c.pts.emplace_back(vals[0], vals[1]);
        max_t = std::max(max_t, vals[0]);
      }
    }
    if (c.pts.empty())
      throw ValidationError("sweep csv has no rows: " + path);
    curves.push_back(std::move(c));
  }
  const double W = 640, H = 420, ml = 60, mr = 20, mt = 30, mb = 50;
  auto sx = [&](double t) {
    return ml + (t - 1.0) / std::max(1.0, max_t - 1.0) * (W - ml - mr);
  };
  auto sy = [&](double acc) { return H - mb - acc / 100.0 * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream os(out_path);
  if (!os) throw ValidationError("cannot write plot: " + out_path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
     << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr
     << "' y2='" << H - mb << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
     << H - mb << "' stroke='black'/>\n";
  for (int a = 0; a <= 100; a += 20)
    os << "<text x='" << ml - 8 << "' y='" << sy(a) + 4
       << "' font-size='11' text-anchor='end'>" << a << "</text>\n";
  for (double t = 1; t <= max_t; t += 1.0)
    os << "<text x='" << sx(t) << "' y='" << H - mb + 18
       << "' font-size='11' text-anchor='middle'>" << t << "</text>\n";
  os << "<text x='" << (W / 2) << "' y='" << H - 12
     << "' font-size='12' text-anchor='middle'>inference time steps</text>\n";
  os << "<text x='16' y='" << (H / 2)
     << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
     << (H / 2) << ")'>accuracy (%)</text>\n";
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const char* col = colors[ci % 6];
    os << "<polyline fill='none' stroke='" << col << "' stroke-width='2' points='";
    for (auto [t, acc] : curves[ci].pts) os << sx(t) << ',' << sy(acc) << ' ';
    os << "'/>\n";
    for (auto [t, acc] : curves[ci].pts)
      os << "<circle cx='" << sx(t) << "' cy='" << sy(acc)
         << "' r='3' fill='" << col << "'/>\n";
    os << "<text x='" << W - mr - 4 << "' y='" << mt + 14 * (ci + 1)
       << "' font-size='11' text-anchor='end' fill='" << col << "'>"
       << curves[ci].name << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace snntcl
