#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "snntcl/config.hpp"
#include "snntcl/data.hpp"
#include "snntcl/eval.hpp"
#include "snntcl/losses.hpp"
#include "snntcl/serialize.hpp"
#include "snntcl/train.hpp"
#include "snntcl/verify.hpp"

namespace fs = std::filesystem;
using namespace snntcl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

bool verbose_env() {
  const char* v = std::getenv("SNNTCL_VERBOSE");
  return v != nullptr && std::string(v) != "0";
}

void prepare_out_dir(const std::string& dir, bool force) {
  fs::path p(dir);
  if (fs::exists(p)) {
    if (!fs::is_directory(p))
      throw ValidationError("output path exists and is not a directory: " + dir);
    if (!fs::is_empty(p) && !force)
      throw ValidationError("output directory not empty (use --force): " + dir);
  } else {
    fs::create_directories(p);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SyntheticSpec parse_spec(const std::string& path, std::size_t& eval_per_class) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("spec parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "classes",  "samples_per_class", "image_side",     "temporal",
      "event_steps", "channels",       "noise",          "seed",
      "eval_per_class"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ValidationError("spec: unknown key '" + it.key() + "'");
  }
  SyntheticSpec spec;
  if (j.contains("classes")) spec.classes = j["classes"].get<std::size_t>();
  if (j.contains("samples_per_class"))
    spec.samples_per_class = j["samples_per_class"].get<std::size_t>();
  if (j.contains("image_side"))
    spec.image_side = j["image_side"].get<std::size_t>();
  if (j.contains("temporal")) spec.temporal = j["temporal"].get<bool>();
  if (j.contains("event_steps"))
    spec.event_steps = j["event_steps"].get<std::size_t>();
  if (j.contains("channels")) spec.channels = j["channels"].get<std::size_t>();
  if (j.contains("noise")) spec.noise = j["noise"].get<double>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("eval_per_class"))
    eval_per_class = j["eval_per_class"].get<std::size_t>();
  return spec;
}

Model load_model(const std::string& ckpt_path, RunConfig& cfg) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  return model_from_checkpoint(ck, &cfg);
}

int report_checks(const std::vector<verify::CheckResult>& results) {
  std::size_t passed = 0;
  for (const auto& r : results) {
    std::printf("%-28s %s  (max err %.3e)\n", r.name.c_str(),
                r.pass ? "ok" : "FAIL", r.max_err);
    if (r.pass) ++passed;
  }
  std::printf("%zu/%zu checks passed\n", passed, results.size());
  return verify::all_pass(results) ? kExitOk : kExitNumeric;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Spiking network training and verification tool"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config");
  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  bool seed_given = false, force = false, wall_clock = false;
  train_cmd->add_option("--config", train_config, "Run config file")
      ->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--seed", train_seed, "Override the config seed")
      ->each([&](const std::string&) { seed_given = true; });
  train_cmd->add_flag("--force", force, "Allow writing into a non-empty dir");
  train_cmd->add_flag("--wall-clock", wall_clock,
                      "Record real wall time in metrics (breaks byte-level "
                      "run reproducibility)");

  // eval / sweep / profile-firing share flags
  std::string ckpt, data_dir, out_file;
  std::size_t t_override = 0;
  auto add_eval_flags = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--ckpt", ckpt, "Checkpoint file")->required();
    cmd->add_option("--data", data_dir, "Dataset directory")->required();
    cmd->add_option("--t", t_override, "Inference time steps");
    if (with_out) cmd->add_option("--out", out_file, "Output CSV path");
  };
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy on a dataset");
  add_eval_flags(eval_cmd, false);
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Accuracy at every inference T' up to --t");
  add_eval_flags(sweep_cmd, true);
  auto* firing_cmd =
      app.add_subcommand("profile-firing", "Per-block firing rates");
  add_eval_flags(firing_cmd, true);

  // gen-data
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string gen_spec, gen_out;
  gen_cmd->add_option("--spec", gen_spec, "Dataset spec file")->required();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_flag("--force", force, "Allow writing into a non-empty dir");

  // verification
  auto* grad_cmd = app.add_subcommand("gradcheck", "Gradient audit");
  auto* oracle_cmd =
      app.add_subcommand("oracle-check", "Engine-vs-reference agreement");
  std::uint64_t check_seed = 20240817;
  std::size_t oracle_banks = 200;
  grad_cmd->add_option("--seed", check_seed, "Audit seed");
  oracle_cmd->add_option("--seed", check_seed, "Audit seed");
  oracle_cmd->add_option("--banks", oracle_banks, "Random bank count");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Render sweep CSVs as an SVG");
  std::vector<std::string> plot_in;
  std::string plot_out;
  plot_cmd->add_option("--in", plot_in, "Sweep CSV files")->required();
  plot_cmd->add_option("--out", plot_out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  }

  if (train_cmd->parsed()) {
    RunConfig cfg = RunConfig::from_file(train_config);
    if (seed_given) cfg.optim.seed = train_seed;
    prepare_out_dir(train_out, force);
    FitOptions opts;
    opts.wall_clock = wall_clock;
    opts.verbose = verbose_env();
    FitResult result = fit(cfg, train_out, opts);
    const auto& last = result.history.empty() ? EpochRecord{}
                                              : result.history.back();
    std::printf("done: %zu epochs, final eval acc %.2f%%, best %.2f%%\n",
                result.history.size(), last.eval_acc, result.best_eval_acc);
    std::printf("checkpoints: %s (final), %s (best)\n",
                result.final_checkpoint.c_str(),
                result.best_checkpoint.c_str());
    return kExitOk;
  }

  if (eval_cmd->parsed() || sweep_cmd->parsed() || firing_cmd->parsed()) {
    RunConfig cfg;
    Model model = load_model(ckpt, cfg);
    Dataset ds = load_dataset(data_dir);
    const std::size_t T = t_override > 0 ? t_override : cfg.T;
    if (eval_cmd->parsed()) {
      const double acc = evaluate_accuracy(model, ds, T);
      std::printf("accuracy %.4f%% (T=%zu, %zu samples)\n", acc, T, ds.size());
    } else if (sweep_cmd->parsed()) {
      SweepReport report = sweep_inference(model, ds, T);
      if (!out_file.empty()) write_sweep_csv(out_file, report);
      for (const auto& row : report.rows)
        std::printf("T'=%zu  accuracy %.4f%%  mean ce %.6f\n", row.inference_T,
                    row.accuracy, row.mean_ce);
    } else {
      FiringReport report = profile_firing(model, ds, T);
      if (!out_file.empty()) write_firing_csv(out_file, report);
      for (std::size_t b = 0; b < report.block_rates.size(); ++b)
        std::printf("block%zu firing %.4f%%\n", b + 1, report.block_rates[b]);
      std::printf("accuracy %.4f%%\n", report.accuracy);
    }
    return kExitOk;
  }

  if (gen_cmd->parsed()) {
    std::size_t eval_per_class = 40;
    SyntheticSpec spec = parse_spec(gen_spec, eval_per_class);
    prepare_out_dir(gen_out, force);
    SyntheticSpec pool_spec = spec;
    pool_spec.samples_per_class += eval_per_class;
    // One pool split per class, so both halves share class patterns and
    // normalization statistics.
    auto [train, eval] = split_train_eval(generate_synthetic(pool_spec),
                                          spec.samples_per_class);
    save_dataset(train, (fs::path(gen_out) / "train").string());
    save_dataset(eval, (fs::path(gen_out) / "eval").string());
    std::printf("wrote %zu train / %zu eval samples (%zu classes) to %s\n",
                train.size(), eval.size(), train.class_count, gen_out.c_str());
    return kExitOk;
  }

  if (grad_cmd->parsed()) return report_checks(verify::gradient_checks(check_seed));
  if (oracle_cmd->parsed())
    return report_checks(verify::oracle_checks(check_seed, oracle_banks));

  if (plot_cmd->parsed()) {
    plot_sweeps(plot_in, plot_out);
    std::printf("wrote %s\n", plot_out.c_str());
    return kExitOk;
  }

  std::cerr << "error[usage]: no subcommand\n";
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ValidationError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  }
}
