// tripletgan: train, evaluate and self-check triplet-loss GANs.
//
//   tripletgan train --preset ring-triplet --steps 10 --seed 1 --out runs
//   tripletgan eval --checkpoint runs/seed_1/final.ckpt
//   tripletgan check --check toy --sigma1 0 --sigma2 1

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "tgan/checks.hpp"
#include "tgan/run.hpp"

namespace fs = std::filesystem;
using namespace tgan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct ConfigArgs {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> metric;
  std::optional<std::string> out;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--preset", a.preset, "Named configuration")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--config", a.config, "Config file applied on top of the preset")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Random seed (overrides the config)");
  cmd->add_option("--steps", a.steps, "Training iterations (overrides the config)");
  cmd->add_option("--metric", a.metric, "Sphere metric")->check(CLI::IsMember({"arc", "chord"}));
}

// Preset, then config file, then individual flags.
std::optional<TrainConfig> resolve_config(const ConfigArgs& a) {
  if (a.preset.empty() && a.config.empty()) return std::nullopt;
  try {
    std::optional<TrainConfig> base;
    if (!a.preset.empty()) base = preset(a.preset);
    TrainConfig c = a.config.empty() ? *base : parse_config(a.config, base);
    if (a.seed) c.seed = *a.seed;
    if (a.steps) c.steps = *a.steps;
    if (a.metric) c.metric = *a.metric == "arc" ? Metric::arc : Metric::chord;
    if (a.out) c.out_dir = *a.out;
    c.validate();
    return c;
  } catch (const ContractError& e) {
    throw ConfigError(e.what(), 0);
  }
}

// ---- train -------------------------------------------------------------------

int cmd_train(const ConfigArgs& args, int runs, int jobs, bool wall_clock) {
  std::optional<TrainConfig> base = resolve_config(args);
  if (!base) throw CLI::RequiredError("--preset or --config");
  if (wall_clock) base->wall_clock = true;

  std::vector<TrainConfig> configs;
  for (int r = 0; r < runs; ++r) {
    TrainConfig c = *base;
    c.seed = base->seed + static_cast<std::uint64_t>(r);
    configs.push_back(c);
  }

  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      const TrainConfig& c = configs[k];
      const fs::path dir = fs::path(c.out_dir) / ("seed_" + std::to_string(c.seed));
      try {
        const RunOutcome out = run_training(c, dir, jobs == 1 ? &std::cout : nullptr);
        std::lock_guard lock(io);
        if (out.diverged) {
          ++failures;
          std::cerr << dir.string() << ": " << out.message << '\n';
        } else {
          std::cout << dir.string() << ": " << out.records.size() << " steps, final critic "
                    << out.records.back().critic_loss << ", generator " << out.records.back().generator_loss << '\n';
        }
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(io);
        std::cerr << dir.string() << ": " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, runs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures ? kExitFailed : kExitOk;
}

// ---- eval --------------------------------------------------------------------

int cmd_eval(const ConfigArgs& args, const std::string& checkpoint, long n, const std::string& out_dir) {
  const fs::path ckpt(checkpoint);
  std::optional<TrainConfig> config = resolve_config(args);
  if (!config) {
    const fs::path manifest = ckpt.parent_path() / "manifest.txt";
    if (!fs::exists(manifest)) throw CLI::RequiredError("--preset or --config (no manifest.txt next to the checkpoint)");
    config = read_manifest(manifest).config;
  }
  const TrainState<double> state = load_checkpoint(ckpt, *config);
  const fs::path dir = out_dir.empty() ? ckpt.parent_path() : fs::path(out_dir);
  fs::create_directories(dir);

  if (config->data == DataKind::ring) {
    const ModeReport r = evaluate_ring(state, *config, n);
    write_mode_report_csv(dir / "mode_report.csv", r);
    Rng rng(eval_seed(*config));
    write_pgm(dir / "heatmap_eval.pgm", heatmap(sample_generator(state.gen_spec, state.gen, n, rng)).image);
    std::cout << "covered_modes " << r.covered_modes << " of " << r.per_mode_counts.size() << ", hq_fraction "
              << r.hq_fraction << "\ncounts:";
    for (long c : r.per_mode_counts) std::cout << ' ' << c;
    std::cout << '\n';
  } else {
    const fs::path mnist = resolve_mnist_dir(*config);
    std::cout << "training digit classifier on " << mnist.string() << '\n';
    const DigitClassifier clf = train_digit_classifier(load_mnist_split(mnist, "train"),
                                                       load_mnist_split(mnist, "t10k"));
    std::cout << "held-out accuracy " << clf.heldout_accuracy << '\n';
    const ClassReport r = evaluate_mnist(state, *config, clf, n);
    write_class_report_csv(dir / "class_report.csv", r);
    Rng rng(eval_seed(*config));
    write_pgm(dir / "samples_eval.pgm", image_grid(sample_generator(state.gen_spec, state.gen, 64, rng), 8));
    std::cout << "entropy " << r.entropy << ", l2_to_uniform " << r.l2_to_uniform << "\ncounts:";
    for (long c : r.class_counts) std::cout << ' ' << c;
    std::cout << '\n';
  }
  return kExitOk;
}

// ---- check -------------------------------------------------------------------

struct CheckArgs {
  std::string which = "all";
  double sigma1 = 0.0;
  double sigma2 = 1.0;
  long samples = 1'000'000;
  int atoms = 4;
  int grid = 8;
};

int cmd_check(const CheckArgs& a) {
  std::vector<CheckResult> results;
  auto append = [&results](std::vector<CheckResult> v) { results.insert(results.end(), v.begin(), v.end()); };
  if (a.which == "all") {
    append(run_theory_checks());
  } else if (a.which == "grad") {
    append(check_gradients());
  } else if (a.which == "structural") {
    append(check_structural());
  } else if (a.which == "toy") {
    results.push_back(check_toy(a.sigma1, a.sigma2, a.samples));
  } else if (a.which == "mmd") {
    results.push_back(check_mmd_identity());
  } else if (a.which == "ipm") {
    results.push_back(check_ipm_pair(a.atoms, a.grid));
  } else if (a.which == "ipm-family") {
    results.push_back(check_ipm_family(a.grid));
  } else if (a.which == "antipodal") {
    results.push_back(check_antipodal());
  }
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triplet-loss GAN: train, evaluate, self-check"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  int runs = 1, jobs = 1;
  bool wall_clock = false;
  auto* train = app.add_subcommand("train", "Train a model; writes metrics.csv, heatmaps, final.ckpt, manifest.txt");
  add_config_flags(train, train_args);
  train->add_option("--out", train_args.out, "Output root; each run writes <out>/seed_<seed>/");
  train->add_option("--runs", runs, "Number of consecutive seeds to train")->check(CLI::PositiveNumber);
  train->add_option("--jobs", jobs, "Runs trained in parallel")->check(CLI::PositiveNumber);
  train->add_flag("--wall-clock", wall_clock, "Record wall_ms (makes metrics.csv non-reproducible)");

  ConfigArgs eval_args;
  std::string checkpoint, eval_out;
  long n_samples = 10000;
  auto* eval = app.add_subcommand("eval", "Sample a checkpoint and write mode_report.csv or class_report.csv");
  add_config_flags(eval, eval_args);
  eval->add_option("--checkpoint", checkpoint, "final.ckpt from a training run")->required()->check(CLI::ExistingFile);
  eval->add_option("--n", n_samples, "Generator samples")->check(CLI::PositiveNumber);
  eval->add_option("--out", eval_out, "Report directory (default: the checkpoint's directory)");

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "Run the gradient, identity and finite-witness checks");
  check->add_option("--check", check_args.which, "Which check")
      ->check(CLI::IsMember({"all", "grad", "structural", "toy", "mmd", "ipm", "ipm-family", "antipodal"}));
  check->add_option("--sigma1", check_args.sigma1, "Toy: real standard deviation")->check(CLI::NonNegativeNumber);
  check->add_option("--sigma2", check_args.sigma2, "Toy: fake standard deviation")->check(CLI::NonNegativeNumber);
  check->add_option("--samples", check_args.samples, "Toy: Monte Carlo draws")->check(CLI::Range(10000L, 1L << 40));
  check->add_option("--atoms", check_args.atoms, "IPM: atoms per distribution")->check(CLI::Range(1, kMaxIpmAtoms));
  check->add_option("--grid", check_args.grid, "IPM: circle points")->check(CLI::Range(1, kMaxIpmGrid));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_args, runs, jobs, wall_clock);
    if (*eval) return cmd_eval(eval_args, checkpoint, n_samples, eval_out);
    return cmd_check(check_args);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
}
