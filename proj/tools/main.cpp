// Command-line front end: run experiments, sweep memory sizes, export SOM
// artifacts, and inspect IDX data files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "somlp/harness.hpp"

namespace fs = std::filesystem;
using namespace somlp;

namespace {

struct CliFlags {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  std::optional<int> memory_slots;
  std::optional<float> memory_strength;
  std::optional<int> eval_subset;
  std::optional<std::string> data_dir;
  std::string out_dir = ".";
  bool quiet = false;
};

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value config file");
  cmd->add_option("--method", flags.method, "mlp|ewc|gem|somlp_s|somlp_m");
  cmd->add_option("--dataset", flags.dataset, "permutations|rotations");
  cmd->add_option("--seed", flags.seed, "master seed (default 1)");
  cmd->add_option("--seeds", flags.seeds, "number of seeds to aggregate");
  cmd->add_option("--memory-slots", flags.memory_slots, "sample memory slots (ewc/gem)");
  cmd->add_option("--memory-strength", flags.memory_strength,
                  "EWC penalty weight / GEM margin");
  cmd->add_option("--eval-subset", flags.eval_subset,
                  "test samples per task during evaluation (0 = full split)");
  cmd->add_option("--data-dir", flags.data_dir,
                  "directory with MNIST IDX files (falls back to $SOMLP_DATA_DIR)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_flag("--quiet", flags.quiet, "suppress progress logging");
}

// Precedence: explicit flags > config file keys > per-(method,dataset) defaults.
RunConfig resolve_config(const CliFlags& flags) {
  std::vector<ConfigEntry> entries;
  if (!flags.config_path.empty()) entries = parse_config_file(flags.config_path);

  Method method = Method::Mlp;
  DatasetKind dataset = DatasetKind::Permutations;
  for (const auto& e : entries) {
    if (e.key == "method") method = method_from_string(e.value);
    if (e.key == "dataset") dataset = dataset_from_string(e.value);
  }
  if (flags.method) method = method_from_string(*flags.method);
  if (flags.dataset) dataset = dataset_from_string(*flags.dataset);

  RunConfig cfg = default_config(method, dataset);
  apply_config_entries(cfg, entries, flags.config_path);
  cfg.method = method;
  cfg.dataset = dataset;
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.seeds) cfg.seeds_count = *flags.seeds;
  if (flags.memory_slots) cfg.memory_slots = *flags.memory_slots;
  if (flags.memory_strength) cfg.memory_strength = *flags.memory_strength;
  if (flags.eval_subset) cfg.eval_subset = *flags.eval_subset;
  if (flags.data_dir) cfg.data_dir = *flags.data_dir;
  if (cfg.data_dir.empty())
    if (const char* env = std::getenv("SOMLP_DATA_DIR")) cfg.data_dir = env;
  cfg.out_dir = flags.out_dir;
  cfg.quiet = flags.quiet;
  validate(cfg);
  return cfg;
}

MnistData load_data_or_die(const RunConfig& cfg) {
  if (cfg.data_dir.empty())
    throw std::runtime_error("no data directory given (--data-dir or $SOMLP_DATA_DIR)");
  return load_mnist(cfg.data_dir);
}

void export_som_artifacts(const RunResult& result, const fs::path& out) {
  if (result.task_mean_masks.empty()) return;
  for (std::size_t t = 0; t < result.task_mean_masks.size(); ++t) {
    char name[64];
    std::snprintf(name, sizeof(name), "mask_task_%02zu.pgm", t);
    write_pgm(normalize_grid(result.task_mean_masks[t]), result.grid_cols, result.grid_rows,
              (out / name).string());
  }
  write_pgm(normalize_grid(result.final_u_matrix), result.grid_cols, result.grid_rows,
            (out / "u_matrix.pgm").string());
}

int cmd_run(const CliFlags& flags) {
  const RunConfig cfg = resolve_config(flags);
  const MnistData data = load_data_or_die(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const RunResult result = run_experiment(cfg, data);
  const std::string csv_name =
      "metrics_" + to_string(cfg.method) + "_" + to_string(cfg.dataset) + ".csv";
  write_metrics_csv(result.metrics, (out / csv_name).string());
  export_som_artifacts(result, out);
  std::printf("%s %s: final average %.4f +- %.4f over %zu seed(s)%s\n",
              to_string(cfg.method).c_str(), to_string(cfg.dataset).c_str(),
              result.final_average_mean, result.final_average_std,
              result.final_average_per_seed.size(),
              result.single_seed_flagged ? " [single seed, std not meaningful]" : "");
  return 0;
}

int cmd_sweep(const CliFlags& flags, const std::vector<int>& slots) {
  const RunConfig cfg = resolve_config(flags);
  const MnistData data = load_data_or_die(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const auto points = memory_sweep(cfg, slots, data);
  const std::string name =
      "sweep_" + to_string(cfg.method) + "_" + to_string(cfg.dataset) + ".csv";
  std::ofstream csv(out / name, std::ios::binary);
  csv << "memory_slots,final_average\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", p.memory_slots, p.final_average);
    csv << buf;
    std::printf("slots %5d -> %.4f\n", p.memory_slots, p.final_average);
  }
  return csv ? 0 : 1;
}

int cmd_export_masks(const CliFlags& flags) {
  const RunConfig cfg = resolve_config(flags);
  if (cfg.method != Method::SomlpS && cfg.method != Method::SomlpM)
    throw std::runtime_error("export-masks requires a somlp method");
  const MnistData data = load_data_or_die(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const RunResult result = run_experiment(cfg, data);
  export_som_artifacts(result, out);
  std::printf("wrote %zu task masks and u_matrix.pgm to %s\n", result.task_mean_masks.size(),
              out.string().c_str());
  return 0;
}

int cmd_inspect(const CliFlags& flags) {
  std::string dir = flags.data_dir.value_or("");
  if (dir.empty())
    if (const char* env = std::getenv("SOMLP_DATA_DIR")) dir = env;
  if (dir.empty()) throw std::runtime_error("inspect-data needs --data-dir or $SOMLP_DATA_DIR");
  const MnistData data = load_mnist(dir);
  auto report = [](const char* name, const LabeledSet& set) {
    std::printf("%s: %u images of 28x28\n", name, set.images.count);
    int histogram[10] = {};
    for (auto l : set.labels) ++histogram[l];
    std::printf("  labels:");
    for (int k = 0; k < 10; ++k) std::printf(" %d:%d", k, histogram[k]);
    std::printf("\n");
  };
  report("train", data.train);
  report("test", data.test);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Continual-learning benchmark runner: SOM-gated MLP against naive MLP, "
      "EWC, and GEM baselines on transformed-MNIST task sequences.\n"
      "Hyperparameters default per (method, dataset); e.g. somlp_m on "
      "permutations uses alpha=1 sigma=2 epsilon=0.5 tau=15 batch 10 lr 0.01."};
  app.require_subcommand(1);

  CliFlags flags;
  std::vector<int> slots{256, 512, 1280, 2560, 5120};

  auto* run = app.add_subcommand("run", "run one experiment and write metrics CSV");
  add_common_flags(run, flags);
  auto* sweep = app.add_subcommand("sweep-memory", "run a memory-size sweep (ewc/gem)");
  add_common_flags(sweep, flags);
  sweep->add_option("--slots", slots, "memory slot counts to sweep");
  auto* masks = app.add_subcommand("export-masks", "train somlp and export mask/U-matrix PGMs");
  add_common_flags(masks, flags);
  auto* inspect = app.add_subcommand("inspect-data", "summarize the MNIST IDX files");
  inspect->add_option("--data-dir", flags.data_dir, "directory with MNIST IDX files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags, slots);
    if (masks->parsed()) return cmd_export_masks(flags);
    if (inspect->parsed()) return cmd_inspect(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
