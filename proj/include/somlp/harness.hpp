#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "somlp/io.hpp"
#include "somlp/mnist.hpp"
#include "somlp/strategies.hpp"
#include "somlp/tasks.hpp"

namespace somlp {

enum class Method { Mlp, Ewc, Gem, SomlpS, SomlpM };

std::string to_string(Method m);
std::string to_string(DatasetKind d);
Method method_from_string(const std::string& s);
DatasetKind dataset_from_string(const std::string& s);

struct RunConfig {
  Method method = Method::Mlp;
  DatasetKind dataset = DatasetKind::Permutations;
  std::uint64_t master_seed = 1;
  int seeds_count = 3;

  // SOM schedule (SOMLP only)
  float alpha = 1.0f;
  float sigma = 2.0f;
  float epsilon = 0.5f;
  float tau = 15.0f;
  NeighborhoodExponent neighborhood_exponent = NeighborhoodExponent::Linear;

  int batch_size = 10;
  float learning_rate = 0.01f;
  Activation activation = Activation::Relu;

  int memory_slots = 0;       // EWC/GEM only
  float memory_strength = 0;  // EWC lambda / GEM margin

  int hidden_units = 3200;    // n_h1; SOM grid must cover it for SOMLP
  int grid_rows = 40;
  int grid_cols = 40;

  int num_tasks = 20;
  int samples_per_task = 60000;
  int eval_subset = 0;  // 0 = full test split

  std::string data_dir;
  std::string out_dir = ".";
  bool quiet = false;
};

// Hyperparameter defaults per (method, dataset).
RunConfig default_config(Method method, DatasetKind dataset);

// Applies config-file entries on top of defaults; unknown keys are rejected
// with the offending line number.
void apply_config_entries(RunConfig& cfg, const std::vector<ConfigEntry>& entries,
                          const std::string& path);

// Rejects inconsistent combinations (e.g. memory slots for plain MLP).
void validate(const RunConfig& cfg);

struct RunResult {
  std::vector<MetricsRecord> metrics;
  std::vector<double> final_average_per_seed;
  double final_average_mean = 0.0;
  double final_average_std = 0.0;       // sample std; 0 when only one seed
  bool single_seed_flagged = false;

  // SOMLP only, captured from the first seed after training.
  std::vector<std::vector<float>> task_mean_masks;  // num_tasks x num_nodes, raw values
  std::vector<float> final_u_matrix;
  int grid_rows = 0;
  int grid_cols = 0;
};

std::unique_ptr<Strategy> make_strategy(const RunConfig& cfg, std::uint64_t seed);

// One epoch over `task`, dispatching every batch to the strategy. Resuming
// from `start_batch` continues a checkpointed run.
void train_task(Strategy& strategy, const TaskStream& stream, int task, int start_batch = 0);

// Accuracy per observed task on the (transformed) test split. `eval_subset`
// of 0 evaluates the full split, otherwise the first n samples of the
// stream's fixed shuffle.
std::vector<double> evaluate_observed(const Strategy& strategy, const TaskStream& eval_stream,
                                      int observed_tasks, int eval_subset = 0);

// Mean gating mask per task over `representative` test samples, grid-shaped.
std::vector<std::vector<float>> export_task_masks(const SomlpStrategy& strategy,
                                                  const TaskStream& eval_stream,
                                                  int representative = 256);

// Full protocol: for each seed, build streams, pretrain (SOMLP), train the
// task sequence with boundary signals where the method asks for them,
// evaluate after every task, aggregate across seeds.
RunResult run_experiment(const RunConfig& cfg, const MnistData& data);

struct SweepPoint {
  int memory_slots;
  double final_average;
};
std::vector<SweepPoint> memory_sweep(const RunConfig& base, const std::vector<int>& slot_list,
                                     const MnistData& data);

// Min-max normalizes a grid into [0,1] for PGM export.
std::vector<float> normalize_grid(const std::vector<float>& grid);

}  // namespace somlp
