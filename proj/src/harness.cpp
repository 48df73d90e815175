#include "somlp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace somlp {

std::string to_string(Method m) {
  switch (m) {
    case Method::Mlp: return "mlp";
    case Method::Ewc: return "ewc";
    case Method::Gem: return "gem";
    case Method::SomlpS: return "somlp_s";
    case Method::SomlpM: return "somlp_m";
  }
  return "?";
}

std::string to_string(DatasetKind d) {
  return d == DatasetKind::Permutations ? "permutations" : "rotations";
}

Method method_from_string(const std::string& s) {
  if (s == "mlp") return Method::Mlp;
  if (s == "ewc") return Method::Ewc;
  if (s == "gem") return Method::Gem;
  if (s == "somlp_s") return Method::SomlpS;
  if (s == "somlp_m") return Method::SomlpM;
  throw std::invalid_argument("unknown method '" + s + "' (mlp|ewc|gem|somlp_s|somlp_m)");
}

DatasetKind dataset_from_string(const std::string& s) {
  if (s == "permutations") return DatasetKind::Permutations;
  if (s == "rotations") return DatasetKind::Rotations;
  throw std::invalid_argument("unknown dataset '" + s + "' (permutations|rotations)");
}

RunConfig default_config(Method method, DatasetKind dataset) {
  RunConfig cfg;
  cfg.method = method;
  cfg.dataset = dataset;
  const bool perm = dataset == DatasetKind::Permutations;
  switch (method) {
    case Method::Mlp:
      cfg.hidden_units = 3200;
      cfg.batch_size = 10;
      cfg.learning_rate = perm ? 0.1f : 0.01f;
      cfg.seeds_count = 3;
      break;
    case Method::Ewc:
      cfg.hidden_units = 3200;
      cfg.batch_size = 10;
      cfg.learning_rate = perm ? 0.1f : 0.01f;
      cfg.memory_slots = 8;
      cfg.memory_strength = 3.0f;
      cfg.seeds_count = 1;
      break;
    case Method::Gem:
      cfg.hidden_units = 3200;
      cfg.batch_size = 10;
      cfg.learning_rate = 0.1f;
      cfg.memory_slots = 5120;
      cfg.memory_strength = 0.5f;
      cfg.seeds_count = 1;
      break;
    case Method::SomlpS:
      cfg.hidden_units = 1600;
      cfg.grid_rows = cfg.grid_cols = 40;
      cfg.alpha = perm ? 0.5f : 3.0f;
      cfg.sigma = 4.0f;
      cfg.epsilon = 0.5f;
      cfg.tau = perm ? 2.0f : 3.0f;
      cfg.batch_size = perm ? 10 : 100;
      cfg.learning_rate = perm ? 0.01f : 0.02f;
      cfg.seeds_count = 3;
      break;
    case Method::SomlpM:
      cfg.hidden_units = 1600;
      cfg.grid_rows = cfg.grid_cols = 40;
      cfg.alpha = perm ? 1.0f : 3.0f;
      cfg.sigma = perm ? 2.0f : 3.0f;
      cfg.epsilon = 0.5f;
      cfg.tau = perm ? 15.0f : 3.0f;
      cfg.batch_size = perm ? 10 : 100;
      cfg.learning_rate = perm ? 0.01f : 0.02f;
      cfg.seeds_count = 3;
      break;
  }
  return cfg;
}

namespace {

bool is_somlp(Method m) { return m == Method::SomlpS || m == Method::SomlpM; }
bool uses_memory(Method m) { return m == Method::Ewc || m == Method::Gem; }

int parse_int(const ConfigEntry& e, const std::string& path) {
  try {
    return std::stoi(e.value);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(e.line) + ": bad integer '" + e.value +
                             "' for key " + e.key);
  }
}

float parse_float(const ConfigEntry& e, const std::string& path) {
  try {
    return std::stof(e.value);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(e.line) + ": bad number '" + e.value +
                             "' for key " + e.key);
  }
}

}  // namespace

void apply_config_entries(RunConfig& cfg, const std::vector<ConfigEntry>& entries,
                          const std::string& path) {
  for (const ConfigEntry& e : entries) {
    if (e.key == "method") cfg.method = method_from_string(e.value);
    else if (e.key == "dataset") cfg.dataset = dataset_from_string(e.value);
    else if (e.key == "master_seed") cfg.master_seed = std::stoull(e.value);
    else if (e.key == "seeds_count") cfg.seeds_count = parse_int(e, path);
    else if (e.key == "alpha") cfg.alpha = parse_float(e, path);
    else if (e.key == "sigma") cfg.sigma = parse_float(e, path);
    else if (e.key == "epsilon") cfg.epsilon = parse_float(e, path);
    else if (e.key == "tau") cfg.tau = parse_float(e, path);
    else if (e.key == "batch_size") cfg.batch_size = parse_int(e, path);
    else if (e.key == "learning_rate") cfg.learning_rate = parse_float(e, path);
    else if (e.key == "memory_slots") cfg.memory_slots = parse_int(e, path);
    else if (e.key == "memory_strength") cfg.memory_strength = parse_float(e, path);
    else if (e.key == "hidden_units") cfg.hidden_units = parse_int(e, path);
    else if (e.key == "grid_rows") cfg.grid_rows = parse_int(e, path);
    else if (e.key == "grid_cols") cfg.grid_cols = parse_int(e, path);
    else if (e.key == "num_tasks") cfg.num_tasks = parse_int(e, path);
    else if (e.key == "samples_per_task") cfg.samples_per_task = parse_int(e, path);
    else if (e.key == "eval_subset") cfg.eval_subset = parse_int(e, path);
    else if (e.key == "data_dir") cfg.data_dir = e.value;
    else if (e.key == "out_dir") cfg.out_dir = e.value;
    else if (e.key == "activation") {
      if (e.value == "relu") cfg.activation = Activation::Relu;
      else if (e.value == "tanh") cfg.activation = Activation::Tanh;
      else if (e.value == "none") cfg.activation = Activation::None;
      else
        throw std::runtime_error(path + ":" + std::to_string(e.line) + ": bad activation '" +
                                 e.value + "' (relu|tanh|none)");
    } else if (e.key == "neighborhood_exponent") {
      if (e.value == "linear") cfg.neighborhood_exponent = NeighborhoodExponent::Linear;
      else if (e.value == "squared") cfg.neighborhood_exponent = NeighborhoodExponent::Squared;
      else
        throw std::runtime_error(path + ":" + std::to_string(e.line) +
                                 ": bad neighborhood_exponent '" + e.value +
                                 "' (linear|squared)");
    } else {
      throw std::runtime_error(path + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                               "'");
    }
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.seeds_count < 1) throw std::invalid_argument("seeds_count must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
  if (cfg.num_tasks < 1) throw std::invalid_argument("num_tasks must be >= 1");
  if (cfg.dataset == DatasetKind::Rotations && cfg.num_tasks < 2)
    throw std::invalid_argument("rotations need at least 2 tasks");
  if (!uses_memory(cfg.method) && cfg.memory_slots != 0)
    throw std::invalid_argument("memory_slots is meaningless for method " +
                                to_string(cfg.method));
  if (uses_memory(cfg.method) && cfg.memory_slots < 1)
    throw std::invalid_argument(to_string(cfg.method) + " needs memory_slots >= 1");
  if (cfg.method == Method::Gem && cfg.memory_slots < cfg.num_tasks)
    throw std::invalid_argument("GEM needs at least one memory slot per task");
  if (is_somlp(cfg.method)) {
    if (cfg.grid_rows * cfg.grid_cols != cfg.hidden_units)
      throw std::invalid_argument("SOM grid " + std::to_string(cfg.grid_rows) + "x" +
                                  std::to_string(cfg.grid_cols) + " does not cover " +
                                  std::to_string(cfg.hidden_units) + " hidden units");
    if (cfg.alpha <= 0 || cfg.sigma <= 0 || cfg.epsilon <= 0 || cfg.tau <= 0)
      throw std::invalid_argument("SOM hyperparameters must be > 0");
  }
}

std::unique_ptr<Strategy> make_strategy(const RunConfig& cfg, std::uint64_t seed) {
  Prng init(seed, RngStream::Init);
  MlpModel model = init_mlp(kImageSize, cfg.hidden_units, kNumClasses, cfg.activation, init);
  const float lr = cfg.learning_rate;
  switch (cfg.method) {
    case Method::Mlp:
      return std::make_unique<NaiveStrategy>(std::move(model), lr);
    case Method::Ewc:
      return std::make_unique<EwcStrategy>(std::move(model), lr, cfg.memory_slots,
                                           cfg.memory_strength);
    case Method::Gem:
      return std::make_unique<GemStrategy>(std::move(model), lr, cfg.memory_slots,
                                           cfg.memory_strength, cfg.num_tasks);
    case Method::SomlpS:
    case Method::SomlpM: {
      SomState som = init_som(cfg.grid_rows, cfg.grid_cols, kImageSize, init);
      SomSchedule schedule;
      schedule.alpha0 = cfg.alpha;
      schedule.sigma0 = cfg.sigma;
      schedule.epsilon = cfg.epsilon;
      schedule.tau = cfg.tau;
      const int batches = (cfg.samples_per_task + cfg.batch_size - 1) / cfg.batch_size;
      schedule.n_steps = static_cast<std::int64_t>(batches) * cfg.num_tasks;
      return std::make_unique<SomlpStrategy>(
          std::move(model), lr, std::move(som), schedule, cfg.neighborhood_exponent,
          cfg.method == Method::SomlpS ? PretrainVariant::Single : PretrainVariant::Multi);
    }
  }
  throw std::logic_error("make_strategy: unreachable");
}

void train_task(Strategy& strategy, const TaskStream& stream, int task, int start_batch) {
  Batch batch;
  for (int b = start_batch; b < stream.batches_per_task(); ++b) {
    stream.fill_batch(task, b, batch);
    strategy.train_batch(batch);
  }
}

std::vector<double> evaluate_observed(const Strategy& strategy, const TaskStream& eval_stream,
                                      int observed_tasks, int eval_subset) {
  const int total = eval_stream.samples_per_task();
  const int n = eval_subset > 0 ? std::min(eval_subset, total) : total;
  std::vector<double> accuracies(observed_tasks, 0.0);
  Batch batch;
  for (int t = 0; t < observed_tasks; ++t) {
    int correct = 0, seen = 0;
    for (int b = 0; seen < n; ++b) {
      eval_stream.fill_batch(t, b, batch);
      for (std::size_t s = 0; s < batch.size() && seen < n; ++s, ++seen) {
        const int pred =
            strategy.predict_sample({batch.features.row(s), batch.features.cols});
        if (pred == batch.labels[s]) ++correct;
      }
    }
    accuracies[t] = static_cast<double>(correct) / n;
  }
  return accuracies;
}

std::vector<std::vector<float>> export_task_masks(const SomlpStrategy& strategy,
                                                  const TaskStream& eval_stream,
                                                  int representative) {
  const int n = std::min(representative, eval_stream.samples_per_task());
  std::vector<std::vector<float>> masks;
  masks.reserve(eval_stream.num_tasks());
  Batch batch;
  std::vector<float> gamma;
  for (int t = 0; t < eval_stream.num_tasks(); ++t) {
    std::vector<double> acc(strategy.som().num_nodes(), 0.0);
    int seen = 0;
    for (int b = 0; seen < n; ++b) {
      eval_stream.fill_batch(t, b, batch);
      for (std::size_t s = 0; s < batch.size() && seen < n; ++s, ++seen) {
        strategy.mask_for({batch.features.row(s), batch.features.cols}, gamma);
        for (std::size_t i = 0; i < gamma.size(); ++i) acc[i] += gamma[i];
      }
    }
    std::vector<float> mean(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / n);
    masks.push_back(std::move(mean));
  }
  return masks;
}

std::vector<float> normalize_grid(const std::vector<float>& grid) {
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  std::vector<float> out(grid.size(), 0.0f);
  const float range = *hi - *lo;
  if (range > 0.0f)
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = (grid[i] - *lo) / range;
  return out;
}

RunResult run_experiment(const RunConfig& cfg, const MnistData& data) {
  validate(cfg);
  RunResult result;
  for (int s = 0; s < cfg.seeds_count; ++s) {
    const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(s);
    TaskStream train = build_task_stream(cfg.dataset, data.train, seed, cfg.batch_size,
                                         cfg.num_tasks, cfg.samples_per_task);
    TaskStream eval = build_eval_stream(train, data.test, 256);
    auto strategy = make_strategy(cfg, seed);
    if (auto* somlp = dynamic_cast<SomlpStrategy*>(strategy.get())) {
      PretrainStream pretrain(train, somlp->variant(), seed);
      if (!cfg.quiet)
        std::cerr << "[" << to_string(cfg.method) << " seed " << seed << "] pretraining on "
                  << pretrain.total_samples() << " samples\n";
      somlp->pretrain(pretrain, cfg.batch_size);
    }
    double final_avg = 0.0;
    for (int t = 0; t < cfg.num_tasks; ++t) {
      train_task(*strategy, train, t);
      if (strategy->needs_task_boundary()) strategy->task_boundary();
      const auto accs = evaluate_observed(*strategy, eval, t + 1, cfg.eval_subset);
      double sum = 0.0;
      for (double a : accs) sum += a;
      const double avg = sum / accs.size();
      for (int e = 0; e <= t; ++e)
        result.metrics.push_back({to_string(cfg.method), to_string(cfg.dataset), seed, t + 1, e,
                                  accs[e], avg});
      final_avg = avg;
      if (!cfg.quiet)
        std::cerr << "[" << to_string(cfg.method) << " seed " << seed << "] task " << (t + 1)
                  << "/" << cfg.num_tasks << " avg accuracy " << avg << "\n";
    }
    result.final_average_per_seed.push_back(final_avg);
    if (s == 0) {
      if (const auto* somlp = dynamic_cast<const SomlpStrategy*>(strategy.get())) {
        result.task_mean_masks = export_task_masks(*somlp, eval);
        result.final_u_matrix = u_matrix(somlp->som());
        result.grid_rows = somlp->som().grid_rows;
        result.grid_cols = somlp->som().grid_cols;
      }
    }
  }
  double mean = 0.0;
  for (double a : result.final_average_per_seed) mean += a;
  mean /= result.final_average_per_seed.size();
  result.final_average_mean = mean;
  if (result.final_average_per_seed.size() > 1) {
    double var = 0.0;
    for (double a : result.final_average_per_seed) var += (a - mean) * (a - mean);
    result.final_average_std =
        std::sqrt(var / (result.final_average_per_seed.size() - 1));
  } else {
    result.final_average_std = 0.0;
    result.single_seed_flagged = true;
  }
  return result;
}

std::vector<SweepPoint> memory_sweep(const RunConfig& base, const std::vector<int>& slot_list,
                                     const MnistData& data) {
  if (base.method != Method::Ewc && base.method != Method::Gem)
    throw std::invalid_argument("memory_sweep: method must be ewc or gem");
  std::vector<SweepPoint> points;
  for (int slots : slot_list) {
    RunConfig cfg = base;
    cfg.memory_slots = slots;
    validate(cfg);
    const RunResult r = run_experiment(cfg, data);
    points.push_back({slots, r.final_average_mean});
  }
  return points;
}

}  // namespace somlp
