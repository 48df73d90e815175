#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "somlp/checkpoint.hpp"
#include "somlp/harness.hpp"
#include "support/synthetic.hpp"

using namespace somlp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "somlp_harness_tests";
  fs::create_directories(dir);
  return dir;
}

RunConfig mini_config(Method method, DatasetKind dataset) {
  RunConfig cfg = default_config(method, dataset);
  cfg.num_tasks = 2;
  cfg.samples_per_task = 200;
  cfg.seeds_count = 1;
  cfg.hidden_units = 16;
  cfg.grid_rows = cfg.grid_cols = 4;
  cfg.batch_size = 10;
  cfg.eval_subset = 100;
  if (method == Method::Gem) cfg.memory_slots = 20;
  cfg.quiet = true;
  return cfg;
}

const MnistData& mini_data() {
  static const MnistData data = testing::make_synthetic_mnist(200, 120, 77);
  return data;
}

}  // namespace

TEST_CASE("table defaults match the hyperparameter table") {
  const auto somlp_m = default_config(Method::SomlpM, DatasetKind::Permutations);
  CHECK(somlp_m.alpha == 1.0f);
  CHECK(somlp_m.sigma == 2.0f);
  CHECK(somlp_m.epsilon == 0.5f);
  CHECK(somlp_m.tau == 15.0f);
  CHECK(somlp_m.batch_size == 10);
  CHECK(somlp_m.learning_rate == 0.01f);
  CHECK(somlp_m.hidden_units == 1600);

  const auto somlp_s_rot = default_config(Method::SomlpS, DatasetKind::Rotations);
  CHECK(somlp_s_rot.alpha == 3.0f);
  CHECK(somlp_s_rot.sigma == 4.0f);
  CHECK(somlp_s_rot.tau == 3.0f);
  CHECK(somlp_s_rot.batch_size == 100);
  CHECK(somlp_s_rot.learning_rate == 0.02f);

  const auto ewc = default_config(Method::Ewc, DatasetKind::Permutations);
  CHECK(ewc.learning_rate == 0.1f);
  CHECK(ewc.memory_strength == 3.0f);
  CHECK(ewc.hidden_units == 3200);

  const auto gem = default_config(Method::Gem, DatasetKind::Rotations);
  CHECK(gem.learning_rate == 0.1f);
  CHECK(gem.memory_strength == 0.5f);
}

TEST_CASE("validation rejects inconsistent configs") {
  auto cfg = default_config(Method::Mlp, DatasetKind::Permutations);
  cfg.memory_slots = 100;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  auto gem = default_config(Method::Gem, DatasetKind::Permutations);
  gem.memory_slots = 19;
  CHECK_THROWS_AS(validate(gem), std::invalid_argument);

  auto som = default_config(Method::SomlpM, DatasetKind::Permutations);
  som.grid_rows = 10;  // 10*40 != 1600
  CHECK_THROWS_AS(validate(som), std::invalid_argument);
}

TEST_CASE("config file entries apply with unknown keys rejected") {
  const auto dir = temp_dir();
  const auto path = (dir / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "alpha = 2.5\n"
        << "batch_size = 25   # trailing comment\n"
        << "dataset = rotations\n";
  }
  RunConfig cfg = default_config(Method::SomlpM, DatasetKind::Permutations);
  apply_config_entries(cfg, parse_config_file(path), path);
  CHECK(cfg.alpha == 2.5f);
  CHECK(cfg.batch_size == 25);
  CHECK(cfg.dataset == DatasetKind::Rotations);

  {
    std::ofstream out(path);
    out << "alpha = 1\nbogus_key = 3\n";
  }
  CHECK_THROWS_WITH_AS(apply_config_entries(cfg, parse_config_file(path), path),
                       doctest::Contains(":2"), std::runtime_error);
}

TEST_CASE("untrained model sits at chance level") {
  const auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  const auto strategy = make_strategy(cfg, 3);
  const auto train = build_task_stream(cfg.dataset, mini_data().train, 3, cfg.batch_size,
                                       cfg.num_tasks, cfg.samples_per_task);
  const auto eval = build_eval_stream(train, mini_data().test, 64);
  const auto accs = evaluate_observed(*strategy, eval, 2, 0);
  CHECK(accs.size() == 2);
  for (double a : accs) {
    CHECK(a >= 0.0);
    CHECK(a <= 0.35);  // 120 samples of 10 classes; generous chance band
  }
}

TEST_CASE("mini experiment is deterministic to the CSV byte") {
  const auto cfg = mini_config(Method::SomlpM, DatasetKind::Rotations);
  const auto a = run_experiment(cfg, mini_data());
  const auto b = run_experiment(cfg, mini_data());
  CHECK(metrics_csv_string(a.metrics) == metrics_csv_string(b.metrics));
  CHECK(a.final_average_mean == b.final_average_mean);
  CHECK(a.task_mean_masks == b.task_mean_masks);
}

TEST_CASE("metrics bookkeeping: row counts and self-consistent averages") {
  auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  cfg.num_tasks = 4;
  const auto r = run_experiment(cfg, mini_data());
  // sum_{k=1..4} k rows for one seed
  CHECK(r.metrics.size() == 1 + 2 + 3 + 4);
  for (int k = 1; k <= 4; ++k) {
    double sum = 0.0;
    double reported = 0.0;
    int n = 0;
    for (const auto& m : r.metrics)
      if (m.tasks_trained == k) {
        sum += m.accuracy;
        reported = m.avg_accuracy;
        ++n;
      }
    CHECK(n == k);
    CHECK(reported == doctest::Approx(sum / k).epsilon(1e-12));
  }
  CHECK(r.single_seed_flagged);
  CHECK(r.final_average_std == 0.0);

  const std::string csv = metrics_csv_string(r.metrics);
  CHECK(csv.starts_with("method,dataset,seed,tasks_trained,eval_task,accuracy,avg_accuracy\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 10);
}

TEST_CASE("single-task run equals plain training, no forgetting possible") {
  auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  cfg.num_tasks = 1;
  const auto r = run_experiment(cfg, mini_data());
  CHECK(r.metrics.size() == 1);
  CHECK(r.metrics[0].accuracy == doctest::Approx(r.final_average_mean));
}

TEST_CASE("multi-seed std is populated") {
  auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  cfg.seeds_count = 2;
  const auto r = run_experiment(cfg, mini_data());
  CHECK(r.final_average_per_seed.size() == 2);
  CHECK_FALSE(r.single_seed_flagged);
}

TEST_CASE("somlp run exports masks and u-matrix of grid shape") {
  const auto cfg = mini_config(Method::SomlpM, DatasetKind::Rotations);
  const auto r = run_experiment(cfg, mini_data());
  CHECK(r.task_mean_masks.size() == 2);
  CHECK(r.grid_rows == 4);
  CHECK(r.grid_cols == 4);
  for (const auto& mask : r.task_mean_masks) {
    CHECK(mask.size() == 16);
    for (float v : mask) {
      CHECK(v > 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  CHECK(r.final_u_matrix.size() == 16);
  const auto norm = normalize_grid(r.final_u_matrix);
  for (float v : norm) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("memory sweep runs per slot count and rejects bad methods") {
  auto cfg = mini_config(Method::Gem, DatasetKind::Permutations);
  const auto points = memory_sweep(cfg, {20, 40}, mini_data());
  CHECK(points.size() == 2);
  CHECK(points[0].memory_slots == 20);

  auto single = memory_sweep(cfg, {40}, mini_data());
  cfg.memory_slots = 40;
  const auto direct = run_experiment(cfg, mini_data());
  CHECK(single[0].final_average == doctest::Approx(direct.final_average_mean));

  auto mlp = mini_config(Method::Mlp, DatasetKind::Permutations);
  CHECK_THROWS_AS(memory_sweep(mlp, {8}, mini_data()), std::invalid_argument);
}

TEST_CASE("pgm writer is byte exact") {
  const auto dir = temp_dir();
  const auto path = (dir / "grid.pgm").string();
  write_pgm({0.0f, 0.5f, 0.5f, 1.0f}, 2, 2, path);
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string expected = std::string("P5\n2 2\n255\n") +
                               std::string{'\x00', '\x80', '\x80', '\xFF'};
  CHECK(content == expected);

  write_pgm(std::vector<float>(4, 0.0f), 2, 2, path);
  std::ifstream in0(path, std::ios::binary);
  std::string zeros((std::istreambuf_iterator<char>(in0)), std::istreambuf_iterator<char>());
  CHECK(zeros.substr(zeros.size() - 4) == std::string(4, '\x00'));

  CHECK_THROWS_AS(write_pgm({1.5f}, 1, 1, path), std::invalid_argument);
}

TEST_CASE("checkpoint round trip and resumed training match uninterrupted run") {
  const auto dir = temp_dir();
  const auto path = (dir / "state.ckpt").string();
  const auto cfg = mini_config(Method::SomlpM, DatasetKind::Permutations);
  const auto train = build_task_stream(cfg.dataset, mini_data().train, cfg.master_seed,
                                       cfg.batch_size, cfg.num_tasks, cfg.samples_per_task);
  const auto eval = build_eval_stream(train, mini_data().test, 64);

  // uninterrupted reference
  auto reference = make_strategy(cfg, cfg.master_seed);
  train_task(*reference, train, 0);
  train_task(*reference, train, 1);

  // interrupted mid-task-1
  auto first = make_strategy(cfg, cfg.master_seed);
  train_task(*first, train, 0);
  const int half = train.batches_per_task() / 2;
  Batch batch;
  for (int b = 0; b < half; ++b) {
    train.fill_batch(1, b, batch);
    first->train_batch(batch);
  }
  save_checkpoint(*first, {1, static_cast<std::uint32_t>(half)}, path);

  auto resumed = make_strategy(cfg, cfg.master_seed);
  const auto pos = load_checkpoint(*resumed, path);
  CHECK(pos.task_index == 1);
  CHECK(pos.batch_index == static_cast<std::uint32_t>(half));
  train_task(*resumed, train, static_cast<int>(pos.task_index),
             static_cast<int>(pos.batch_index));
  CHECK(resumed->model() == reference->model());

  const auto acc_ref = evaluate_observed(*reference, eval, 2, 50);
  const auto acc_res = evaluate_observed(*resumed, eval, 2, 50);
  CHECK(acc_ref == acc_res);

  // fresh round trip is field-exact
  auto fresh = make_strategy(cfg, cfg.master_seed);
  save_checkpoint(*fresh, {0, 0}, path);
  auto reload = make_strategy(cfg, cfg.master_seed + 1);
  load_checkpoint(*reload, path);
  CHECK(reload->model() == fresh->model());
}

TEST_CASE("checkpoint loader names bad magic and wrong method") {
  const auto dir = temp_dir();
  const auto path = (dir / "bad.ckpt").string();
  const auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  auto strategy = make_strategy(cfg, 1);
  save_checkpoint(*strategy, {0, 0}, path);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXXXXXX", 8);
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(*strategy, path), doctest::Contains("magic"),
                       std::runtime_error);

  save_checkpoint(*strategy, {0, 0}, path);
  auto gem = make_strategy(mini_config(Method::Gem, DatasetKind::Permutations), 1);
  CHECK_THROWS_WITH_AS(load_checkpoint(*gem, path), doctest::Contains("method"),
                       std::runtime_error);
}

TEST_CASE("eval subset shortens evaluation deterministically") {
  const auto cfg = mini_config(Method::Mlp, DatasetKind::Permutations);
  const auto strategy = make_strategy(cfg, 5);
  const auto train = build_task_stream(cfg.dataset, mini_data().train, 5, cfg.batch_size,
                                       cfg.num_tasks, cfg.samples_per_task);
  const auto eval = build_eval_stream(train, mini_data().test, 64);
  const auto a = evaluate_observed(*strategy, eval, 2, 40);
  const auto b = evaluate_observed(*strategy, eval, 2, 40);
  CHECK(a == b);
}
