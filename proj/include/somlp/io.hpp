#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace somlp {

// One evaluation result: accuracy on `eval_task` after `tasks_trained` tasks,
// plus the running average over all observed tasks at that point.
struct MetricsRecord {
  std::string method;
  std::string dataset;
  std::uint64_t seed = 0;
  int tasks_trained = 0;
  int eval_task = 0;
  double accuracy = 0.0;
  double avg_accuracy = 0.0;
};

// Header `method,dataset,seed,tasks_trained,eval_task,accuracy,avg_accuracy`,
// 6 fractional digits, '\n' line endings. Byte-deterministic.
void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path);
std::string metrics_csv_string(const std::vector<MetricsRecord>& records);

// Binary PGM (P5, maxval 255), intensity = round-half-up of v*255.
// Values must already be in [0,1].
void write_pgm(const std::vector<float>& grid, int width, int height, const std::string& path);

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Line-oriented `key = value` file with '#' comments. Unknown-key policing
// happens at RunConfig validation, which knows the key set.
std::vector<ConfigEntry> parse_config_file(const std::string& path);

}  // namespace somlp
