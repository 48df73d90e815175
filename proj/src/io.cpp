#include "somlp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace somlp {

std::string metrics_csv_string(const std::vector<MetricsRecord>& records) {
  std::string out = "method,dataset,seed,tasks_trained,eval_task,accuracy,avg_accuracy\n";
  char buf[128];
  for (const MetricsRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%llu,%d,%d,%.6f,%.6f\n",
                  static_cast<unsigned long long>(r.seed), r.tasks_trained, r.eval_task,
                  r.accuracy, r.avg_accuracy);
    out += r.method;
    out += ',';
    out += r.dataset;
    out += ',';
    out += buf;
  }
  return out;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open metrics CSV for writing: " + path);
  const std::string text = metrics_csv_string(records);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failure on metrics CSV: " + path);
}

void write_pgm(const std::vector<float>& grid, int width, int height, const std::string& path) {
  if (static_cast<std::size_t>(width) * height != grid.size())
    throw std::invalid_argument("write_pgm: grid size does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open PGM for writing: " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> bytes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const float v = grid[i];
    if (v < 0.0f || v > 1.0f)
      throw std::invalid_argument("write_pgm: value " + std::to_string(v) + " outside [0,1]");
    // round half up
    bytes[i] = static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failure on PGM: " + path);
}

std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<ConfigEntry> entries;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + trimmed + "'");
    ConfigEntry e;
    e.key = trim(trimmed.substr(0, eq));
    e.value = trim(trimmed.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace somlp
