#include "somlp/som.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace somlp {

DecayedParams decayed_params(const SomSchedule& schedule, std::int64_t t) {
  if (t > schedule.n_steps)
    throw std::invalid_argument("decayed_params: step past schedule end");
  const float factor = std::exp(-schedule.tau * static_cast<float>(t) /
                                static_cast<float>(schedule.n_steps));
  return {schedule.alpha0 * factor, schedule.sigma0 * factor};
}

SomState init_som(int grid_rows, int grid_cols, int input_dim, Prng& prng) {
  SomState som;
  som.grid_rows = grid_rows;
  som.grid_cols = grid_cols;
  som.weights = DenseMatrix(static_cast<std::size_t>(grid_rows) * grid_cols, input_dim);
  for (float& w : som.weights.values) w = prng.next_float();
  return som;
}

std::vector<float> batch_mean(const DenseMatrix& batch) {
  if (batch.rows == 0) throw std::invalid_argument("batch_mean: empty batch");
  std::vector<float> mean(batch.cols);
  std::vector<double> acc(batch.cols, 0.0);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const float* row = batch.row(i);
    for (std::size_t j = 0; j < batch.cols; ++j) acc[j] += row[j];
  }
  for (std::size_t j = 0; j < batch.cols; ++j)
    mean[j] = static_cast<float>(acc[j] / static_cast<double>(batch.rows));
  return mean;
}

int find_bmu(const SomState& som, std::span<const float> x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < som.num_nodes(); ++i) {
    const double d = squared_distance({som.weights.row(i), som.weights.cols}, x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<float> grid_distance_vector(const SomState& som, int bmu) {
  if (bmu < 0 || bmu >= som.num_nodes())
    throw std::invalid_argument("grid_distance_vector: bad node index");
  std::vector<float> d(som.num_nodes());
  const int br = som.node_row(bmu), bc = som.node_col(bmu);
  for (int i = 0; i < som.num_nodes(); ++i) {
    const int dr = som.node_row(i) - br, dc = som.node_col(i) - bc;
    d[i] = std::sqrt(static_cast<float>(dr * dr + dc * dc));
  }
  return d;
}

std::vector<float> neighborhood_mask(std::span<const float> distances, float sigma,
                                     NeighborhoodExponent exponent) {
  if (sigma <= 0.0f) throw std::invalid_argument("neighborhood_mask: sigma must be > 0");
  std::vector<float> phi(distances.size());
  const float inv_sq = 1.0f / (sigma * sigma);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const float d = exponent == NeighborhoodExponent::Squared ? distances[i] * distances[i]
                                                              : distances[i];
    phi[i] = std::exp(-d * inv_sq);
  }
  return phi;
}

void output_mask_into(const SomState& som, std::span<const float> x, float epsilon, float* out) {
  if (epsilon <= 0.0f) throw std::invalid_argument("output_mask: epsilon must be > 0");
  const float inv_eps = 1.0f / epsilon;
  for (int i = 0; i < som.num_nodes(); ++i) {
    const float dist =
        static_cast<float>(euclidean_distance({som.weights.row(i), som.weights.cols}, x));
    out[i] = std::exp(-dist * inv_eps);
  }
}

std::vector<float> output_mask(const SomState& som, std::span<const float> x, float epsilon) {
  std::vector<float> gamma(som.num_nodes());
  output_mask_into(som, x, epsilon, gamma.data());
  return gamma;
}

void som_update_step(SomState& som, SomSchedule& schedule, const DenseMatrix& batch,
                     NeighborhoodExponent exponent) {
  if (schedule.t >= schedule.n_steps)
    throw std::invalid_argument("som_update_step: schedule exhausted");
  const auto xbar = batch_mean(batch);
  const int bmu = find_bmu(som, xbar);
  const auto dist = grid_distance_vector(som, bmu);
  const auto [alpha, sigma] = decayed_params(schedule, schedule.t);
  const auto phi = neighborhood_mask(dist, sigma, exponent);
  for (int i = 0; i < som.num_nodes(); ++i) {
    float* theta = som.weights.row(i);
    const float step = alpha * phi[i];
    for (std::size_t j = 0; j < som.weights.cols; ++j)
      theta[j] += step * (xbar[j] - theta[j]);
  }
  ++schedule.t;
}

std::vector<float> u_matrix(const SomState& som) {
  std::vector<float> u(som.num_nodes(), 0.0f);
  for (int i = 0; i < som.num_nodes(); ++i) {
    const int r = som.node_row(i), c = som.node_col(i);
    double acc = 0.0;
    int n = 0;
    const int offsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    for (const auto& off : offsets) {
      const int rr = r + off[0], cc = c + off[1];
      if (rr < 0 || rr >= som.grid_rows || cc < 0 || cc >= som.grid_cols) continue;
      const int j = rr * som.grid_cols + cc;
      acc += euclidean_distance({som.weights.row(i), som.weights.cols},
                                {som.weights.row(j), som.weights.cols});
      ++n;
    }
    u[i] = static_cast<float>(acc / n);
  }
  return u;
}

}  // namespace somlp
