#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somlp/matrix.hpp"
#include "somlp/rng.hpp"

namespace somlp {

enum class NeighborhoodExponent { Linear, Squared };

// Decay schedule for the SOM learning rate and neighborhood radius, plus the
// gating temperature epsilon (which is held constant).
struct SomSchedule {
  float alpha0 = 1.0f;
  float sigma0 = 2.0f;
  float epsilon = 0.5f;
  float tau = 15.0f;
  std::int64_t n_steps = 1;
  std::int64_t t = 0;

  bool operator==(const SomSchedule&) const = default;
};

// alpha_t = alpha0 * exp(-tau*t/n_steps), same factor for sigma. Closed form
// in t, not a compounding reassignment.
struct DecayedParams {
  float alpha;
  float sigma;
};
DecayedParams decayed_params(const SomSchedule& schedule, std::int64_t t);

// Rectangular node lattice with one weight vector per node. Lattice
// coordinates of node i are (i / cols, i % cols); distances between them are
// plain Euclidean, no wraparound.
struct SomState {
  int grid_rows = 0;
  int grid_cols = 0;
  DenseMatrix weights;  // num_nodes x input_dim

  int num_nodes() const { return grid_rows * grid_cols; }
  int node_row(int i) const { return i / grid_cols; }
  int node_col(int i) const { return i % grid_cols; }

  bool operator==(const SomState&) const = default;
};

// Weights drawn uniformly from [0,1) per entry (input space is [0,1]).
SomState init_som(int grid_rows, int grid_cols, int input_dim, Prng& prng);

std::vector<float> batch_mean(const DenseMatrix& batch);

// Node with minimal Euclidean distance to x; ties go to the lowest index.
int find_bmu(const SomState& som, std::span<const float> x);

// Euclidean lattice distance of every node to the BMU.
std::vector<float> grid_distance_vector(const SomState& som, int bmu);

// phi_i = exp(-D_i/sigma^2), or exp(-D_i^2/sigma^2) for the squared variant.
std::vector<float> neighborhood_mask(std::span<const float> distances, float sigma,
                                     NeighborhoodExponent exponent = NeighborhoodExponent::Linear);

// Gating mask for one input sample: gamma_i = exp(-||x - theta_i||/epsilon).
std::vector<float> output_mask(const SomState& som, std::span<const float> x, float epsilon);
void output_mask_into(const SomState& som, std::span<const float> x, float epsilon, float* out);

// One competitive-learning step on the batch mean; increments schedule.t.
void som_update_step(SomState& som, SomSchedule& schedule, const DenseMatrix& batch,
                     NeighborhoodExponent exponent = NeighborhoodExponent::Linear);

// Per node, mean weight-space distance to its 4-connected lattice neighbors.
std::vector<float> u_matrix(const SomState& som);

}  // namespace somlp
