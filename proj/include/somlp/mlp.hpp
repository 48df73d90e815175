#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somlp/matrix.hpp"
#include "somlp/rng.hpp"
#include "somlp/tasks.hpp"

namespace somlp {

enum class Activation { Relu, Tanh, None };

// Bias-free single-hidden-layer network. The hidden output is elementwise
// gated by a mask before the output layer.
struct MlpModel {
  DenseMatrix w1;  // n_h1 x input_dim
  DenseMatrix w2;  // n_h2 x n_h1
  Activation activation = Activation::Relu;

  std::size_t input_dim() const { return w1.cols; }
  std::size_t hidden_dim() const { return w1.rows; }
  std::size_t output_dim() const { return w2.rows; }

  bool operator==(const MlpModel&) const = default;
};

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
MlpModel init_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                  Activation activation, Prng& prng);

std::size_t param_count(const MlpModel& model);

struct ForwardCache {
  std::vector<float> x;
  std::vector<float> z1;      // pre-activation
  std::vector<float> h_raw;   // activation(z1)
  std::vector<float> mask;
  std::vector<float> h;       // mask ⊙ h_raw
  std::vector<float> logits;
};

// z1 = W1 x; h = mask ⊙ act(z1); logits = W2 h.
std::vector<float> forward(const MlpModel& model, std::span<const float> x,
                           std::span<const float> mask, ForwardCache* cache = nullptr);

struct Gradients {
  DenseMatrix dw1;
  DenseMatrix dw2;
};

// Mean cross-entropy over the batch plus backprop through the gate. The mask
// is treated as a constant: no gradient reaches whatever produced it.
// `masks` has one row per sample; pass an empty matrix for an all-ones gate.
struct LossAndGrad {
  double loss;
  Gradients grads;
};
LossAndGrad loss_and_grad(const MlpModel& model, const Batch& batch, const DenseMatrix& masks);

// Accumulating variant; adds batch-mean gradients scaled by `weight` into
// `grads` and returns the summed loss.
double accumulate_loss_and_grad(const MlpModel& model, const Batch& batch,
                                const DenseMatrix& masks, Gradients& grads, double weight);

void sgd_step(MlpModel& model, const Gradients& grads, float lr);

int predict(const MlpModel& model, std::span<const float> x, std::span<const float> mask);

}  // namespace somlp
