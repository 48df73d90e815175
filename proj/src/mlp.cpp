#include "somlp/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "somlp/loss.hpp"

namespace somlp {
namespace {

float activate(Activation a, float z) {
  switch (a) {
    case Activation::Relu: return z > 0.0f ? z : 0.0f;
    case Activation::Tanh: return std::tanh(z);
    case Activation::None: return z;
  }
  return z;
}

float activate_deriv(Activation a, float z, float h_raw) {
  switch (a) {
    case Activation::Relu: return z > 0.0f ? 1.0f : 0.0f;
    case Activation::Tanh: return 1.0f - h_raw * h_raw;
    case Activation::None: return 1.0f;
  }
  return 1.0f;
}

}  // namespace

MlpModel init_mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                  Activation activation, Prng& prng) {
  MlpModel model;
  model.activation = activation;
  model.w1 = DenseMatrix(hidden_dim, input_dim);
  model.w2 = DenseMatrix(output_dim, hidden_dim);
  const float b1 = 1.0f / std::sqrt(static_cast<float>(input_dim));
  const float b2 = 1.0f / std::sqrt(static_cast<float>(hidden_dim));
  for (float& w : model.w1.values) w = prng.next_float(-b1, b1);
  for (float& w : model.w2.values) w = prng.next_float(-b2, b2);
  return model;
}

std::size_t param_count(const MlpModel& model) { return model.w1.size() + model.w2.size(); }

std::vector<float> forward(const MlpModel& model, std::span<const float> x,
                           std::span<const float> mask, ForwardCache* cache) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("forward: input length mismatch");
  if (!mask.empty() && mask.size() != model.hidden_dim())
    throw std::invalid_argument("forward: mask length mismatch");
  std::vector<float> z1 = matvec(model.w1, x);
  std::vector<float> h(model.hidden_dim());
  std::vector<float> h_raw(model.hidden_dim());
  for (std::size_t j = 0; j < h.size(); ++j) {
    h_raw[j] = activate(model.activation, z1[j]);
    h[j] = (mask.empty() ? 1.0f : mask[j]) * h_raw[j];
  }
  std::vector<float> logits = matvec(model.w2, h);
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->mask.assign(mask.begin(), mask.end());
    cache->z1 = std::move(z1);
    cache->h_raw = std::move(h_raw);
    cache->h = std::move(h);
    cache->logits = logits;
  }
  return logits;
}

double accumulate_loss_and_grad(const MlpModel& model, const Batch& batch,
                                const DenseMatrix& masks, Gradients& grads, double weight) {
  if (batch.size() == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (masks.rows != 0 && (masks.rows != batch.size() || masks.cols != model.hidden_dim()))
    throw std::invalid_argument("loss_and_grad: mask shape mismatch");
  const std::size_t n_h = model.hidden_dim();
  const std::size_t n_in = model.input_dim();
  const std::size_t n_out = model.output_dim();
  const float scale = static_cast<float>(weight / static_cast<double>(batch.size()));
  double loss_sum = 0.0;
  ForwardCache cache;
  std::vector<float> dh(n_h);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::span<const float> x{batch.features.row(s), n_in};
    const std::span<const float> mask =
        masks.rows ? std::span<const float>{masks.row(s), n_h} : std::span<const float>{};
    forward(model, x, mask, &cache);
    auto [loss, delta_out] = softmax_xent(cache.logits, batch.labels[s]);
    loss_sum += loss;
    // dW2 += delta_out ⊗ h
    for (std::size_t k = 0; k < n_out; ++k) {
      const float d = delta_out[k] * scale;
      float* row = grads.dw2.row(k);
      for (std::size_t j = 0; j < n_h; ++j) row[j] += d * cache.h[j];
    }
    // dh = (W2^T delta_out) ⊙ mask ⊙ act'(z1)
    for (std::size_t j = 0; j < n_h; ++j) dh[j] = 0.0f;
    for (std::size_t k = 0; k < n_out; ++k) {
      const float d = delta_out[k];
      const float* row = model.w2.row(k);
      for (std::size_t j = 0; j < n_h; ++j) dh[j] += d * row[j];
    }
    for (std::size_t j = 0; j < n_h; ++j) {
      const float m = mask.empty() ? 1.0f : mask[j];
      dh[j] *= m * activate_deriv(model.activation, cache.z1[j], cache.h_raw[j]) * scale;
    }
    // dW1 += dh ⊗ x
    for (std::size_t j = 0; j < n_h; ++j) {
      const float d = dh[j];
      if (d == 0.0f) continue;
      float* row = grads.dw1.row(j);
      for (std::size_t i = 0; i < n_in; ++i) row[i] += d * x[i];
    }
  }
  return loss_sum;
}

LossAndGrad loss_and_grad(const MlpModel& model, const Batch& batch, const DenseMatrix& masks) {
  LossAndGrad out{0.0, {DenseMatrix(model.w1.rows, model.w1.cols),
                        DenseMatrix(model.w2.rows, model.w2.cols)}};
  out.loss = accumulate_loss_and_grad(model, batch, masks, out.grads, 1.0) /
             static_cast<double>(batch.size());
  return out;
}

void sgd_step(MlpModel& model, const Gradients& grads, float lr) {
  if (lr <= 0.0f) throw std::invalid_argument("sgd_step: lr must be > 0");
  for (std::size_t i = 0; i < model.w1.values.size(); ++i)
    model.w1.values[i] -= lr * grads.dw1.values[i];
  for (std::size_t i = 0; i < model.w2.values.size(); ++i)
    model.w2.values[i] -= lr * grads.dw2.values[i];
}

int predict(const MlpModel& model, std::span<const float> x, std::span<const float> mask) {
  const auto logits = forward(model, x, mask);
  int best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[best]) best = static_cast<int>(k);
  return best;
}

}  // namespace somlp
