#include "somlp/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "somlp/checkpoint.hpp"

namespace somlp {

std::vector<float> flatten_params(const MlpModel& model) {
  std::vector<float> flat;
  flat.reserve(param_count(model));
  flat.insert(flat.end(), model.w1.values.begin(), model.w1.values.end());
  flat.insert(flat.end(), model.w2.values.begin(), model.w2.values.end());
  return flat;
}

std::vector<float> flatten_grads(const Gradients& grads) {
  std::vector<float> flat;
  flat.reserve(grads.dw1.size() + grads.dw2.size());
  flat.insert(flat.end(), grads.dw1.values.begin(), grads.dw1.values.end());
  flat.insert(flat.end(), grads.dw2.values.begin(), grads.dw2.values.end());
  return flat;
}

void apply_flat_grad(MlpModel& model, std::span<const float> flat, float lr) {
  const std::size_t n1 = model.w1.size();
  if (flat.size() != n1 + model.w2.size())
    throw std::invalid_argument("apply_flat_grad: length mismatch");
  for (std::size_t i = 0; i < n1; ++i) model.w1.values[i] -= lr * flat[i];
  for (std::size_t i = 0; i < model.w2.size(); ++i) model.w2.values[i] -= lr * flat[n1 + i];
}

GemProjection gem_project(std::span<const float> grad, const DenseMatrix& memory_grads,
                          double margin, int max_iters, double stationarity_tol) {
  GemProjection result;
  result.gradient.assign(grad.begin(), grad.end());
  const std::size_t k = memory_grads.rows;
  if (k == 0) return result;
  if (memory_grads.cols != grad.size())
    throw std::invalid_argument("gem_project: gradient length mismatch");

  // b = G g
  std::vector<double> b(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const float* row = memory_grads.row(r);
    double acc = 0.0;
    for (std::size_t j = 0; j < grad.size(); ++j) acc += double(row[j]) * double(grad[j]);
    b[r] = acc;
  }
  const bool violated = std::any_of(b.begin(), b.end(), [](double x) { return x < 0.0; });
  if (!violated) return result;

  std::vector<double> v(k, 0.0);
  {
    // A = G G^T
    std::vector<double> A(k * k, 0.0);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = r; c < k; ++c) {
        const float* gr = memory_grads.row(r);
        const float* gc = memory_grads.row(c);
        double acc = 0.0;
        for (std::size_t j = 0; j < grad.size(); ++j) acc += double(gr[j]) * double(gc[j]);
        A[r * k + c] = acc;
        A[c * k + r] = acc;
      }
    double row_norm = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) acc += std::abs(A[r * k + c]);
      row_norm = std::max(row_norm, acc);
    }
    const double step = row_norm > 0.0 ? 1.0 / row_norm : 1.0;
    bool converged = false;
    for (int iter = 0; iter < max_iters; ++iter) {
      double max_move = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        double gradient_r = b[r];
        for (std::size_t c = 0; c < k; ++c) gradient_r += A[r * k + c] * v[c];
        const double nv = std::max(0.0, v[r] - step * gradient_r);
        max_move = std::max(max_move, std::abs(nv - v[r]));
        v[r] = nv;
      }
      if (max_move < stationarity_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      // most-violated single constraint, closed form
      std::cerr << "warning: GEM dual QP did not converge; falling back to "
                   "single-constraint projection\n";
      result.fallback = true;
      std::size_t worst = 0;
      for (std::size_t r = 1; r < k; ++r)
        if (b[r] < b[worst]) worst = r;
      std::fill(v.begin(), v.end(), 0.0);
      const float* row = memory_grads.row(worst);
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < grad.size(); ++j) norm_sq += double(row[j]) * double(row[j]);
      if (norm_sq > 0.0) v[worst] = -b[worst] / norm_sq;
    }
  }
  result.projected = true;
  for (std::size_t r = 0; r < k; ++r) v[r] += margin;
  for (std::size_t r = 0; r < k; ++r) {
    const float coef = static_cast<float>(v[r]);
    if (coef == 0.0f) continue;
    const float* row = memory_grads.row(r);
    for (std::size_t j = 0; j < grad.size(); ++j) result.gradient[j] += coef * row[j];
  }
  return result;
}

int Strategy::predict_sample(std::span<const float> x) const {
  std::vector<float> mask;
  mask_for(x, mask);
  return predict(model_, x, mask);
}

void Strategy::save_state(std::ostream& out) const {
  ser::write_matrix(out, model_.w1);
  ser::write_matrix(out, model_.w2);
  ser::write_u32(out, static_cast<std::uint32_t>(model_.activation));
  ser::write_f32(out, lr_);
  ser::write_u64(out, static_cast<std::uint64_t>(steps_));
}

void Strategy::load_state(std::istream& in) {
  model_.w1 = ser::read_matrix(in);
  model_.w2 = ser::read_matrix(in);
  model_.activation = static_cast<Activation>(ser::read_u32(in));
  lr_ = ser::read_f32(in);
  steps_ = static_cast<std::int64_t>(ser::read_u64(in));
}

void NaiveStrategy::train_batch(const Batch& batch) {
  auto [loss, grads] = loss_and_grad(model_, batch, DenseMatrix{});
  sgd_step(model_, grads, lr_);
  ++steps_;
}

SomlpStrategy::SomlpStrategy(MlpModel model, float lr, SomState som, SomSchedule schedule,
                             NeighborhoodExponent exponent, PretrainVariant variant)
    : Strategy(std::move(model), lr),
      som_(std::move(som)),
      schedule_(schedule),
      exponent_(exponent),
      variant_(variant) {
  if (static_cast<std::size_t>(som_.num_nodes()) != model_.hidden_dim())
    throw std::invalid_argument("SomlpStrategy: SOM node count must equal hidden width");
}

void SomlpStrategy::pretrain(const PretrainStream& stream, int batch_size) {
  SomSchedule pre;
  if (stream.variant() == PretrainVariant::Single) {
    // large neighborhood, gentle decay
    pre.alpha0 = 0.5f;
    pre.sigma0 = static_cast<float>(som_.grid_rows) / 2.0f;
    pre.tau = 2.0f;
  } else {
    pre.alpha0 = schedule_.alpha0;
    pre.sigma0 = schedule_.sigma0;
    pre.tau = schedule_.tau;
  }
  pre.epsilon = schedule_.epsilon;
  pre.n_steps = stream.num_batches(batch_size);
  DenseMatrix features;
  for (int b = 0; b < stream.num_batches(batch_size); ++b) {
    stream.fill_batch(b, batch_size, features);
    som_update_step(som_, pre, features, exponent_);
  }
}

void SomlpStrategy::train_batch(const Batch& batch) {
  som_update_step(som_, schedule_, batch.features, exponent_);
  DenseMatrix masks(batch.size(), som_.num_nodes());
  for (std::size_t s = 0; s < batch.size(); ++s)
    output_mask_into(som_, {batch.features.row(s), batch.features.cols}, schedule_.epsilon,
                     masks.row(s));
  auto [loss, grads] = loss_and_grad(model_, batch, masks);
  sgd_step(model_, grads, lr_);
  ++steps_;
}

void SomlpStrategy::mask_for(std::span<const float> x, std::vector<float>& out) const {
  out.resize(som_.num_nodes());
  output_mask_into(som_, x, schedule_.epsilon, out.data());
}

void SomlpStrategy::save_state(std::ostream& out) const {
  Strategy::save_state(out);
  ser::write_u32(out, static_cast<std::uint32_t>(som_.grid_rows));
  ser::write_u32(out, static_cast<std::uint32_t>(som_.grid_cols));
  ser::write_matrix(out, som_.weights);
  ser::write_f32(out, schedule_.alpha0);
  ser::write_f32(out, schedule_.sigma0);
  ser::write_f32(out, schedule_.epsilon);
  ser::write_f32(out, schedule_.tau);
  ser::write_u64(out, static_cast<std::uint64_t>(schedule_.n_steps));
  ser::write_u64(out, static_cast<std::uint64_t>(schedule_.t));
  ser::write_u32(out, static_cast<std::uint32_t>(exponent_));
}

void SomlpStrategy::load_state(std::istream& in) {
  Strategy::load_state(in);
  som_.grid_rows = static_cast<int>(ser::read_u32(in));
  som_.grid_cols = static_cast<int>(ser::read_u32(in));
  som_.weights = ser::read_matrix(in);
  schedule_.alpha0 = ser::read_f32(in);
  schedule_.sigma0 = ser::read_f32(in);
  schedule_.epsilon = ser::read_f32(in);
  schedule_.tau = ser::read_f32(in);
  schedule_.n_steps = static_cast<std::int64_t>(ser::read_u64(in));
  schedule_.t = static_cast<std::int64_t>(ser::read_u64(in));
  exponent_ = static_cast<NeighborhoodExponent>(ser::read_u32(in));
}

EwcStrategy::EwcStrategy(MlpModel model, float lr, int memory_slots, float lambda)
    : Strategy(std::move(model), lr),
      buffer_capacity_(memory_slots),
      lambda_(lambda),
      buffer_x_(memory_slots, model_.input_dim()) {
  if (memory_slots < 1) throw std::invalid_argument("EwcStrategy: memory_slots must be >= 1");
  buffer_y_.resize(memory_slots);
}

void EwcStrategy::add_penalty_grad(Gradients& grads) const {
  const std::size_t n1 = model_.w1.size();
  for (const Anchor& a : anchors_) {
    for (std::size_t i = 0; i < n1; ++i)
      grads.dw1.values[i] += lambda_ * a.fisher_diag[i] * (model_.w1.values[i] - a.theta_star[i]);
    for (std::size_t i = 0; i < model_.w2.size(); ++i)
      grads.dw2.values[i] +=
          lambda_ * a.fisher_diag[n1 + i] * (model_.w2.values[i] - a.theta_star[n1 + i]);
  }
}

void EwcStrategy::train_batch(const Batch& batch) {
  auto [loss, grads] = loss_and_grad(model_, batch, DenseMatrix{});
  add_penalty_grad(grads);
  sgd_step(model_, grads, lr_);
  // ring buffer of recent samples
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::size_t slot = buffer_seen_ % buffer_capacity_;
    std::copy_n(batch.features.row(s), model_.input_dim(), buffer_x_.row(slot));
    buffer_y_[slot] = batch.labels[s];
    ++buffer_seen_;
  }
  ++steps_;
}

void EwcStrategy::task_boundary() {
  const std::size_t n = buffered();
  if (n == 0) {
    std::cerr << "warning: EWC consolidation skipped, sample buffer empty\n";
    return;
  }
  Anchor anchor;
  anchor.theta_star = flatten_params(model_);
  std::vector<double> fisher(anchor.theta_star.size(), 0.0);
  Batch one;
  one.labels.resize(1);
  for (std::size_t s = 0; s < n; ++s) {
    one.features = DenseMatrix(1, model_.input_dim());
    std::copy_n(buffer_x_.row(s), model_.input_dim(), one.features.row(0));
    one.labels[0] = buffer_y_[s];
    // empirical Fisher: squared gradient of the stored label's log-likelihood
    auto [loss, grads] = loss_and_grad(model_, one, DenseMatrix{});
    const auto flat = flatten_grads(grads);
    for (std::size_t i = 0; i < flat.size(); ++i) fisher[i] += double(flat[i]) * double(flat[i]);
  }
  anchor.fisher_diag.resize(fisher.size());
  for (std::size_t i = 0; i < fisher.size(); ++i)
    anchor.fisher_diag[i] = static_cast<float>(fisher[i] / static_cast<double>(n));
  anchors_.push_back(std::move(anchor));
  buffer_seen_ = 0;
}

void EwcStrategy::save_state(std::ostream& out) const {
  Strategy::save_state(out);
  ser::write_u32(out, static_cast<std::uint32_t>(buffer_capacity_));
  ser::write_f32(out, lambda_);
  ser::write_u32(out, static_cast<std::uint32_t>(anchors_.size()));
  for (const Anchor& a : anchors_) {
    ser::write_u64(out, a.fisher_diag.size());
    ser::write_floats(out, a.fisher_diag.data(), a.fisher_diag.size());
    ser::write_floats(out, a.theta_star.data(), a.theta_star.size());
  }
  ser::write_u64(out, buffer_seen_);
  ser::write_matrix(out, buffer_x_);
  ser::write_bytes(out, buffer_y_.data(), buffer_y_.size());
}

void EwcStrategy::load_state(std::istream& in) {
  Strategy::load_state(in);
  buffer_capacity_ = static_cast<int>(ser::read_u32(in));
  lambda_ = ser::read_f32(in);
  anchors_.resize(ser::read_u32(in));
  for (Anchor& a : anchors_) {
    const std::size_t n = ser::read_u64(in);
    a.fisher_diag.resize(n);
    ser::read_floats(in, a.fisher_diag.data(), n);
    a.theta_star.resize(n);
    ser::read_floats(in, a.theta_star.data(), n);
  }
  buffer_seen_ = ser::read_u64(in);
  buffer_x_ = ser::read_matrix(in);
  buffer_y_.resize(buffer_capacity_);
  ser::read_bytes(in, buffer_y_.data(), buffer_y_.size());
}

GemStrategy::GemStrategy(MlpModel model, float lr, int total_slots, float margin, int num_tasks)
    : Strategy(std::move(model), lr),
      per_task_capacity_(total_slots / num_tasks),
      margin_(margin) {
  if (per_task_capacity_ < 1)
    throw std::invalid_argument("GemStrategy: fewer than one memory slot per task (" +
                                std::to_string(total_slots) + " slots, " +
                                std::to_string(num_tasks) + " tasks)");
  memory_x_.resize(num_tasks);
  memory_y_.resize(num_tasks);
}

void GemStrategy::train_batch(const Batch& batch) {
  // gradients of the loss on each past task's memory, at current parameters
  std::vector<int> past;
  for (int t = 0; t < current_task_; ++t)
    if (!memory_y_[t].empty()) past.push_back(t);

  auto [loss, grads] = loss_and_grad(model_, batch, DenseMatrix{});
  if (past.empty()) {
    sgd_step(model_, grads, lr_);
  } else {
    DenseMatrix memory_grads(past.size(), param_count(model_));
    Batch mem;
    for (std::size_t r = 0; r < past.size(); ++r) {
      mem.features = memory_x_[past[r]];
      mem.features.rows = memory_y_[past[r]].size();
      mem.features.values.resize(mem.features.rows * mem.features.cols);
      mem.labels = memory_y_[past[r]];
      auto [mloss, mgrads] = loss_and_grad(model_, mem, DenseMatrix{});
      const auto flat = flatten_grads(mgrads);
      std::copy(flat.begin(), flat.end(), memory_grads.row(r));
    }
    const auto flat_g = flatten_grads(grads);
    const auto projection = gem_project(flat_g, memory_grads, margin_);
    apply_flat_grad(model_, projection.gradient, lr_);
  }
  // earliest samples of the current task fill its memory
  auto& mx = memory_x_[current_task_];
  auto& my = memory_y_[current_task_];
  if (mx.rows == 0) mx = DenseMatrix(per_task_capacity_, model_.input_dim());
  for (std::size_t s = 0; s < batch.size() && my.size() < std::size_t(per_task_capacity_); ++s) {
    std::copy_n(batch.features.row(s), model_.input_dim(), mx.row(my.size()));
    my.push_back(batch.labels[s]);
  }
  ++steps_;
}

void GemStrategy::save_state(std::ostream& out) const {
  Strategy::save_state(out);
  ser::write_u32(out, static_cast<std::uint32_t>(per_task_capacity_));
  ser::write_f32(out, margin_);
  ser::write_u32(out, static_cast<std::uint32_t>(current_task_));
  ser::write_u32(out, static_cast<std::uint32_t>(memory_y_.size()));
  for (std::size_t t = 0; t < memory_y_.size(); ++t) {
    ser::write_matrix(out, memory_x_[t]);
    ser::write_u64(out, memory_y_[t].size());
    ser::write_bytes(out, memory_y_[t].data(), memory_y_[t].size());
  }
}

void GemStrategy::load_state(std::istream& in) {
  Strategy::load_state(in);
  per_task_capacity_ = static_cast<int>(ser::read_u32(in));
  margin_ = ser::read_f32(in);
  current_task_ = static_cast<int>(ser::read_u32(in));
  const std::uint32_t n = ser::read_u32(in);
  memory_x_.assign(n, DenseMatrix{});
  memory_y_.assign(n, {});
  for (std::uint32_t t = 0; t < n; ++t) {
    memory_x_[t] = ser::read_matrix(in);
    memory_y_[t].resize(ser::read_u64(in));
    ser::read_bytes(in, memory_y_[t].data(), memory_y_[t].size());
  }
}

}  // namespace somlp
