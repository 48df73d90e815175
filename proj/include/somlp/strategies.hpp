#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "somlp/mlp.hpp"
#include "somlp/som.hpp"
#include "somlp/tasks.hpp"

namespace somlp {

// Flat parameter/gradient layout: all of W1 row-major, then all of W2.
std::vector<float> flatten_params(const MlpModel& model);
std::vector<float> flatten_grads(const Gradients& grads);
void apply_flat_grad(MlpModel& model, std::span<const float> flat, float lr);

struct GemProjection {
  std::vector<float> gradient;   // the projected g̃
  bool projected = false;        // false when no constraint was violated
  bool fallback = false;         // true when the QP failed and the single-constraint
                                 // closed form was used instead
};

// Gradient projection of GEM: keeps inner products with every past-task
// memory gradient non-negative. `memory_grads` has one row per past task.
// Solves the dual QP min_{v>=0} 1/2 v^T G G^T v + (G g)^T v by projected
// gradient, then offsets each dual coordinate by `margin`.
GemProjection gem_project(std::span<const float> grad, const DenseMatrix& memory_grads,
                          double margin, int max_iters = 200, double stationarity_tol = 1e-8);

// One continual learner behind a uniform interface. The harness drives
// train_batch over the stream and (only for learners that ask for it)
// signals task boundaries.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual void train_batch(const Batch& batch) = 0;
  virtual bool needs_task_boundary() const { return false; }
  virtual void task_boundary() {}

  // Gating mask for one input at evaluation time; empty means all-ones.
  virtual void mask_for(std::span<const float> x, std::vector<float>& out) const { out.clear(); }

  virtual std::size_t total_param_count() const { return param_count(model_); }

  virtual void save_state(std::ostream& out) const;
  virtual void load_state(std::istream& in);
  virtual std::string name() const = 0;

  int predict_sample(std::span<const float> x) const;

  const MlpModel& model() const { return model_; }
  MlpModel& mutable_model() { return model_; }
  float learning_rate() const { return lr_; }
  std::int64_t steps_taken() const { return steps_; }

 protected:
  Strategy(MlpModel model, float lr) : model_(std::move(model)), lr_(lr) {}

  MlpModel model_;
  float lr_;
  std::int64_t steps_ = 0;
};

class NaiveStrategy final : public Strategy {
 public:
  NaiveStrategy(MlpModel model, float lr) : Strategy(std::move(model), lr) {}
  void train_batch(const Batch& batch) override;
  std::string name() const override { return "mlp"; }
};

class SomlpStrategy final : public Strategy {
 public:
  SomlpStrategy(MlpModel model, float lr, SomState som, SomSchedule schedule,
                NeighborhoodExponent exponent, PretrainVariant variant);

  // Consumes the unlabeled stream with a dedicated schedule; the MLP is
  // untouched. Variant Single uses fixed large-neighborhood settings,
  // variant Multi reuses the run's (alpha, sigma, tau).
  void pretrain(const PretrainStream& stream, int batch_size);

  void train_batch(const Batch& batch) override;
  void mask_for(std::span<const float> x, std::vector<float>& out) const override;
  std::size_t total_param_count() const override {
    return param_count(model_) + som_.weights.size();
  }
  void save_state(std::ostream& out) const override;
  void load_state(std::istream& in) override;
  std::string name() const override {
    return variant_ == PretrainVariant::Single ? "somlp_s" : "somlp_m";
  }

  const SomState& som() const { return som_; }
  const SomSchedule& schedule() const { return schedule_; }
  SomSchedule& mutable_schedule() { return schedule_; }
  PretrainVariant variant() const { return variant_; }

 private:
  SomState som_;
  SomSchedule schedule_;
  NeighborhoodExponent exponent_;
  PretrainVariant variant_;
};

class EwcStrategy final : public Strategy {
 public:
  struct Anchor {
    std::vector<float> fisher_diag;
    std::vector<float> theta_star;
  };

  EwcStrategy(MlpModel model, float lr, int memory_slots, float lambda);

  void train_batch(const Batch& batch) override;
  bool needs_task_boundary() const override { return true; }
  // Computes the diagonal empirical Fisher over the buffered samples at the
  // current parameters, snapshots them, and clears the buffer.
  void task_boundary() override;

  void save_state(std::ostream& out) const override;
  void load_state(std::istream& in) override;
  std::string name() const override { return "ewc"; }

  const std::vector<Anchor>& anchors() const { return anchors_; }
  std::size_t buffered() const { return std::min<std::size_t>(buffer_seen_, buffer_capacity_); }

 private:
  void add_penalty_grad(Gradients& grads) const;

  int buffer_capacity_;
  float lambda_;
  std::vector<Anchor> anchors_;
  // ring buffer of recent samples
  DenseMatrix buffer_x_;
  std::vector<std::uint8_t> buffer_y_;
  std::size_t buffer_seen_ = 0;
};

class GemStrategy final : public Strategy {
 public:
  GemStrategy(MlpModel model, float lr, int total_slots, float margin, int num_tasks);

  void train_batch(const Batch& batch) override;
  bool needs_task_boundary() const override { return true; }
  void task_boundary() override { ++current_task_; }

  void save_state(std::ostream& out) const override;
  void load_state(std::istream& in) override;
  std::string name() const override { return "gem"; }

  int per_task_capacity() const { return per_task_capacity_; }
  int current_task() const { return current_task_; }
  std::size_t stored(int task) const { return memory_y_[task].size(); }

 private:
  int per_task_capacity_;
  float margin_;
  int current_task_ = 0;
  std::vector<DenseMatrix> memory_x_;               // per task, stored x 784
  std::vector<std::vector<std::uint8_t>> memory_y_;  // per task labels
};

}  // namespace somlp
