#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somlp/matrix.hpp"
#include "somlp/mnist.hpp"
#include "somlp/rng.hpp"

namespace somlp {

enum class DatasetKind { Permutations, Rotations };

// One transformed-MNIST task: either a pixel permutation or a rotation angle.
struct TaskSpec {
  enum class Kind { Permutation, Rotation };
  int index = 0;
  Kind kind = Kind::Permutation;
  std::vector<std::uint32_t> permutation;  // bijection on 0..783 (Permutation only)
  float angle_degrees = 0.0f;              // in [0,180] (Rotation only)
};

// Deterministic pixel permutation for task `task_index` under `master_seed`.
std::vector<std::uint32_t> gen_permutation(std::uint64_t master_seed, int task_index);

// out[i] = in[perm[i]]
void apply_permutation(std::span<const float> in, std::span<const std::uint32_t> perm,
                       std::span<float> out);

// Inverse-mapping rotation about the image center (13.5, 13.5) with bilinear
// interpolation; source positions outside the grid contribute 0.
void rotate_bilinear(const std::uint8_t* in, std::uint8_t* out, float angle_degrees);

// Evenly spaced angles over [0,180] inclusive: 180*t/(num_tasks-1).
std::vector<float> task_angles(int num_tasks);

// Applies `task` to a raw image and scales to [0,1] features.
void transform_image(const TaskSpec& task, const std::uint8_t* image, float* features_out);

struct Batch {
  DenseMatrix features;               // batch_size x 784
  std::vector<std::uint8_t> labels;   // batch_size
  std::size_t size() const { return labels.size(); }
};

// A fixed sequence of tasks over one labeled split, consumed one epoch per
// task in shuffled order. Transforms are applied lazily per batch.
class TaskStream {
 public:
  TaskStream(const LabeledSet* data, std::vector<TaskSpec> tasks, std::uint64_t master_seed,
             int batch_size, int samples_per_task);

  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  int batch_size() const { return batch_size_; }
  int samples_per_task() const { return samples_per_task_; }
  int batches_per_task() const;  // final short batch kept
  const TaskSpec& task(int t) const { return tasks_[t]; }
  const LabeledSet& data() const { return *data_; }
  std::uint64_t master_seed() const { return master_seed_; }

  // Deterministic in (master_seed, task, batch_index).
  void fill_batch(int task, int batch_index, Batch& out) const;

 private:
  const LabeledSet* data_;
  std::vector<TaskSpec> tasks_;
  std::uint64_t master_seed_;
  int batch_size_;
  int samples_per_task_;
  std::vector<std::vector<std::uint32_t>> order_;  // per-task shuffled sample indices
};

TaskStream build_task_stream(DatasetKind kind, const LabeledSet& train, std::uint64_t master_seed,
                             int batch_size, int num_tasks = 20, int samples_per_task = 60000);

// Same TaskSpecs applied to the test split.
TaskStream build_eval_stream(const TaskStream& train_stream, const LabeledSet& test,
                             int batch_size);

enum class PretrainVariant { Single, Multi };  // SOMLP_s / SOMLP_m

// Unlabeled feature stream for SOM pretraining. Variant Single is one shuffled
// epoch of the untransformed training inputs; variant Multi is a deterministic
// 10% subsample of each task's transformed inputs, sequentially per task.
class PretrainStream {
 public:
  PretrainStream(const TaskStream& train_stream, PretrainVariant variant,
                 std::uint64_t master_seed);

  std::size_t total_samples() const { return entries_.size(); }
  int num_batches(int batch_size) const;
  // Features only, no labels.
  void fill_batch(int batch_index, int batch_size, DenseMatrix& out) const;
  PretrainVariant variant() const { return variant_; }

 private:
  const TaskStream* stream_;
  PretrainVariant variant_;
  std::vector<std::pair<int, std::uint32_t>> entries_;  // (task index or -1 for raw, sample index)
};

}  // namespace somlp
