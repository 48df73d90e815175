#include "somlp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace somlp {

std::vector<std::uint32_t> gen_permutation(std::uint64_t master_seed, int task_index) {
  Prng prng(master_seed, RngStream::PermutationGen, static_cast<std::uint64_t>(task_index));
  return shuffled_indices(prng, kImageSize);
}

void apply_permutation(std::span<const float> in, std::span<const std::uint32_t> perm,
                       std::span<float> out) {
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = in[perm[i]];
}

void rotate_bilinear(const std::uint8_t* in, std::uint8_t* out, float angle_degrees) {
  constexpr double kCenter = (kImageSide - 1) / 2.0;  // 13.5
  const double rad = angle_degrees * (M_PI / 180.0);
  const double c = std::cos(rad), s = std::sin(rad);
  for (int i = 0; i < kImageSide; ++i) {
    for (int j = 0; j < kImageSide; ++j) {
      // inverse map: rotate destination coordinates by -angle
      const double dy = i - kCenter, dx = j - kCenter;
      const double sy = c * dy - s * dx + kCenter;
      const double sx = s * dy + c * dx + kCenter;
      const int y0 = static_cast<int>(std::floor(sy));
      const int x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0, fx = sx - x0;
      double acc = 0.0;
      for (int t = 0; t < 4; ++t) {
        const int yy = y0 + (t >> 1), xx = x0 + (t & 1);
        if (yy < 0 || yy >= kImageSide || xx < 0 || xx >= kImageSide) continue;
        const double w = ((t >> 1) ? fy : 1.0 - fy) * ((t & 1) ? fx : 1.0 - fx);
        acc += w * in[yy * kImageSide + xx];
      }
      const long v = std::lround(acc);
      out[i * kImageSide + j] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
  }
}

std::vector<float> task_angles(int num_tasks) {
  if (num_tasks < 2) throw std::invalid_argument("task_angles: need at least 2 tasks");
  std::vector<float> angles(num_tasks);
  for (int t = 0; t < num_tasks; ++t)
    angles[t] = static_cast<float>(180.0 * t / (num_tasks - 1));
  return angles;
}

void transform_image(const TaskSpec& task, const std::uint8_t* image, float* features_out) {
  constexpr float kScale = 1.0f / 255.0f;
  if (task.kind == TaskSpec::Kind::Permutation) {
    for (int i = 0; i < kImageSize; ++i) features_out[i] = image[task.permutation[i]] * kScale;
  } else {
    std::uint8_t rotated[kImageSize];
    rotate_bilinear(image, rotated, task.angle_degrees);
    for (int i = 0; i < kImageSize; ++i) features_out[i] = rotated[i] * kScale;
  }
}

TaskStream::TaskStream(const LabeledSet* data, std::vector<TaskSpec> tasks,
                       std::uint64_t master_seed, int batch_size, int samples_per_task)
    : data_(data),
      tasks_(std::move(tasks)),
      master_seed_(master_seed),
      batch_size_(batch_size),
      samples_per_task_(samples_per_task) {
  if (batch_size_ < 1) throw std::invalid_argument("TaskStream: batch_size must be >= 1");
  if (samples_per_task_ < 1 || static_cast<std::size_t>(samples_per_task_) > data_->size())
    throw std::invalid_argument("TaskStream: samples_per_task out of range for split of size " +
                                std::to_string(data_->size()));
  order_.reserve(tasks_.size());
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    Prng prng(master_seed_, RngStream::Shuffle, t);
    auto idx = shuffled_indices(prng, data_->size());
    idx.resize(samples_per_task_);
    order_.push_back(std::move(idx));
  }
}

int TaskStream::batches_per_task() const {
  return (samples_per_task_ + batch_size_ - 1) / batch_size_;
}

void TaskStream::fill_batch(int task, int batch_index, Batch& out) const {
  const auto& order = order_[task];
  const std::size_t begin = static_cast<std::size_t>(batch_index) * batch_size_;
  const std::size_t end = std::min(begin + batch_size_, order.size());
  if (begin >= order.size())
    throw std::out_of_range("TaskStream::fill_batch: batch index " + std::to_string(batch_index) +
                            " past end of task");
  const std::size_t n = end - begin;
  out.features = DenseMatrix(n, kImageSize);
  out.labels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint32_t sample = order[begin + k];
    transform_image(tasks_[task], data_->images.image(sample), out.features.row(k));
    out.labels[k] = data_->labels[sample];
  }
}

TaskStream build_task_stream(DatasetKind kind, const LabeledSet& train, std::uint64_t master_seed,
                             int batch_size, int num_tasks, int samples_per_task) {
  std::vector<TaskSpec> tasks(num_tasks);
  if (kind == DatasetKind::Permutations) {
    for (int t = 0; t < num_tasks; ++t) {
      tasks[t].index = t;
      tasks[t].kind = TaskSpec::Kind::Permutation;
      tasks[t].permutation = gen_permutation(master_seed, t);
    }
  } else {
    const auto angles = task_angles(num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      tasks[t].index = t;
      tasks[t].kind = TaskSpec::Kind::Rotation;
      tasks[t].angle_degrees = angles[t];
    }
  }
  return TaskStream(&train, std::move(tasks), master_seed, batch_size, samples_per_task);
}

TaskStream build_eval_stream(const TaskStream& train_stream, const LabeledSet& test,
                             int batch_size) {
  std::vector<TaskSpec> tasks;
  tasks.reserve(train_stream.num_tasks());
  for (int t = 0; t < train_stream.num_tasks(); ++t) tasks.push_back(train_stream.task(t));
  return TaskStream(&test, std::move(tasks), train_stream.master_seed(), batch_size,
                    static_cast<int>(test.size()));
}

PretrainStream::PretrainStream(const TaskStream& train_stream, PretrainVariant variant,
                               std::uint64_t master_seed)
    : stream_(&train_stream), variant_(variant) {
  const auto& data = train_stream.data();
  if (variant == PretrainVariant::Single) {
    // one epoch of raw MNIST inputs
    Prng prng(master_seed, RngStream::SubsetSampling, 0xFFFF);
    auto idx = shuffled_indices(prng, data.size());
    entries_.reserve(idx.size());
    for (std::uint32_t i : idx) entries_.emplace_back(-1, i);
  } else {
    // 10% of each task's transformed training inputs, sequentially per task
    const std::size_t subset = data.size() / 10;
    for (int t = 0; t < train_stream.num_tasks(); ++t) {
      Prng prng(master_seed, RngStream::SubsetSampling, static_cast<std::uint64_t>(t));
      auto idx = shuffled_indices(prng, data.size());
      idx.resize(subset);
      for (std::uint32_t i : idx) entries_.emplace_back(t, i);
    }
  }
}

int PretrainStream::num_batches(int batch_size) const {
  return static_cast<int>((entries_.size() + batch_size - 1) / batch_size);
}

void PretrainStream::fill_batch(int batch_index, int batch_size, DenseMatrix& out) const {
  const std::size_t begin = static_cast<std::size_t>(batch_index) * batch_size;
  const std::size_t end = std::min(begin + batch_size, entries_.size());
  if (begin >= entries_.size())
    throw std::out_of_range("PretrainStream::fill_batch: batch index past end");
  const std::size_t n = end - begin;
  out = DenseMatrix(n, kImageSize);
  const auto& data = stream_->data();
  constexpr float kScale = 1.0f / 255.0f;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [task, sample] = entries_[begin + k];
    const std::uint8_t* img = data.images.image(sample);
    if (task < 0) {
      for (int i = 0; i < kImageSize; ++i) out.row(k)[i] = img[i] * kScale;
    } else {
      transform_image(stream_->task(task), img, out.row(k));
    }
  }
}

}  // namespace somlp
