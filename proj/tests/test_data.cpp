#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "somlp/tasks.hpp"
#include "support/synthetic.hpp"

using namespace somlp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "somlp_data_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("idx round trip through files") {
  const auto dir = temp_dir();
  const auto set = testing::make_synthetic_set(50, 3);
  testing::write_idx_images(set.images, (dir / "imgs").string());
  testing::write_idx_labels(set.labels, (dir / "labs").string());
  const auto images = load_idx_images((dir / "imgs").string());
  const auto labels = load_idx_labels((dir / "labs").string());
  CHECK(images.count == 50);
  CHECK(images.pixels == set.images.pixels);
  CHECK(labels == set.labels);
}

TEST_CASE("idx loader rejects bad magic naming it") {
  const auto dir = temp_dir();
  const auto path = (dir / "badmagic").string();
  {
    std::ofstream out(path, std::ios::binary);
    const char zeros[16] = {};
    out.write(zeros, 16);
  }
  CHECK_THROWS_WITH_AS(load_idx_images(path), doctest::Contains("magic 0"), std::runtime_error);
}

TEST_CASE("idx loader rejects truncated payload") {
  const auto dir = temp_dir();
  const auto set = testing::make_synthetic_set(10, 3);
  const auto path = (dir / "trunc").string();
  testing::write_idx_images(set.images, path);
  fs::resize_file(path, 100);
  CHECK_THROWS_WITH_AS(load_idx_images(path), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("gen_permutation determinism and bijection") {
  const auto p1 = gen_permutation(42, 0);
  const auto p2 = gen_permutation(42, 0);
  CHECK(p1 == p2);
  auto sorted = p1;
  std::sort(sorted.begin(), sorted.end());
  for (std::uint32_t i = 0; i < 784; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("distinct tasks give far-apart permutations") {
  const auto p0 = gen_permutation(42, 0);
  const auto p1 = gen_permutation(42, 1);
  int differing = 0;
  for (int i = 0; i < 784; ++i)
    if (p0[i] != p1[i]) ++differing;
  CHECK(differing >= 700);
}

TEST_CASE("apply_permutation identity, inverse, multiset") {
  std::vector<std::uint32_t> identity(784);
  std::iota(identity.begin(), identity.end(), 0u);
  std::vector<float> x(784);
  Prng prng(1, RngStream::Init);
  for (auto& v : x) v = prng.next_float();

  std::vector<float> out(784);
  apply_permutation(x, identity, out);
  CHECK(out == x);

  const auto perm = gen_permutation(7, 3);
  std::vector<std::uint32_t> inverse(784);
  for (std::uint32_t i = 0; i < 784; ++i) inverse[perm[i]] = i;
  std::vector<float> once(784), back(784);
  apply_permutation(x, perm, once);
  apply_permutation(once, inverse, back);
  CHECK(back == x);

  auto a = x, b = once;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("rotation by 0 is identity") {
  const auto set = testing::make_synthetic_set(1, 5);
  std::uint8_t out[kImageSize];
  rotate_bilinear(set.images.image(0), out, 0.0f);
  CHECK(std::equal(out, out + kImageSize, set.images.image(0)));
}

TEST_CASE("rotation by 180 is point symmetry about center") {
  const auto set = testing::make_synthetic_set(1, 6);
  const std::uint8_t* in = set.images.image(0);
  std::uint8_t out[kImageSize];
  rotate_bilinear(in, out, 180.0f);
  for (int i = 0; i < kImageSide; ++i)
    for (int j = 0; j < kImageSide; ++j)
      CHECK(out[i * kImageSide + j] == in[(27 - i) * kImageSide + (27 - j)]);
}

TEST_CASE("rotation by 90 maps grid onto grid") {
  const auto set = testing::make_synthetic_set(1, 8);
  const std::uint8_t* in = set.images.image(0);
  std::uint8_t out[kImageSize];
  rotate_bilinear(in, out, 90.0f);
  // destination (i,j) takes its value from source (27-j, i)
  for (int i = 0; i < kImageSide; ++i)
    for (int j = 0; j < kImageSide; ++j)
      CHECK(out[i * kImageSide + j] == in[(27 - j) * kImageSide + i]);
}

TEST_CASE("rotation preserves total intensity within bounds") {
  const auto set = testing::make_synthetic_set(1, 9);
  const std::uint8_t* in = set.images.image(0);
  // keep mass away from the borders so nothing rotates out of frame
  std::vector<std::uint8_t> centered(kImageSize, 0);
  for (int i = 8; i < 20; ++i)
    for (int j = 8; j < 20; ++j) centered[i * kImageSide + j] = in[i * kImageSide + j];
  const double total =
      std::accumulate(centered.begin(), centered.end(), 0.0);
  for (float angle : {0.0f, 90.0f, 180.0f}) {
    std::uint8_t out[kImageSize];
    rotate_bilinear(centered.data(), out, angle);
    const double rotated = std::accumulate(out, out + kImageSize, 0.0);
    CHECK(rotated == doctest::Approx(total));
  }
  std::uint8_t out[kImageSize];
  rotate_bilinear(centered.data(), out, 37.0f);
  const double rotated = std::accumulate(out, out + kImageSize, 0.0);
  CHECK(std::abs(rotated - total) / total < 0.05);
}

TEST_CASE("task_angles endpoints and spacing") {
  CHECK(task_angles(2) == std::vector<float>{0.0f, 180.0f});
  const auto angles = task_angles(20);
  CHECK(angles[1] == doctest::Approx(9.4737).epsilon(1e-4));
  for (int t = 2; t < 20; ++t)
    CHECK(angles[t] - angles[t - 1] == doctest::Approx(angles[1] - angles[0]).epsilon(1e-4));
  CHECK_THROWS_AS(task_angles(1), std::invalid_argument);
}

TEST_CASE("rotation stream task 0 equals plain features") {
  const auto data = testing::make_synthetic_mnist(60, 20);
  const auto stream = build_task_stream(DatasetKind::Rotations, data.train, 5, 10, 4, 60);
  Batch batch;
  stream.fill_batch(0, 0, batch);
  // recompute by hand from the shuffle order
  Prng prng(5, RngStream::Shuffle, 0);
  const auto order = shuffled_indices(prng, 60);
  for (int s = 0; s < 10; ++s) {
    const std::uint8_t* img = data.train.images.image(order[s]);
    for (int i = 0; i < kImageSize; ++i)
      CHECK(batch.features.row(s)[i] == doctest::Approx(img[i] / 255.0f));
    CHECK(batch.labels[s] == data.train.labels[order[s]]);
  }
}

TEST_CASE("task stream batch bookkeeping and determinism") {
  const auto data = testing::make_synthetic_mnist(105, 20);
  const auto a = build_task_stream(DatasetKind::Permutations, data.train, 9, 10, 3, 105);
  CHECK(a.batches_per_task() == 11);  // final short batch kept
  Batch last;
  a.fill_batch(2, 10, last);
  CHECK(last.size() == 5);

  const auto b = build_task_stream(DatasetKind::Permutations, data.train, 9, 10, 3, 105);
  Batch ba, bb;
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < a.batches_per_task(); ++i) {
      a.fill_batch(t, i, ba);
      b.fill_batch(t, i, bb);
      CHECK(ba.features == bb.features);
      CHECK(ba.labels == bb.labels);
    }
}

TEST_CASE("transforms preserve labels across a stream") {
  const auto data = testing::make_synthetic_mnist(40, 20);
  for (auto kind : {DatasetKind::Permutations, DatasetKind::Rotations}) {
    const auto stream = build_task_stream(kind, data.train, 3, 40, 4, 40);
    Batch batch;
    for (int t = 0; t < 4; ++t) {
      stream.fill_batch(t, 0, batch);
      std::vector<int> histogram(10, 0), expected(10, 0);
      for (auto l : batch.labels) ++histogram[l];
      for (auto l : data.train.labels) ++expected[l];
      CHECK(histogram == expected);
    }
  }
}

TEST_CASE("pretrain stream sizes per variant") {
  const auto data = testing::make_synthetic_mnist(100, 20);
  const auto stream = build_task_stream(DatasetKind::Rotations, data.train, 11, 10, 20, 100);
  const PretrainStream single(stream, PretrainVariant::Single, 11);
  CHECK(single.total_samples() == 100);
  const PretrainStream multi(stream, PretrainVariant::Multi, 11);
  CHECK(multi.total_samples() == 20 * 10);  // 10% per task, 20 segments
}

TEST_CASE("pretrain multi first segment is untransformed for rotations") {
  const auto data = testing::make_synthetic_mnist(100, 20);
  const auto stream = build_task_stream(DatasetKind::Rotations, data.train, 11, 10, 20, 100);
  const PretrainStream multi(stream, PretrainVariant::Multi, 11);
  DenseMatrix features;
  multi.fill_batch(0, 10, features);
  Prng prng(11, RngStream::SubsetSampling, 0);
  const auto order = shuffled_indices(prng, 100);
  for (int s = 0; s < 10; ++s) {
    const std::uint8_t* img = data.train.images.image(order[s]);
    for (int i = 0; i < kImageSize; ++i)
      CHECK(features.row(s)[i] == doctest::Approx(img[i] / 255.0f));
  }
}
