#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace somlp {

inline constexpr int kImageSide = 28;
inline constexpr int kImageSize = kImageSide * kImageSide;
inline constexpr int kNumClasses = 10;

struct ImageSet {
  std::uint32_t count = 0;
  std::vector<std::uint8_t> pixels;  // count * 784, row-major per image

  const std::uint8_t* image(std::size_t i) const { return pixels.data() + i * kImageSize; }
};

// One split: images plus labels, sizes matched.
struct LabeledSet {
  ImageSet images;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct MnistData {
  LabeledSet train;
  LabeledSet test;
};

// IDX readers (big-endian headers, magic 2051 for images / 2049 for labels).
// Malformed input raises std::runtime_error naming the byte offset.
ImageSet load_idx_images(const std::string& path);
std::vector<std::uint8_t> load_idx_labels(const std::string& path);

// Loads the four standard MNIST files from `dir`, accepting both the
// original dotted names (train-images.idx3-ubyte) and the dashed ones
// (train-images-idx3-ubyte).
MnistData load_mnist(const std::string& dir);

// True when all four files are present.
bool mnist_available(const std::string& dir);

}  // namespace somlp
