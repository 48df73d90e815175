#pragma once

// Synthetic MNIST-shaped data for tests that must run without the real
// dataset. Each class gets a fixed blob template; samples add seeded noise.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "somlp/mnist.hpp"
#include "somlp/rng.hpp"

namespace somlp::testing {

inline LabeledSet make_synthetic_set(std::size_t count, std::uint64_t seed) {
  LabeledSet set;
  set.images.count = static_cast<std::uint32_t>(count);
  set.images.pixels.resize(count * kImageSize);
  set.labels.resize(count);
  Prng prng(seed, RngStream::Init, 0xDA7A);
  for (std::size_t s = 0; s < count; ++s) {
    const int label = static_cast<int>(prng.next_below(kNumClasses));
    set.labels[s] = static_cast<std::uint8_t>(label);
    std::uint8_t* img = set.images.pixels.data() + s * kImageSize;
    // class-dependent bright blob at a fixed position, noisy background
    const int cy = 4 + 2 * (label / 5) * 8 + (label % 5);
    const int cx = 4 + (label % 5) * 4;
    for (int i = 0; i < kImageSide; ++i) {
      for (int j = 0; j < kImageSide; ++j) {
        const int dy = i - cy, dx = j - cx;
        const int d2 = dy * dy + dx * dx;
        int v = d2 <= 16 ? 250 - 10 * d2 : 0;
        v += static_cast<int>(prng.next_below(30));
        img[i * kImageSide + j] = static_cast<std::uint8_t>(v > 255 ? 255 : v);
      }
    }
  }
  return set;
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_idx_images(const ImageSet& images, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, 2051);
  write_be32(out, images.count);
  write_be32(out, kImageSide);
  write_be32(out, kImageSide);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

inline void write_idx_labels(const std::vector<std::uint8_t>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, 2049);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

inline MnistData make_synthetic_mnist(std::size_t train_count, std::size_t test_count,
                                      std::uint64_t seed = 7) {
  MnistData data;
  data.train = make_synthetic_set(train_count, seed);
  data.test = make_synthetic_set(test_count, seed + 1);
  return data;
}

}  // namespace somlp::testing
