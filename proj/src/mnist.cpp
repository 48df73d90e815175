#include "somlp/mnist.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace somlp {
namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in)
    throw std::runtime_error(path + ": truncated IDX header at byte offset " +
                             std::to_string(offset));
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open IDX file: " + path);
  return in;
}

std::string find_file(const std::string& dir, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    const std::filesystem::path p = std::filesystem::path(dir) / n;
    if (std::filesystem::exists(p)) return p.string();
  }
  return {};
}

}  // namespace

ImageSet load_idx_images(const std::string& path) {
  std::ifstream in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path, 0);
  if (magic != 2051)
    throw std::runtime_error(path + ": bad IDX magic " + std::to_string(magic) +
                             " at byte offset 0 (expected 2051 for images)");
  const std::uint32_t count = read_be32(in, path, 4);
  const std::uint32_t rows = read_be32(in, path, 8);
  const std::uint32_t cols = read_be32(in, path, 12);
  if (rows != kImageSide || cols != kImageSide)
    throw std::runtime_error(path + ": unexpected image dimensions " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " in header at byte offset 8 (expected 28x28)");
  ImageSet set;
  set.count = count;
  set.pixels.resize(std::size_t(count) * kImageSize);
  in.read(reinterpret_cast<char*>(set.pixels.data()),
          static_cast<std::streamsize>(set.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != set.pixels.size())
    throw std::runtime_error(path + ": truncated image payload at byte offset " +
                             std::to_string(16 + in.gcount()));
  return set;
}

std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
  std::ifstream in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path, 0);
  if (magic != 2049)
    throw std::runtime_error(path + ": bad IDX magic " + std::to_string(magic) +
                             " at byte offset 0 (expected 2049 for labels)");
  const std::uint32_t count = read_be32(in, path, 4);
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (static_cast<std::size_t>(in.gcount()) != labels.size())
    throw std::runtime_error(path + ": truncated label payload at byte offset " +
                             std::to_string(8 + in.gcount()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= kNumClasses)
      throw std::runtime_error(path + ": label value " + std::to_string(labels[i]) +
                               " out of range at byte offset " + std::to_string(8 + i));
  return labels;
}

namespace {

LabeledSet load_split(const std::string& dir, const char* stem_images, const char* stem_labels) {
  const std::string img_dot = std::string(stem_images) + ".idx3-ubyte";
  const std::string img_dash = std::string(stem_images) + "-idx3-ubyte";
  const std::string lab_dot = std::string(stem_labels) + ".idx1-ubyte";
  const std::string lab_dash = std::string(stem_labels) + "-idx1-ubyte";
  const std::string img_path = find_file(dir, {img_dot.c_str(), img_dash.c_str()});
  const std::string lab_path = find_file(dir, {lab_dot.c_str(), lab_dash.c_str()});
  if (img_path.empty() || lab_path.empty())
    throw std::runtime_error("MNIST files for '" + std::string(stem_images) + "' not found in " +
                             dir);
  LabeledSet set;
  set.images = load_idx_images(img_path);
  set.labels = load_idx_labels(lab_path);
  if (set.images.count != set.labels.size())
    throw std::runtime_error(dir + ": image/label count mismatch (" +
                             std::to_string(set.images.count) + " vs " +
                             std::to_string(set.labels.size()) + ")");
  return set;
}

}  // namespace

MnistData load_mnist(const std::string& dir) {
  MnistData data;
  data.train = load_split(dir, "train-images", "train-labels");
  data.test = load_split(dir, "t10k-images", "t10k-labels");
  return data;
}

bool mnist_available(const std::string& dir) {
  auto present = [&](const char* a, const char* b) { return !find_file(dir, {a, b}).empty(); };
  return present("train-images.idx3-ubyte", "train-images-idx3-ubyte") &&
         present("train-labels.idx1-ubyte", "train-labels-idx1-ubyte") &&
         present("t10k-images.idx3-ubyte", "t10k-images-idx3-ubyte") &&
         present("t10k-labels.idx1-ubyte", "t10k-labels-idx1-ubyte");
}

}  // namespace somlp
