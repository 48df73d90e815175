#include "somlp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "somlp/strategies.hpp"

namespace somlp {
namespace ser {
namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }

void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_le(out, bits);
}

void write_floats(std::ostream& out, const float* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) write_f32(out, data[i]);
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  write_u32(out, 2);
  write_u32(out, static_cast<std::uint32_t>(m.rows));
  write_u32(out, static_cast<std::uint32_t>(m.cols));
  write_floats(out, m.values.data(), m.values.size());
}

void write_bytes(std::ostream& out, const std::uint8_t* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }

float read_f32(std::istream& in) {
  const std::uint32_t bits = read_le<std::uint32_t>(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void read_floats(std::istream& in, float* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) data[i] = read_f32(in);
}

DenseMatrix read_matrix(std::istream& in) {
  const std::uint32_t ndim = read_u32(in);
  if (ndim != 2) throw std::runtime_error("checkpoint: bad array rank " + std::to_string(ndim));
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  DenseMatrix m(rows, cols);
  read_floats(in, m.values.data(), m.values.size());
  return m;
}

void read_bytes(std::istream& in, std::uint8_t* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw std::runtime_error("checkpoint: truncated byte payload");
}

}  // namespace ser

namespace {
constexpr char kMagic[8] = {'S', 'O', 'M', 'L', 'P', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const Strategy& strategy, const TrainPosition& pos, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  ser::write_u32(out, kVersion);
  const std::string tag = strategy.name();
  ser::write_u32(out, static_cast<std::uint32_t>(tag.size()));
  out.write(tag.data(), static_cast<std::streamsize>(tag.size()));
  ser::write_u32(out, pos.task_index);
  ser::write_u32(out, pos.batch_index);
  strategy.save_state(out);
  if (!out) throw std::runtime_error("write failure on checkpoint: " + path);
}

TrainPosition load_checkpoint(Strategy& strategy, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error(path + ": bad checkpoint magic '" + std::string(magic, in ? 8 : 0) +
                             "' (expected SOMLPCKP)");
  const std::uint32_t version = ser::read_u32(in);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t tag_len = ser::read_u32(in);
  std::string tag(tag_len, '\0');
  in.read(tag.data(), tag_len);
  if (!in || tag != strategy.name())
    throw std::runtime_error(path + ": checkpoint method '" + tag + "' does not match '" +
                             strategy.name() + "'");
  TrainPosition pos;
  pos.task_index = ser::read_u32(in);
  pos.batch_index = ser::read_u32(in);
  strategy.load_state(in);
  return pos;
}

}  // namespace somlp
