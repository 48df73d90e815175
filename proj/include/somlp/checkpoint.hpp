#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "somlp/matrix.hpp"

namespace somlp {

class Strategy;

// Little-endian binary primitives shared by strategy state and the
// checkpoint container.
namespace ser {

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_floats(std::ostream& out, const float* data, std::size_t n);
void write_matrix(std::ostream& out, const DenseMatrix& m);
void write_bytes(std::ostream& out, const std::uint8_t* data, std::size_t n);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
void read_floats(std::istream& in, float* data, std::size_t n);
DenseMatrix read_matrix(std::istream& in);
void read_bytes(std::istream& in, std::uint8_t* data, std::size_t n);

}  // namespace ser

// Mid-run training position; batches within the current task already
// consumed are not replayed on resume.
struct TrainPosition {
  std::uint32_t task_index = 0;
  std::uint32_t batch_index = 0;
};

// Writes magic, format version, position, and the strategy's full state
// (weights, SOM, schedules, buffers, PRNG words, step counters).
void save_checkpoint(const Strategy& strategy, const TrainPosition& pos, const std::string& path);

// Restores into an already-constructed strategy of the same method; the
// strategy tag in the file must match. Malformed files raise
// std::runtime_error naming what failed.
TrainPosition load_checkpoint(Strategy& strategy, const std::string& path);

}  // namespace somlp
