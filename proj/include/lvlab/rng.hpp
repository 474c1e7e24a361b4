#pragma once

#include <array>
#include <cstdint>

namespace lvlab {

// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Independent stream for one (master_seed, stream_id) pair. Draws are a pure function
// of the pair and the number of draws taken so far.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  // Uniform on (0,1), 53 random bits, never exactly 0 or 1.
  double uniform();
  double normal();
  // Poisson by inversion; meant for small means.
  std::uint64_t poisson(double mean);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Mixes a 64-bit value (splitmix64 finalizer); used to derive per-path seeds.
std::uint64_t mix64(std::uint64_t v);

}  // namespace lvlab
