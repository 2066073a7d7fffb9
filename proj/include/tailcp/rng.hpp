#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tailcp {

/// Deterministic random stream addressed by (seed, path...). Every
/// replicate/cell/purpose opens its own stream, so results do not depend
/// on scheduling or thread count. Draw order within a stream is fixed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on (0, 1), endpoints excluded.
  double uniform();

  /// Standard normal via Box-Muller; two uniforms consumed per draw.
  double normal();

 private:
  std::mt19937_64 eng_;
};

/// Purpose tags keep streams for different pipeline stages disjoint.
enum class StreamPurpose : std::uint64_t {
  data = 1,
  bootstrap = 2,
  intervals = 3,
  experiment = 4,
};

}  // namespace tailcp
