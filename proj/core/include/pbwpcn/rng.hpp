#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pbwpcn {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block is a
/// pure function of (counter, key), so any draw can be addressed directly.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// 64-bit stream addressed by (seed, stream, substream). Changing the number
/// of streams in a run never reshuffles the draws of existing ones.
/// Satisfies UniformRandomBitGenerator.
class SubstreamRng {
 public:
  using result_type = std::uint64_t;

  SubstreamRng(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform_pos();

  /// Unit-mean exponential variate.
  double exponential();

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter buf_{};
  int used_ = 4;
};

}  // namespace pbwpcn
