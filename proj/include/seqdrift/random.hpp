#pragma once

#include <cstdint>
#include <limits>

namespace seqdrift {

/// SplitMix64 bit generator. Cheap to construct, so a fresh engine can be
/// keyed for every individual draw.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

 private:
  std::uint64_t state_;
};

/// Finalising 64-bit mixer (the SplitMix64 output function).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based key derivation: the seed for draw `index` of stream
/// `stream_id` under `master`. Pure, so draws can be generated in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id, std::uint64_t index) noexcept;

/// A (master seed, stream id) pair naming one reproducible random stream.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  [[nodiscard]] SplitMix64 engine_at(std::uint64_t index) const noexcept {
    return SplitMix64(derive_seed(seed, stream_id, index));
  }
  /// Key for a sub-stream, e.g. one Monte Carlo run.
  [[nodiscard]] StreamKey child(std::uint64_t id) const noexcept {
    return StreamKey{derive_seed(seed, stream_id, ~std::uint64_t{0}), id};
  }
};

}  // namespace seqdrift
